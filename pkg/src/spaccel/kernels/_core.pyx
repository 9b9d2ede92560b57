# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend: the literal loop nests, counted exactly."""

import numpy as np


def dense_gemm(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t M = a.shape[0], K = a.shape[1], N = b.shape[1]
    out = np.zeros((M, N))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t m, k, n
    cdef double av
    for m in range(M):
        for k in range(K):
            av = a[m, k]
            for n in range(N):
                o[m, n] += av * b[k, n]
    cdef long long total = <long long> M * K * N
    return out, total, total, 0


def spmm_a_compressed(const long[::1] pos, const long[::1] crd, const double[::1] val, const double[:, ::1] b):
    cdef Py_ssize_t M = pos.shape[0] - 1, N = b.shape[1]
    out = np.zeros((M, N))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t m, j, n, k
    cdef double av
    cdef long long iters = 0
    for m in range(M):
        for j in range(pos[m], pos[m + 1]):
            k = crd[j]
            av = val[j]
            for n in range(N):
                o[m, n] += av * b[k, n]
            iters += N
    return out, iters, iters, 0


def spmm_b_compressed(const double[:, ::1] a, const long[::1] pos, const long[::1] crd, const double[::1] val):
    cdef Py_ssize_t M = a.shape[0], N = pos.shape[0] - 1
    out = np.zeros((M, N))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t n, j, m, k
    cdef double bv
    cdef long long iters = 0
    for n in range(N):
        for j in range(pos[n], pos[n + 1]):
            k = crd[j]
            bv = val[j]
            for m in range(M):
                o[m, n] += a[m, k] * bv
            iters += M
    return out, iters, iters, 0


def spgemm_inner(const long[::1] pos_a, const long[::1] crd_a, const double[::1] val_a,
                 const long[::1] pos_b, const long[::1] crd_b, const double[::1] val_b):
    cdef Py_ssize_t M = pos_a.shape[0] - 1, N = pos_b.shape[0] - 1
    out = np.zeros((M, N))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t m, n, pa, pb, ea, eb
    cdef long long comparisons = 0, macs = 0
    cdef double acc
    for m in range(M):
        for n in range(N):
            pa = pos_a[m]
            ea = pos_a[m + 1]
            pb = pos_b[n]
            eb = pos_b[n + 1]
            acc = 0.0
            while pa < ea and pb < eb:
                comparisons += 1
                if crd_a[pa] == crd_b[pb]:
                    acc += val_a[pa] * val_b[pb]
                    macs += 1
                    pa += 1
                    pb += 1
                elif crd_a[pa] < crd_b[pb]:
                    pa += 1
                else:
                    pb += 1
            o[m, n] = acc
    return out, comparisons, macs, comparisons


def spgemm_outer(const long[::1] pos_a, const long[::1] crd_a, const double[::1] val_a,
                 const long[::1] pos_b, const long[::1] crd_b, const double[::1] val_b,
                 Py_ssize_t M, Py_ssize_t N):
    cdef Py_ssize_t K = pos_a.shape[0] - 1
    out = np.zeros((M, N))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t k, ja, jb
    cdef double av
    cdef long long macs = 0
    for k in range(K):
        for ja in range(pos_a[k], pos_a[k + 1]):
            av = val_a[ja]
            for jb in range(pos_b[k], pos_b[k + 1]):
                o[crd_a[ja], crd_b[jb]] += av * val_b[jb]
                macs += 1
    return out, macs, macs, 0


def spgemm_gustavson(const long[::1] pos_a, const long[::1] crd_a, const double[::1] val_a,
                     const long[::1] pos_b, const long[::1] crd_b, const double[::1] val_b,
                     Py_ssize_t M):
    cdef Py_ssize_t N = pos_b.shape[0] - 1
    out = np.zeros((M, N))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t n, jb, ja, k
    cdef double bv
    cdef long long macs = 0
    for n in range(N):
        for jb in range(pos_b[n], pos_b[n + 1]):
            k = crd_b[jb]
            bv = val_b[jb]
            for ja in range(pos_a[k], pos_a[k + 1]):
                o[crd_a[ja], n] += val_a[ja] * bv
                macs += 1
    return out, macs, macs, 0
