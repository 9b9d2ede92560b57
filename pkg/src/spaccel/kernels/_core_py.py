"""Pure-Python kernel backend.

Mirrors the compiled core exactly: same signatures, same results, same
counter semantics. Inner loops are vectorized over one axis with numpy where
that cannot change the counted trip counts; counters always equal the trip
counts of the literal loop nests.
"""

import numpy as np


def dense_gemm(a, b):
    M, K = a.shape
    N = b.shape[1]
    out = np.zeros((M, N))
    for m in range(M):
        row = out[m]
        am = a[m]
        for k in range(K):
            row += am[k] * b[k]
    total = M * K * N
    return out, total, total, 0


def spmm_a_compressed(pos, crd, val, b):
    # A in UMCK, B dense: stream A's nonzeros, touch full B rows.
    M = pos.shape[0] - 1
    N = b.shape[1]
    out = np.zeros((M, N))
    for m in range(M):
        row = out[m]
        for j in range(pos[m], pos[m + 1]):
            row += val[j] * b[crd[j]]
    nnz = crd.shape[0]
    return out, nnz * N, nnz * N, 0


def spmm_b_compressed(a, pos, crd, val):
    # A dense, B in UNCK: per B column, stream its nonzeros across all rows.
    M = a.shape[0]
    N = pos.shape[0] - 1
    out = np.zeros((M, N))
    for n in range(N):
        col = out[:, n]
        for j in range(pos[n], pos[n + 1]):
            col += a[:, crd[j]] * val[j]
    nnz = crd.shape[0]
    return out, nnz * M, nnz * M, 0


def _merge_steps(u, v):
    # Comparison count of the two-pointer walk over sorted u, v without
    # running it: the walk stops when one list exhausts; every step does one
    # comparison and consumes the smaller head (both heads on a match).
    if u.shape[0] == 0 or v.shape[0] == 0:
        return 0
    matches = np.intersect1d(u, v, assume_unique=True).shape[0]
    if u[-1] == v[-1]:
        return u.shape[0] + v.shape[0] - matches
    if u[-1] < v[-1]:
        consumed_v = int(np.searchsorted(v, u[-1], side="right"))
        return u.shape[0] + consumed_v - matches
    consumed_u = int(np.searchsorted(u, v[-1], side="right"))
    return consumed_u + v.shape[0] - matches


def spgemm_inner(pos_a, crd_a, val_a, pos_b, crd_b, val_b):
    # A in UMCK, B in UNCK: coordinate intersection per output element.
    M = pos_a.shape[0] - 1
    N = pos_b.shape[0] - 1
    out = np.zeros((M, N))
    comparisons = 0
    macs = 0
    for m in range(M):
        ka = crd_a[pos_a[m] : pos_a[m + 1]]
        va = val_a[pos_a[m] : pos_a[m + 1]]
        for n in range(N):
            kb = crd_b[pos_b[n] : pos_b[n + 1]]
            vb = val_b[pos_b[n] : pos_b[n + 1]]
            comparisons += _merge_steps(ka, kb)
            common, ia, ib = np.intersect1d(ka, kb, assume_unique=True, return_indices=True)
            if common.shape[0]:
                out[m, n] = va[ia] @ vb[ib]
                macs += common.shape[0]
    return out, comparisons, macs, comparisons


def spgemm_outer(pos_a, crd_a, val_a, pos_b, crd_b, val_b, M, N):
    # A in UKCM, B in UKCN: rank-1 update per shared k slice.
    K = pos_a.shape[0] - 1
    out = np.zeros((M, N))
    macs = 0
    for k in range(K):
        rows = crd_a[pos_a[k] : pos_a[k + 1]]
        if rows.shape[0] == 0:
            continue
        cols = crd_b[pos_b[k] : pos_b[k + 1]]
        if cols.shape[0] == 0:
            continue
        va = val_a[pos_a[k] : pos_a[k + 1]]
        vb = val_b[pos_b[k] : pos_b[k + 1]]
        out[np.ix_(rows, cols)] += np.outer(va, vb)
        macs += rows.shape[0] * cols.shape[0]
    return out, macs, macs, 0


def spgemm_gustavson(pos_a, crd_a, val_a, pos_b, crd_b, val_b, M):
    # A in UKCM, B in UNCK: per B column, stream the matching A columns.
    N = pos_b.shape[0] - 1
    out = np.zeros((M, N))
    macs = 0
    for n in range(N):
        col = out[:, n]
        for j in range(pos_b[n], pos_b[n + 1]):
            k = crd_b[j]
            rows = crd_a[pos_a[k] : pos_a[k + 1]]
            if rows.shape[0]:
                col[rows] += val_a[pos_a[k] : pos_a[k + 1]] * val_b[j]
                macs += rows.shape[0]
    return out, macs, macs, 0
