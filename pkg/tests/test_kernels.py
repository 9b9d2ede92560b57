import numpy as np
import pytest

from spaccel.formats import (
    CSC_A,
    CSC_B,
    CSR_A,
    CSR_B,
    DENSE_B,
    compress,
    dense_matrix,
    gen_uniform_random,
)
from spaccel.kernels import (
    BACKEND,
    KERNEL_BY_PAIR,
    KernelCounters,
    KernelError,
    _core_py,
    run_dense_gemm,
    run_pair,
    run_spgemm_gustavson,
    run_spgemm_inner,
    run_spgemm_outer,
    run_spmm_eie,
)
from conftest import matched_pair_count, triple_loop_matmul


def _rand_operands(m, k, n, d_a, d_b, seed):
    a = gen_uniform_random(m, k, d_a, seed)
    b = gen_uniform_random(k, n, d_b, seed + 1, ccf=DENSE_B)
    return a, b


class TestDenseGemm:
    def test_iterations_4x4x4(self):
        a, b = _rand_operands(4, 4, 4, 1.0, 1.0, 0)
        r = run_dense_gemm(a, b)
        assert r.counters.loop_iterations == 64
        assert r.counters.macs == 64

    def test_identity_operand(self):
        b = gen_uniform_random(5, 7, 0.8, seed=2, ccf=DENSE_B)
        r = run_dense_gemm(dense_matrix(np.eye(5)), b)
        assert np.array_equal(r.output.dense, b.dense)

    def test_matches_triple_loop(self):
        a, b = _rand_operands(5, 7, 3, 1.0, 1.0, 3)
        r = run_dense_gemm(a, b)
        assert np.array_equal(r.output.dense, triple_loop_matmul(a.dense, b.dense))

    def test_shape_mismatch(self):
        a = dense_matrix(np.ones((2, 3)))
        b = dense_matrix(np.ones((4, 2)), DENSE_B)
        with pytest.raises(KernelError):
            run_dense_gemm(a, b)

    def test_wrong_ccf(self):
        a, b = _rand_operands(3, 3, 3, 0.5, 1.0, 4)
        with pytest.raises(KernelError):
            run_dense_gemm(compress(a, CSR_A), b)


class TestSpmm:
    def test_empty_compressed_operand(self):
        a = dense_matrix(np.ones((3, 4)))
        b = compress(dense_matrix(np.zeros((4, 2)), DENSE_B), CSC_B)
        r = run_spmm_eie(a, b)
        assert r.counters.macs == 0
        assert not r.output.dense.any()

    def test_b_compressed_iterations(self):
        # one nonzero per column of a 4x4 B: streaming touches M rows per nonzero
        grid = np.diag([2.0, 3.0, 4.0, 5.0])
        b = compress(dense_matrix(grid, DENSE_B), CSC_B)
        a = dense_matrix(np.ones((4, 4)))
        r = run_spmm_eie(a, b)
        assert r.counters.loop_iterations == 4 * b.nnz == 16

    def test_a_compressed_iterations(self):
        a, b = _rand_operands(6, 5, 7, 0.4, 1.0, 5)
        ca = compress(a, CSR_A)
        r = run_spmm_eie(ca, b)
        assert r.counters.loop_iterations == ca.nnz * 7
        assert np.array_equal(r.output.dense, a.dense @ b.dense)

    def test_both_dense_rejected(self):
        a, b = _rand_operands(3, 3, 3, 1.0, 1.0, 6)
        with pytest.raises(KernelError):
            run_spmm_eie(a, b)

    def test_both_compressed_rejected(self):
        a, b = _rand_operands(3, 3, 3, 0.5, 0.5, 7)
        with pytest.raises(KernelError):
            run_spmm_eie(compress(a, CSR_A), compress(b, CSC_B))


class TestSpgemmInner:
    def test_disjoint_coordinates(self):
        a = compress(dense_matrix(np.array([[1.0, 0.0, 0.0, 0.0]])), CSR_A)
        b = compress(dense_matrix(np.array([[0.0], [0.0], [0.0], [2.0]]), DENSE_B), CSC_B)
        r = run_spgemm_inner(a, b)
        assert r.counters.macs == 0
        assert r.output.dense[0, 0] == 0

    def test_identity_intersection(self):
        eye = np.eye(3)
        r = run_spgemm_inner(
            compress(dense_matrix(eye), CSR_A),
            compress(dense_matrix(eye, DENSE_B), CSC_B),
        )
        assert np.array_equal(r.output.dense, eye)
        assert r.counters.macs == 3

    def test_macs_equal_brute_force_matched_pairs(self):
        a, b = _rand_operands(10, 12, 9, 0.1, 0.1, 8)
        r = run_spgemm_inner(compress(a, CSR_A), compress(b, CSC_B))
        assert r.counters.macs == matched_pair_count(a.dense, b.dense)
        assert np.array_equal(r.output.dense, a.dense @ b.dense)

    def test_comparisons_bounded_by_list_lengths(self):
        a, b = _rand_operands(8, 20, 8, 0.3, 0.3, 9)
        ca, cb = compress(a, CSR_A), compress(b, CSC_B)
        r = run_spgemm_inner(ca, cb)
        assert r.counters.index_comparisons <= 8 * cb.nnz + 8 * ca.nnz
        assert r.counters.macs <= r.counters.loop_iterations

    def test_full_density_comparisons(self):
        # every coordinate matches: K comparisons and K macs per output element
        a, b = _rand_operands(4, 6, 5, 1.0, 1.0, 10)
        r = run_spgemm_inner(compress(a, CSR_A), compress(b, CSC_B))
        assert r.counters.macs == 4 * 6 * 5
        assert r.counters.index_comparisons == 4 * 6 * 5


class TestSpgemmOuter:
    def test_single_k_slice(self):
        a = np.zeros((4, 1)); a[1, 0] = 2.0; a[3, 0] = 1.0
        b = np.zeros((1, 5)); b[0, 0] = 1.0; b[0, 2] = 3.0; b[0, 4] = 4.0
        r = run_spgemm_outer(
            compress(dense_matrix(a), CSC_A),
            compress(dense_matrix(b, DENSE_B), CSR_B),
        )
        assert r.counters.macs == 6
        assert np.count_nonzero(r.output.dense) <= 6
        assert np.array_equal(r.output.dense, a @ b)

    def test_all_zero_a(self):
        a = compress(dense_matrix(np.zeros((3, 4))), CSC_A)
        b = compress(gen_uniform_random(4, 5, 0.5, 11, ccf=DENSE_B), CSR_B)
        r = run_spgemm_outer(a, b)
        assert r.counters.macs == 0
        assert not r.output.dense.any()

    def test_macs_equal_per_slice_tally(self):
        a, b = _rand_operands(9, 14, 11, 0.2, 0.3, 12)
        r = run_spgemm_outer(compress(a, CSC_A), compress(b, CSR_B))
        tally = sum(
            int(np.count_nonzero(a.dense[:, k])) * int(np.count_nonzero(b.dense[k]))
            for k in range(14)
        )
        assert r.counters.macs == tally
        assert np.array_equal(r.output.dense, a.dense @ b.dense)


class TestSpgemmGustavson:
    def test_single_b_nonzero_streams_one_a_column(self):
        a = gen_uniform_random(6, 4, 0.5, 13)
        bgrid = np.zeros((4, 3)); bgrid[2, 1] = 5.0
        r = run_spgemm_gustavson(
            compress(a, CSC_A),
            compress(dense_matrix(bgrid, DENSE_B), CSC_B),
        )
        assert r.counters.macs == int(np.count_nonzero(a.dense[:, 2]))

    def test_identity_a(self):
        b = gen_uniform_random(5, 6, 0.4, 14, ccf=DENSE_B)
        r = run_spgemm_gustavson(
            compress(dense_matrix(np.eye(5)), CSC_A),
            compress(b, CSC_B),
        )
        assert np.array_equal(r.output.dense, b.dense)

    def test_macs_equal_double_sum(self):
        a, b = _rand_operands(7, 10, 8, 0.3, 0.25, 15)
        r = run_spgemm_gustavson(compress(a, CSC_A), compress(b, CSC_B))
        tally = 0
        for n in range(8):
            for k in range(10):
                if b.dense[k, n] != 0:
                    tally += int(np.count_nonzero(a.dense[:, k]))
        assert r.counters.macs == tally
        assert np.array_equal(r.output.dense, a.dense @ b.dense)


class TestProperties:
    @pytest.mark.parametrize("seed", range(12))
    def test_all_kernels_match_oracle(self, seed):
        rng = np.random.default_rng(seed)
        m, k, n = (int(rng.integers(1, 33)) for _ in range(3))
        densities = [0.01, 0.1, 0.5, 1.0]
        d_a = densities[seed % 4]
        d_b = densities[(seed + 2) % 4]
        a, b = _rand_operands(m, k, n, d_a, d_b, 1000 + seed)
        oracle = a.dense @ b.dense
        for pair in KERNEL_BY_PAIR:
            r = run_pair(a, b, pair)
            assert np.array_equal(r.output.dense, oracle), (pair, m, k, n)

    def test_dense_agreement_at_full_density(self):
        # compressed-but-full operands: every sparse kernel does M*K*N macs
        a, b = _rand_operands(6, 7, 8, 1.0, 1.0, 30)
        for pair in (("UMCK", "UNCK"), ("UKCM", "UKCN"), ("UKCM", "UNCK")):
            r = run_pair(a, b, pair)
            assert r.counters.macs == 6 * 7 * 8, pair

    def test_counter_monotonicity_in_nnz(self):
        # adding one nonzero to the compressed operand never decreases macs
        rng = np.random.default_rng(31)
        grid_a = gen_uniform_random(8, 9, 0.4, 32).dense
        grid_b = np.array(gen_uniform_random(9, 7, 0.3, 33, ccf=DENSE_B).dense)
        zeros = np.argwhere(grid_b == 0)
        last = {}
        for pair in (("UMUK", "UNCK"), ("UMCK", "UNCK"), ("UKCM", "UKCN"), ("UKCM", "UNCK")):
            last[pair] = run_pair(dense_matrix(grid_a), dense_matrix(grid_b, DENSE_B), pair).counters.macs
        for idx in zeros[rng.permutation(len(zeros))[:10]]:
            grid_b[idx[0], idx[1]] = float(rng.integers(1, 10))
            for pair in last:
                macs = run_pair(dense_matrix(grid_a), dense_matrix(grid_b, DENSE_B), pair).counters.macs
                assert macs >= last[pair], pair
                last[pair] = macs

    def test_counters_validated(self):
        with pytest.raises(KernelError):
            KernelCounters(3, 5, 0)
        with pytest.raises(KernelError):
            KernelCounters(-1, 0, 0)


class TestBackendParity:
    def test_backend_reported(self):
        assert BACKEND in ("cython", "python")

    @pytest.mark.parametrize("seed", range(6))
    def test_fallback_matches_active_backend(self, seed):
        a, b = _rand_operands(13, 11, 12, 0.3, 0.4, 40 + seed)
        ca, cca = compress(a, CSR_A), compress(a, CSC_A)
        cb, ccb = compress(b, CSC_B), compress(b, CSR_B)
        cases = {
            ("UMUK", "UKUN"): (run_dense_gemm(a, b), _core_py.dense_gemm(a.dense, b.dense)),
            ("UMCK", "UKUN"): (run_spmm_eie(ca, b), _core_py.spmm_a_compressed(ca.pos, ca.crd, ca.values, b.dense)),
            ("UMUK", "UNCK"): (run_spmm_eie(a, cb), _core_py.spmm_b_compressed(a.dense, cb.pos, cb.crd, cb.values)),
            ("UMCK", "UNCK"): (run_spgemm_inner(ca, cb), _core_py.spgemm_inner(ca.pos, ca.crd, ca.values, cb.pos, cb.crd, cb.values)),
            ("UKCM", "UKCN"): (run_spgemm_outer(cca, ccb), _core_py.spgemm_outer(cca.pos, cca.crd, cca.values, ccb.pos, ccb.crd, ccb.values, 13, 12)),
            ("UKCM", "UNCK"): (run_spgemm_gustavson(cca, cb), _core_py.spgemm_gustavson(cca.pos, cca.crd, cca.values, cb.pos, cb.crd, cb.values, 13)),
        }
        for pair, (active, fallback) in cases.items():
            out, iters, macs, cmps = fallback
            assert np.array_equal(active.output.dense, out), pair
            assert active.counters == KernelCounters(int(iters), int(macs), int(cmps)), pair
