import math

import numpy as np
import pytest

from spaccel.costmodel import (
    UNLIMITED,
    ClusterConfig,
    CostModelError,
    Dataflow,
    EnergyParams,
    compute_cycles,
    executed_iterations,
    energy,
    make_spec,
    parallel_bound,
    runtime,
    supported_ccfs,
    traffic_bytes,
    usable_pes,
)
from spaccel.formats import DENSE_B, compress, gen_uniform_random, parse_ccf
from spaccel.kernels import run_pair


def cluster(kind, pes):
    return ClusterConfig(kind.value, kind, pes)


class TestSupportedCcfs:
    def test_exact_sets(self):
        assert set(supported_ccfs(Dataflow.TPU)) == {("UMUK", "UKUN")}
        assert set(supported_ccfs(Dataflow.EIE)) == {("UMCK", "UKUN"), ("UMUK", "UNCK")}
        assert set(supported_ccfs(Dataflow.EXTENSOR)) == {("UMCK", "UNCK")}
        assert set(supported_ccfs(Dataflow.OUTERSPACE)) == {("UKCM", "UKCN")}
        assert set(supported_ccfs(Dataflow.MATRAPTOR)) == {("UKCM", "UNCK")}

    def test_hybrid_is_union(self):
        hybrid = set(supported_ccfs(Dataflow.HYBRID))
        assert ("UMUK", "UKUN") in hybrid
        assert hybrid == (
            set(supported_ccfs(Dataflow.TPU))
            | set(supported_ccfs(Dataflow.EIE))
            | set(supported_ccfs(Dataflow.EXTENSOR))
        )

    def test_tpu_has_no_compressed_pair(self):
        assert all("C" not in a + b for a, b in supported_ccfs(Dataflow.TPU))


class TestComputeCycles:
    def test_dense_worked_case(self):
        spec = make_spec("a", 4, 4, 4, 1.0, 1.0)
        assert compute_cycles(cluster(Dataflow.TPU, 2), spec) == 32

    def test_eie_worked_case(self):
        spec = make_spec("b", 2, 4, 4, 0.25, 1.0, ccf_A="UMCK", ccf_B="UKUN")
        assert compute_cycles(cluster(Dataflow.EIE, 2), spec) == 4

    def test_outerspace_worked_case(self):
        spec = make_spec("d", 4, 2, 4, 0.25, 0.25, ccf_A="UKCM", ccf_B="UKCN")
        assert compute_cycles(cluster(Dataflow.OUTERSPACE, 2), spec) == 1

    def test_k_bound_caps_usable_pes(self):
        spec = make_spec("t", 32000, 84, 1000, 0.5, 0.3, ccf_A="UKCM", ccf_B="UKCN")
        assert usable_pes(cluster(Dataflow.OUTERSPACE, 1024), spec) == 84
        assert usable_pes(cluster(Dataflow.OUTERSPACE, 6646), spec) == 84

    def test_unsupported_pair_rejected(self):
        spec = make_spec("x", 4, 4, 4, 0.5, 0.5, ccf_A="UMCK", ccf_B="UNCK")
        with pytest.raises(CostModelError):
            compute_cycles(cluster(Dataflow.TPU, 4), spec)

    def test_density_monotonic_for_sparse_dataflows(self):
        prev = 0
        for d in (0.1, 0.2, 0.4, 0.8, 1.0):
            spec = make_spec("m", 64, 64, 64, d, d, ccf_A="UMCK", ccf_B="UNCK")
            cycles = compute_cycles(cluster(Dataflow.EXTENSOR, 16), spec)
            assert cycles >= prev
            prev = cycles

    def test_bounds_per_dataflow(self):
        spec_a = make_spec("pb", 6, 11, 9, 0.5, 1.0, ccf_A="UMCK", ccf_B="UKUN")
        assert parallel_bound(Dataflow.TPU, spec_a.with_pair(("UMUK", "UKUN"))) == 54
        assert parallel_bound(Dataflow.EIE, spec_a) == 6  # A compressed: one PE per row
        spec_b = spec_a.with_pair(("UMUK", "UNCK"))
        assert parallel_bound(Dataflow.EIE, spec_b) == 9  # B compressed: one PE per column
        assert parallel_bound(Dataflow.EXTENSOR, spec_a) == 9
        assert parallel_bound(Dataflow.OUTERSPACE, spec_a) == 11
        assert parallel_bound(Dataflow.MATRAPTOR, spec_a) == 9

    def test_hybrid_tracks_contained_mode(self):
        spec = make_spec("h", 8, 5, 12, 1.0, 1.0)
        assert parallel_bound(Dataflow.HYBRID, spec.with_pair(("UMUK", "UKUN"))) == 96
        sp = make_spec("h2", 8, 5, 12, 0.5, 0.5, ccf_A="UMCK", ccf_B="UNCK")
        assert parallel_bound(Dataflow.HYBRID, sp) == 12


class TestTraffic:
    def test_dense_4x4(self):
        spec = make_spec("t", 4, 4, 4, 1.0, 1.0)
        assert traffic_bytes(spec) == 64 + 64 + 64

    def test_citeseer_recomputed(self):
        spec = make_spec("citeseer", 3300, 3300, 3700, 0.0011, 0.0085)
        nnz_a = 0.0011 * 3300 * 3300
        nnz_b = 0.0085 * 3300 * 3700
        expect = math.ceil(
            (nnz_a * 8 + 3301 * 4) + (nnz_b * 8 + 3701 * 4) + 3300 * 3700 * 4
        )
        assert traffic_bytes(spec) == expect

    def test_refetch_scales_operands_only(self):
        spec = make_spec("r", 64, 64, 64, 0.5, 1.0)
        t1 = traffic_bytes(spec)
        t2 = traffic_bytes(spec, refetch=2.0)
        out = 64 * 64 * 4
        assert t2 - t1 == t1 - out


class TestRuntime:
    def test_unlimited_is_compute_bound(self):
        spec = make_spec("u", 64, 64, 64, 1.0, 1.0)
        bd = runtime(cluster(Dataflow.TPU, 64), spec, UNLIMITED)
        assert bd.memory_cycles == 0
        assert bd.runtime_cycles == bd.compute_cycles

    def test_memory_bound_corner(self):
        # tiny compute with huge traffic: one-row kernel on many PEs
        spec = make_spec("m", 1, 4096, 4096, 1.0, 1.0)
        bd = runtime(cluster(Dataflow.TPU, 4096), spec, 1e12)
        assert bd.runtime_cycles == bd.memory_cycles > bd.compute_cycles

    def test_roofline_invariant(self):
        for bw in (1e9, 1e11, 1e12, UNLIMITED):
            spec = make_spec("r", 128, 64, 32, 0.3, 1.0)
            bd = runtime(cluster(Dataflow.EIE, 64), spec.with_pair(("UMCK", "UKUN")), bw)
            assert bd.runtime_cycles >= bd.compute_cycles
            assert bd.runtime_cycles >= bd.memory_cycles
            assert 0.0 <= bd.effective_utilization <= 1.0

    def test_m3plates_memory_bound_at_1tbs(self):
        spec = make_spec("m3plates", 11000, 11000, 5500, 0.000054, 1.0)
        # the sparsity-skipping arrangement hits the bandwidth wall
        bd = runtime(cluster(Dataflow.EIE, 4000), spec.with_pair(("UMCK", "UKUN")), 1e12)
        assert bd.runtime_cycles == bd.memory_cycles > bd.compute_cycles
        assert bd.effective_utilization < 0.05
        # the dense arrangement grinds all M*K*N and wins nothing: low
        # effective utilization even though every PE is busy
        bd = runtime(cluster(Dataflow.TPU, 4000), spec.with_pair(("UMUK", "UKUN")), 1e12)
        assert bd.runtime_cycles == bd.compute_cycles
        assert bd.effective_utilization < 1e-3


class TestEnergy:
    def test_single_term(self):
        p = EnergyParams(e_mac=1.0, e_sram_word=10.0, e_hbm_word=6400.0, e_idle_pe_cycle=2.0)
        assert energy(123.0, 0.0, 0.0, 0.0, p) == 123.0

    def test_edp_doubles_with_runtime(self):
        spec = make_spec("e", 32, 32, 32, 1.0, 1.0)
        bd = runtime(cluster(Dataflow.TPU, 16), spec, UNLIMITED)
        assert bd.edp == pytest.approx(bd.energy * bd.runtime_cycles / 1e9)

    def test_default_calibration_ratio(self):
        p = EnergyParams()
        assert p.e_hbm_word / p.e_mac == 6400.0

    def test_eie_beats_tpu_on_sparse_workload(self):
        # area-equal clusters (per-PE area ratio 2.4): 240 dense PEs vs 100
        spec = make_spec("s", 256, 256, 256, 0.05, 1.0)
        eie = runtime(cluster(Dataflow.EIE, 100), spec.with_pair(("UMCK", "UKUN")), UNLIMITED)
        tpu = runtime(cluster(Dataflow.TPU, 240), spec.with_pair(("UMUK", "UKUN")), UNLIMITED)
        assert eie.energy < tpu.energy

    def test_negative_coefficient_rejected(self):
        with pytest.raises(CostModelError):
            EnergyParams(e_mac=-1.0)


class TestEstimatorValidity:
    @pytest.mark.parametrize(
        "pair,kinds",
        [
            (("UMCK", "UKUN"), "a-sparse"),
            (("UMUK", "UNCK"), "b-sparse"),
            (("UMCK", "UNCK"), "both"),
            (("UKCM", "UKCN"), "both"),
            (("UKCM", "UNCK"), "both"),
        ],
    )
    def test_mean_macs_close_to_analytic(self, pair, kinds):
        m, k, n = 64, 64, 32
        d_a = 0.1 if "C" in pair[0] else 1.0
        d_b = 0.2 if "C" in pair[1] else 1.0
        total = 0
        seeds = 8
        for s in range(seeds):
            a = gen_uniform_random(m, k, d_a, 100 + s)
            b = gen_uniform_random(k, n, d_b, 200 + s, ccf=DENSE_B)
            total += run_pair(a, b, pair).counters.macs
        spec = make_spec("est", m, k, n, d_a, d_b, ccf_A=pair[0], ccf_B=pair[1])
        analytic = executed_iterations(spec)
        assert total / seeds == pytest.approx(analytic, rel=0.05)
