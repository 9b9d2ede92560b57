"""Partitioning and scheduling of matmul kernels onto heterogeneous clusters.

Single-kernel scheduling splits one multiplication along M, N and K into
regions stored in different formats so every cluster type works at once:
dense rows x dense columns feed the dense cluster, compressed rows the
one-operand-sparse cluster, the doubly-compressed corner the inner-product
cluster, and an optional K slab an outer-product cluster. When K is split
the partial outputs are merged at the end; the final runtime is the maximum
runtime across clusters plus that merge.

Many-kernel scheduling assigns whole kernels from a queue to the feasible
cluster with the earliest predicted finish, then replays the assignments in
an event-driven simulation in which concurrently memory-active clusters
share HBM bandwidth equally.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import kernels as kernelmod
from .archtemplate import AespaConfig, allocate
from .costmodel import (
    UNLIMITED,
    CostBreakdown,
    CostModelError,
    Dataflow,
    KernelSpec,
    compute_cycles,
    effectual_macs,
    executed_iterations,
    memory_cycles,
    operand_storage_bytes,
    supported_ccfs,
)
from .formats import decompress, dense_matrix, parse_ccf

DEFAULT_GRID = tuple(i / 8 for i in range(9))
COARSE_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)

# Region roles of the canonical split template and the clusters that take
# them. The K slab prefers K-major outer/column-wise engines; the
# inner-product engine can absorb it when no K-major cluster exists.
ROLE_DENSE = "dense"
ROLE_SPMM_A = "spmm-a"
ROLE_SPMM_B = "spmm-b"
ROLE_SPGEMM_MN = "spgemm-mn"
ROLE_SLAB_K = "spgemm-k"
ROLE_WHOLE = "whole"

_ROLE_KINDS = {
    ROLE_DENSE: (Dataflow.TPU, Dataflow.HYBRID),
    ROLE_SPMM_A: (Dataflow.EIE, Dataflow.HYBRID),
    ROLE_SPMM_B: (Dataflow.EIE, Dataflow.HYBRID),
    ROLE_SPGEMM_MN: (Dataflow.EXTENSOR, Dataflow.HYBRID),
    ROLE_SLAB_K: (Dataflow.OUTERSPACE, Dataflow.MATRAPTOR, Dataflow.EXTENSOR, Dataflow.HYBRID),
}

_ROLE_PAIRS = {
    ROLE_DENSE: ("UMUK", "UKUN"),
    ROLE_SPMM_A: ("UMCK", "UKUN"),
    ROLE_SPMM_B: ("UMUK", "UNCK"),
    ROLE_SPGEMM_MN: ("UMCK", "UNCK"),
}

_SLAB_PAIRS = {
    Dataflow.OUTERSPACE: ("UKCM", "UKCN"),
    Dataflow.MATRAPTOR: ("UKCM", "UNCK"),
    Dataflow.EXTENSOR: ("UMCK", "UNCK"),
    Dataflow.HYBRID: ("UMCK", "UNCK"),
}


class ScheduleError(ValueError):
    """Invalid plan or queue for the given configuration."""


@dataclass(frozen=True)
class Assignment:
    """One sub-kernel region mapped onto one cluster under a CCF pair."""

    cluster: str
    role: str
    m0: int
    m1: int
    k0: int
    k1: int
    n0: int
    n1: int
    pair: tuple
    d_a: float
    d_b: float

    @property
    def extents(self) -> tuple:
        return (self.m1 - self.m0, self.k1 - self.k0, self.n1 - self.n0)

    def subspec(self, spec_id: str) -> KernelSpec:
        me, ke, ne = self.extents
        return KernelSpec(
            f"{spec_id}/{self.role}", me, ke, ne, self.d_a, self.d_b,
            parse_ccf(self.pair[0]), parse_ccf(self.pair[1]),
        )

    def as_dict(self) -> dict:
        return {
            "cluster": self.cluster,
            "role": self.role,
            "m": [self.m0, self.m1],
            "k": [self.k0, self.k1],
            "n": [self.n0, self.n1],
            "ccf_a": self.pair[0],
            "ccf_b": self.pair[1],
            "d_a": self.d_a,
            "d_b": self.d_b,
        }


@dataclass(frozen=True)
class PartitionPlan:
    """An M/N/K-split assignment of sub-kernels to clusters."""

    spec_id: str
    m_cut: int | None
    n_cut: int | None
    k_cut: int | None
    assignments: tuple

    @property
    def merge_required(self) -> bool:
        return self.k_cut is not None

    @property
    def num_k_partitions(self) -> int:
        return 2 if self.merge_required else 1

    def as_dict(self) -> dict:
        return {
            "spec": self.spec_id,
            "m_cut": self.m_cut,
            "n_cut": self.n_cut,
            "k_cut": self.k_cut,
            "merge_required": self.merge_required,
            "assignments": [a.as_dict() for a in self.assignments],
        }


@dataclass(frozen=True)
class ScheduleReport:
    """Cycle/traffic/energy accounting for one evaluated plan."""

    plan: PartitionPlan
    per_cluster: dict
    merge_cycles: int
    makespan_cycles: int
    total_traffic_bytes: int
    total_macs: float
    total_energy: float
    edp: float
    effective_utilization: float

    def as_dict(self) -> dict:
        return {
            "plan": self.plan.as_dict(),
            "per_cluster": {name: bd.as_dict() for name, bd in self.per_cluster.items()},
            "merge_cycles": self.merge_cycles,
            "makespan_cycles": self.makespan_cycles,
            "total_traffic_bytes": self.total_traffic_bytes,
            "total_macs": self.total_macs,
            "total_energy": self.total_energy,
            "edp": self.edp,
            "effective_utilization": self.effective_utilization,
        }


# ---------------------------------------------------------------------------
# Region bookkeeping for materialized specs


class PlanContext:
    """Permuted operand grids plus nonzero prefix sums for region measures.

    Rows of A and columns of B are ordered by descending nonzero count so
    that the dense-designated region takes the densest slices; prefix sums
    give O(1) region nonzero counts.
    """

    def __init__(self, spec: KernelSpec):
        if spec.A is None or spec.B is None:
            raise ScheduleError("spec carries no concrete matrices")
        a = decompress(spec.A).dense
        b = decompress(spec.B).dense
        if a.shape != (spec.M, spec.K) or b.shape != (spec.K, spec.N):
            raise ScheduleError("attached matrices do not match the spec extents")
        self.perm_m = np.argsort(-np.count_nonzero(a, axis=1), kind="stable")
        self.perm_n = np.argsort(-np.count_nonzero(b, axis=0), kind="stable")
        self.a_grid = np.ascontiguousarray(a[self.perm_m])
        self.b_grid = np.ascontiguousarray(b[:, self.perm_n])
        mask_a = (self.a_grid != 0).astype(np.int64)
        mask_b = (self.b_grid != 0).astype(np.int64)
        self._pa = np.zeros((spec.M + 1, spec.K + 1), dtype=np.int64)
        self._pb = np.zeros((spec.K + 1, spec.N + 1), dtype=np.int64)
        np.cumsum(np.cumsum(mask_a, axis=0), axis=1, out=self._pa[1:, 1:])
        np.cumsum(np.cumsum(mask_b, axis=0), axis=1, out=self._pb[1:, 1:])

    def nnz_a(self, m0, m1, k0, k1) -> int:
        p = self._pa
        return int(p[m1, k1] - p[m0, k1] - p[m1, k0] + p[m0, k0])

    def nnz_b(self, k0, k1, n0, n1) -> int:
        p = self._pb
        return int(p[k1, n1] - p[k0, n1] - p[k1, n0] + p[k0, n0])

    def density_a(self, m0, m1, k0, k1) -> float:
        size = (m1 - m0) * (k1 - k0)
        return max(self.nnz_a(m0, m1, k0, k1) / size, 1e-12)

    def density_b(self, k0, k1, n0, n1) -> float:
        size = (k1 - k0) * (n1 - n0)
        return max(self.nnz_b(k0, k1, n0, n1) / size, 1e-12)


def _context_for(spec: KernelSpec) -> PlanContext | None:
    if spec.A is not None and spec.B is not None:
        return PlanContext(spec)
    return None


# ---------------------------------------------------------------------------
# Plan construction


def _assignment(spec, ctx, cluster_name, role, m0, m1, k0, k1, n0, n1, pair):
    if ctx is not None:
        d_a = ctx.density_a(m0, m1, k0, k1)
        d_b = ctx.density_b(k0, k1, n0, n1)
    else:
        d_a, d_b = spec.d_A, spec.d_B
    return Assignment(cluster_name, role, m0, m1, k0, k1, n0, n1, tuple(pair), d_a, d_b)


def no_split_plan(spec: KernelSpec, cluster, pair, ctx=None) -> PartitionPlan:
    """The whole kernel on a single cluster under one supported CCF pair."""
    if tuple(pair) not in supported_ccfs(cluster.dataflow):
        raise ScheduleError(f"{cluster.name} does not support the pair {pair}")
    a = _assignment(spec, ctx, cluster.name, ROLE_WHOLE, 0, spec.M, 0, spec.K, 0, spec.N, pair)
    return PartitionPlan(spec.id, None, None, None, (a,))


def template_plan(
    spec: KernelSpec,
    role_clusters: dict,
    m_cut: int | None,
    n_cut: int | None,
    k_cut: int | None,
    ctx=None,
) -> PartitionPlan:
    """Canonical split plan: cuts plus a role -> cluster mapping.

    The dense-designated share is rows [0, m_cut) and columns [0, n_cut);
    row/column order is by descending nonzero count when concrete matrices
    are attached. A K cut sends columns [k_cut, K) of the contraction to the
    slab cluster as a second, merged partial product.
    """
    M, K, N = spec.M, spec.K, spec.N
    mc = M if m_cut is None else m_cut
    nc = N if n_cut is None else n_cut
    kc = K if k_cut is None else k_cut
    if not (0 <= mc <= M and 0 <= nc <= N and 0 <= kc <= K):
        raise ScheduleError("cut outside the kernel extents")
    assignments = []

    def region(role, m0, m1, k0, k1, n0, n1, pair):
        if m1 > m0 and k1 > k0 and n1 > n0:
            cluster = role_clusters[role]
            assignments.append(
                _assignment(spec, ctx, cluster.name, role, m0, m1, k0, k1, n0, n1, pair)
            )

    region(ROLE_DENSE, 0, mc, 0, kc, 0, nc, _ROLE_PAIRS[ROLE_DENSE])
    region(ROLE_SPMM_A, mc, M, 0, kc, 0, nc, _ROLE_PAIRS[ROLE_SPMM_A])
    region(ROLE_SPMM_B, 0, mc, 0, kc, nc, N, _ROLE_PAIRS[ROLE_SPMM_B])
    region(ROLE_SPGEMM_MN, mc, M, 0, kc, nc, N, _ROLE_PAIRS[ROLE_SPGEMM_MN])
    if kc < K:
        slab_cluster = role_clusters[ROLE_SLAB_K]
        region(ROLE_SLAB_K, 0, M, kc, K, 0, N, _SLAB_PAIRS[slab_cluster.dataflow])
    if not assignments:
        raise ScheduleError("all regions empty")
    return PartitionPlan(
        spec.id,
        mc if 0 < mc < M else None,
        nc if 0 < nc < N else None,
        kc if 0 < kc < K else None,
        tuple(assignments),
    )


def _validate_plan(plan: PartitionPlan, spec: KernelSpec, config: AespaConfig):
    clusters = {c.name: c for c in config.clusters}
    by_cluster = {}
    k0_rects = []
    slab_rects = []
    kc = plan.k_cut if plan.k_cut is not None else spec.K
    for a in plan.assignments:
        if a.cluster not in clusters:
            raise ScheduleError(f"unknown cluster {a.cluster!r}")
        if a.pair not in supported_ccfs(clusters[a.cluster].dataflow):
            raise CostModelError(
                f"cluster {a.cluster} cannot consume the pair {a.pair}"
            )
        if not (0 <= a.m0 < a.m1 <= spec.M and 0 <= a.k0 < a.k1 <= spec.K and 0 <= a.n0 < a.n1 <= spec.N):
            raise ScheduleError(f"empty or out-of-range region in {a.role}")
        by_cluster.setdefault(a.cluster, []).append(a.role)
        if (a.k0, a.k1) == (0, kc):
            k0_rects.append(a)
        elif (a.k0, a.k1) == (kc, spec.K):
            slab_rects.append(a)
        elif (a.k0, a.k1) == (0, spec.K):
            k0_rects.append(a)
        else:
            raise ScheduleError("K ranges must follow the plan's K cut")
    for roles in by_cluster.values():
        if len(roles) > 1 and not set(roles) <= {ROLE_SPMM_A, ROLE_SPMM_B}:
            raise ScheduleError("a cluster may only take both one-sparse regions")
    # output coverage: K0 rectangles tile M x N exactly, the slab covers it
    if k0_rects:
        area = sum((a.m1 - a.m0) * (a.n1 - a.n0) for a in k0_rects)
        if area != spec.M * spec.N:
            raise ScheduleError("K0 regions do not tile the output")
        for x, y in itertools.combinations(k0_rects, 2):
            if x.m0 < y.m1 and y.m0 < x.m1 and x.n0 < y.n1 and y.n0 < x.n1:
                raise ScheduleError("overlapping output regions")
    for a in slab_rects:
        if (a.m0, a.m1, a.n0, a.n1) != (0, spec.M, 0, spec.N):
            raise ScheduleError("K slab must cover the full output")


def merge_cycles(spec: KernelSpec, num_k_partitions: int, config: AespaConfig) -> int:
    """Cycles to sum partial outputs on all PEs jointly; 0 without a K split."""
    if num_k_partitions < 1:
        raise ScheduleError("num_k_partitions must be >= 1")
    if num_k_partitions == 1:
        return 0
    additions = (num_k_partitions - 1) * spec.M * spec.N
    return math.ceil(additions / config.total_pes)


# ---------------------------------------------------------------------------
# Plan evaluation


def evaluate_plan(
    plan: PartitionPlan,
    spec: KernelSpec,
    config: AespaConfig,
    bandwidth: float,
    charge_conversion: bool = False,
    measured_densities: bool = True,
) -> ScheduleReport:
    """Cost a plan: per-cluster roofline runtimes, shared-bandwidth memory,
    whole-chip energy, and the merge tail when K is split.

    Operand cells shared by several clusters (a dense row slab read by both
    the dense and the one-sparse cluster, say) are fetched from HBM once and
    broadcast; concurrently active clusters share the HBM bandwidth equally.
    """
    _validate_plan(plan, spec, config)
    ctx = _context_for(spec) if measured_densities else None
    if ctx is not None:
        plan = PartitionPlan(
            plan.spec_id, plan.m_cut, plan.n_cut, plan.k_cut,
            tuple(
                Assignment(
                    a.cluster, a.role, a.m0, a.m1, a.k0, a.k1, a.n0, a.n1, a.pair,
                    ctx.density_a(a.m0, a.m1, a.k0, a.k1),
                    ctx.density_b(a.k0, a.k1, a.n0, a.n1),
                )
                for a in plan.assignments
            ),
        )
    vb, ib = config.value_bytes, config.index_bytes
    clusters = {c.name: c for c in config.clusters}
    active = []
    for c in config.clusters:
        if any(a.cluster == c.name for a in plan.assignments):
            active.append(c.name)
    n_active = len(active)

    # unique operand cells: (range, tag, density) fetched once, broadcast
    a_cells = {}
    b_cells = {}
    compute = {name: 0 for name in clusters}
    executed = {name: 0.0 for name in clusters}
    useful = {name: 0.0 for name in clusters}
    out_bytes = {name: 0.0 for name in clusters}
    for a in plan.assignments:
        sub = a.subspec(plan.spec_id)
        cl = clusters[a.cluster]
        compute[a.cluster] += compute_cycles(cl, sub)
        executed[a.cluster] += executed_iterations(sub)
        useful[a.cluster] += effectual_macs(sub)
        out_bytes[a.cluster] += (a.m1 - a.m0) * (a.n1 - a.n0) * vb
        key_a = (a.m0, a.m1, a.k0, a.k1, a.pair[0], a.d_a)
        a_cells.setdefault(key_a, set()).add(a.cluster)
        key_b = (a.k0, a.k1, a.n0, a.n1, a.pair[1], a.d_b)
        b_cells.setdefault(key_b, set()).add(a.cluster)

    operand_bytes = {name: 0.0 for name in clusters}
    conversion_bytes = {name: 0.0 for name in clusters}
    total_operand = 0.0

    def _charge(cells, rows_cols, delivered_tag, density_of):
        nonlocal total_operand
        for key, users in cells.items():
            r0, r1, c0, c1, tag, dens = key
            rows, cols = rows_cols(key)
            size = operand_storage_bytes(rows, cols, parse_ccf(tag), dens, vb, ib)
            total_operand += size
            share = size / len(users)
            for u in users:
                operand_bytes[u] += share
            if charge_conversion and tag != delivered_tag:
                src = operand_storage_bytes(rows, cols, parse_ccf(delivered_tag), density_of(key), vb, ib)
                conv = src + size  # read delivered cell, write converted cell
                for u in users:
                    conversion_bytes[u] += conv / len(users)

    _charge(
        a_cells,
        lambda key: (key[1] - key[0], key[3] - key[2]),
        spec.ccf_A.tag,
        lambda key: key[5],
    )
    _charge(
        b_cells,
        lambda key: (key[1] - key[0], key[3] - key[2]),
        spec.ccf_B.tag,
        lambda key: key[5],
    )

    total_traffic = math.ceil(total_operand + sum(out_bytes.values()))
    merge = merge_cycles(spec, plan.num_k_partitions, config)

    per_cluster = {}
    runtimes = {}
    freq = config.frequency
    for c in config.clusters:
        name = c.name
        traffic_c = operand_bytes[name] + out_bytes[name]
        if bandwidth == UNLIMITED:
            mem = 0
        else:
            mem = memory_cycles(traffic_c * n_active, freq, bandwidth)
        if conversion_bytes[name]:
            mem += math.ceil(conversion_bytes[name] * freq / config.scratchpad_bandwidth)
        rt = max(compute[name], mem)
        runtimes[name] = rt
        per_cluster[name] = (traffic_c, mem, rt)

    makespan = max(runtimes.values()) + merge
    total_useful = sum(useful.values())
    params = config.energy
    merge_energy = (plan.num_k_partitions - 1) * spec.M * spec.N * params.e_mac

    breakdowns = {}
    total_energy = merge_energy
    for c in config.clusters:
        name = c.name
        traffic_c, mem, rt = per_cluster[name]
        words = traffic_c / vb
        conv_words = conversion_bytes[name] / vb
        idle = c.pe_count * makespan - executed[name]
        e = (
            executed[name] * params.e_mac
            + words * params.e_hbm_word
            + (words + conv_words) * params.e_sram_word
            + idle * params.e_idle_pe_cycle
        )
        total_energy += e
        util = useful[name] / (c.pe_count * rt) if rt else 0.0
        breakdowns[name] = CostBreakdown(
            compute_cycles=compute[name],
            memory_cycles=mem,
            runtime_cycles=rt,
            traffic_bytes=math.ceil(traffic_c),
            effectual_macs=useful[name],
            effective_utilization=util,
            energy=e,
            edp=e * rt / freq,
        )

    seconds = makespan / freq
    return ScheduleReport(
        plan=plan,
        per_cluster=breakdowns,
        merge_cycles=merge,
        makespan_cycles=makespan,
        total_traffic_bytes=total_traffic,
        total_macs=total_useful,
        total_energy=total_energy,
        edp=total_energy * seconds,
        effective_utilization=total_useful / (config.total_pes * makespan),
    )


def execute_plan(plan: PartitionPlan, spec: KernelSpec):
    """Functionally run every assignment and merge the partial outputs.

    Returns (output grid, {cluster: KernelCounters totals}). Requires
    concrete matrices on the spec.
    """
    ctx = PlanContext(spec)
    out = np.zeros((spec.M, spec.N))
    counters = {}
    for a in plan.assignments:
        sub_a = dense_matrix(ctx.a_grid[a.m0 : a.m1, a.k0 : a.k1])
        sub_b = dense_matrix(ctx.b_grid[a.k0 : a.k1, a.n0 : a.n1], parse_ccf("UKUN"))
        result = kernelmod.run_pair(sub_a, sub_b, a.pair)
        rows = ctx.perm_m[a.m0 : a.m1]
        cols = ctx.perm_n[a.n0 : a.n1]
        out[np.ix_(rows, cols)] += result.output.dense
        prev = counters.get(a.cluster)
        cur = result.counters
        if prev is None:
            counters[a.cluster] = cur
        else:
            counters[a.cluster] = kernelmod.KernelCounters(
                prev.loop_iterations + cur.loop_iterations,
                prev.macs + cur.macs,
                prev.index_comparisons + cur.index_comparisons,
            )
    return out, counters


# ---------------------------------------------------------------------------
# Single-kernel search


def _role_candidates(config: AespaConfig) -> dict:
    cands = {}
    for role, kinds in _ROLE_KINDS.items():
        found = []
        for kind in kinds:
            found.extend(c for c in config.clusters if c.dataflow == kind)
        cands[role] = found
    return cands


def iter_candidate_plans(spec: KernelSpec, config: AespaConfig, grid=DEFAULT_GRID, ctx=None):
    """No-split plans for every cluster, then every grid-cut template plan.

    Enumeration order is deterministic: cluster order, then ascending cuts,
    then role-candidate order; ties during search resolve to the earliest
    candidate.
    """
    for cluster in config.clusters:
        for pair in supported_ccfs(cluster.dataflow):
            yield no_split_plan(spec, cluster, pair, ctx)

    cands = _role_candidates(config)
    fracs = sorted(set(grid))
    cuts_m = sorted({int(f * spec.M + 0.5) for f in fracs})
    cuts_n = sorted({int(f * spec.N + 0.5) for f in fracs})
    cuts_k = sorted({int(f * spec.K + 0.5) for f in fracs})
    seen = set()
    for mc, nc, kc in itertools.product(cuts_m, cuts_n, cuts_k):
        if (mc, nc, kc) in seen:
            continue
        seen.add((mc, nc, kc))
        roles = []
        if mc > 0 and nc > 0 and kc > 0:
            roles.append(ROLE_DENSE)
        if mc < spec.M and nc > 0 and kc > 0:
            roles.append(ROLE_SPMM_A)
        if mc > 0 and nc < spec.N and kc > 0:
            roles.append(ROLE_SPMM_B)
        if mc < spec.M and nc < spec.N and kc > 0:
            roles.append(ROLE_SPGEMM_MN)
        if kc < spec.K:
            roles.append(ROLE_SLAB_K)
        if len(roles) < 2:
            continue  # degenerate: covered by the no-split family
        if any(not cands[r] for r in roles):
            continue
        for combo in itertools.product(*(cands[r] for r in roles)):
            used = {}
            ok = True
            for role, cluster in zip(roles, combo):
                used.setdefault(cluster.name, []).append(role)
            for taken in used.values():
                if len(taken) > 1 and not set(taken) <= {ROLE_SPMM_A, ROLE_SPMM_B}:
                    ok = False
                    break
            if not ok:
                continue
            yield template_plan(
                spec, dict(zip(roles, combo)),
                mc if mc < spec.M else None,
                nc if nc < spec.N else None,
                kc if kc < spec.K else None,
                ctx,
            )


def search_single_kernel(
    spec: KernelSpec,
    config: AespaConfig,
    bandwidth: float,
    objective: str = "makespan",
    grid=DEFAULT_GRID,
    charge_conversion: bool = False,
):
    """Exhaustive search over the plan grid; returns (plan, report).

    The no-split single-cluster plans are part of the search space, so the
    result never loses to any of them.
    """
    if objective not in ("makespan", "edp"):
        raise ScheduleError(f"unknown objective {objective!r}")
    ctx = _context_for(spec)
    best_key = None
    best = None
    for plan in iter_candidate_plans(spec, config, grid, ctx):
        report = evaluate_plan(
            plan, spec, config, bandwidth,
            charge_conversion=charge_conversion,
            measured_densities=False,  # densities already measured via ctx
        )
        if objective == "makespan":
            key = (report.makespan_cycles, report.edp)
        else:
            key = (report.edp, report.makespan_cycles)
        if best_key is None or key < best_key:
            best_key = key
            best = (plan, report)
    if best is None:
        raise ScheduleError("no feasible plan")
    return best


# ---------------------------------------------------------------------------
# Many-kernel scheduling


@dataclass(frozen=True)
class QueueAssignment:
    kernel_id: str
    cluster: str
    pair: tuple
    start_cycle: float
    end_cycle: float

    def as_dict(self) -> dict:
        return {
            "kernel": self.kernel_id,
            "cluster": self.cluster,
            "ccf_a": self.pair[0],
            "ccf_b": self.pair[1],
            "start_cycle": self.start_cycle,
            "end_cycle": self.end_cycle,
        }


@dataclass(frozen=True)
class ManyKernelReport:
    assignments: tuple
    total_cycles: int

    def as_dict(self) -> dict:
        return {
            "assignments": [a.as_dict() for a in self.assignments],
            "total_cycles": self.total_cycles,
        }


def _best_arrangement(spec: KernelSpec, cluster, vb, ib):
    """Cheapest supported CCF pair for a whole kernel on one cluster."""
    best = None
    for pair in supported_ccfs(cluster.dataflow):
        sub = spec.with_pair(pair)
        cycles = compute_cycles(cluster, sub)
        a = operand_storage_bytes(spec.M, spec.K, sub.ccf_A, spec.d_A, vb, ib)
        b = operand_storage_bytes(spec.K, spec.N, sub.ccf_B, spec.d_B, vb, ib)
        traffic = a + b + spec.M * spec.N * vb
        key = (cycles, traffic)
        if best is None or key < best[0]:
            best = (key, pair, cycles, traffic, executed_iterations(sub))
    _, pair, cycles, traffic, macs = best
    return pair, cycles, traffic, macs


def schedule_many(queue, config: AespaConfig, bandwidth: float) -> ManyKernelReport:
    """Greedy earliest-finish list scheduling of whole kernels.

    Kernels are taken in queue order and committed to the feasible cluster
    with the smallest predicted finish under current availability; the
    committed schedule is then replayed event by event with concurrently
    memory-active clusters sharing HBM bandwidth equally.
    """
    if not queue:
        raise ScheduleError("queue must not be empty")
    vb, ib = config.value_bytes, config.index_bytes
    freq = config.frequency

    arrangements = {}
    for spec in queue:
        for c in config.clusters:
            arrangements[(spec.id, c.name)] = _best_arrangement(spec, c, vb, ib)

    # assignment phase: earliest predicted finish, full-bandwidth estimate
    free_at = {c.name: 0.0 for c in config.clusters}
    order = {c.name: [] for c in config.clusters}
    chosen = {}
    for spec in queue:
        best = None
        for c in config.clusters:
            pair, cycles, traffic, macs = arrangements[(spec.id, c.name)]
            mem = 0.0 if bandwidth == UNLIMITED else traffic * freq / bandwidth
            finish = free_at[c.name] + max(cycles, mem)
            if best is None or finish < best[0]:
                best = (finish, c.name, pair)
        finish, name, pair = best
        free_at[name] = finish
        order[name].append(spec)
        chosen[spec.id] = (name, pair)

    # timing phase: event-driven replay with equal HBM shares
    pending = {name: list(kernels) for name, kernels in order.items()}
    running = {}
    started = {}
    finished = {}
    time = 0.0
    tol = 1e-9

    def _start_next(name):
        if pending[name]:
            spec = pending[name].pop(0)
            pair, cycles, traffic, macs = arrangements[(spec.id, name)]
            bytes_left = 0.0 if bandwidth == UNLIMITED else float(traffic)
            running[name] = [spec.id, float(cycles), bytes_left]
            started[spec.id] = time

    for name in sorted(pending):
        _start_next(name)
    while running:
        n_mem = sum(1 for job in running.values() if job[2] > tol)
        byte_rate = (bandwidth / freq / n_mem) if n_mem else 0.0
        # next event: a kernel finishing, or a kernel's byte stream draining
        dt = math.inf
        for job in running.values():
            t_mem = job[2] / byte_rate if job[2] > tol else 0.0
            dt = min(dt, max(job[1], t_mem))
            if job[2] > tol:
                dt = min(dt, t_mem)
        time += dt
        done = []
        for name, job in running.items():
            job[1] = max(0.0, job[1] - dt)
            if job[2] > tol:
                job[2] = max(0.0, job[2] - dt * byte_rate)
            if job[1] <= tol and job[2] <= tol:
                done.append(name)
        for name in sorted(done):
            finished[running[name][0]] = time
            del running[name]
            _start_next(name)

    assignments = tuple(
        QueueAssignment(
            spec.id, chosen[spec.id][0], chosen[spec.id][1],
            round(started[spec.id], 6), round(finished[spec.id], 6),
        )
        for spec in queue
    )
    total = math.ceil(max(finished.values()) - tol)
    return ManyKernelReport(assignments, total)


# ---------------------------------------------------------------------------
# Baseline comparison and configuration search


def _geomean(values) -> float:
    vals = [max(v, 1e-300) for v in values]
    return math.exp(sum(math.log(v) for v in vals) / len(vals))


def compare_baselines(
    suite,
    configs: dict,
    bandwidth: float,
    baseline: str = "homog-eie",
    objective: str = "makespan",
    grid=DEFAULT_GRID,
    charge_conversion: bool = False,
) -> dict:
    """Per-workload and geomean speedup/energy/EDP/utilization table.

    ``configs`` maps preset name to AespaConfig; every metric is normalized
    to the named baseline, which must be one of the keys.
    """
    if baseline not in configs:
        raise ScheduleError(f"baseline {baseline!r} not among the presets")
    results = {}
    for name, config in configs.items():
        for spec in suite:
            _, report = search_single_kernel(
                spec, config, bandwidth, objective, grid,
                charge_conversion=charge_conversion,
            )
            results[(spec.id, name)] = report
    rows = []
    for spec in suite:
        base = results[(spec.id, baseline)]
        for name in configs:
            rep = results[(spec.id, name)]
            rows.append(
                {
                    "workload": spec.id,
                    "preset": name,
                    "makespan_cycles": rep.makespan_cycles,
                    "energy": rep.total_energy,
                    "edp": rep.edp,
                    "utilization": rep.effective_utilization,
                    "speedup": base.makespan_cycles / rep.makespan_cycles,
                    "energy_improvement": base.total_energy / rep.total_energy,
                    "edp_improvement": base.edp / rep.edp,
                }
            )
    geomean = []
    for name in configs:
        sub = [r for r in rows if r["preset"] == name]
        geomean.append(
            {
                "preset": name,
                "speedup": _geomean([r["speedup"] for r in sub]),
                "energy_improvement": _geomean([r["energy_improvement"] for r in sub]),
                "edp_improvement": _geomean([r["edp_improvement"] for r in sub]),
                "utilization": _geomean([r["utilization"] for r in sub]),
            }
        )
    return {"baseline": baseline, "rows": rows, "geomean": geomean}


SEARCH_KINDS = (Dataflow.TPU, Dataflow.EIE, Dataflow.EXTENSOR, Dataflow.OUTERSPACE)


def search_config(
    suite,
    bandwidth: float = 1.0e12,
    objective: str = "makespan",
    kinds=SEARCH_KINDS,
    granularity: int = 8,
    grid=COARSE_GRID,
    calibration=None,
):
    """Sweep area mixes (multiples of 1/granularity) over the basic cluster
    kinds and return (mix, config) minimizing the geomean objective over the
    suite under single-kernel scheduling."""
    if not suite:
        raise ScheduleError("suite must not be empty")
    best = None
    units = range(granularity + 1)
    for counts in itertools.product(units, repeat=len(kinds)):
        if sum(counts) != granularity:
            continue
        mix = {k: c / granularity for k, c in zip(kinds, counts) if c > 0}
        if not mix:
            continue
        try:
            config = allocate(mix, calibration, name="aespa-searched")
        except Exception:
            continue
        scores = []
        for spec in suite:
            _, report = search_single_kernel(spec, config, bandwidth, objective, grid)
            scores.append(
                report.makespan_cycles if objective == "makespan" else report.edp
            )
        score = _geomean(scores)
        if best is None or score < best[0]:
            best = (score, mix, config)
    if best is None:
        raise ScheduleError("no feasible configuration in the sweep")
    return best[1], best[2]
