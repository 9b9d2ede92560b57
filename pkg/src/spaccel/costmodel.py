"""Analytical per-cluster cycle, traffic, energy, and utilization model.

Compute cycles come from the trip count of the kernel's compute loop:
M*K*N scaled by the density of each compressed operand, divided by the PEs
the dataflow can actually occupy. Each dataflow class is capped by a
parallelism dimension bound (a systolic array unrolls M x N, an outer-product
engine unrolls K, ...). Runtime is the roofline combination of compute
cycles and memory-traffic cycles at the available bandwidth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .formats import CcfDescriptor, StoredMatrix, parse_ccf

UNLIMITED = math.inf


class Dataflow(str, Enum):
    """Sub-accelerator dataflow classes (named after their exemplars)."""

    TPU = "tpu"                # dense GEMM, output-stationary systolic array
    EIE = "eie"                # SpMM, one operand compressed along K
    EXTENSOR = "extensor"      # SpGEMM, inner product with index intersection
    OUTERSPACE = "outerspace"  # SpGEMM, outer product over K
    MATRAPTOR = "matraptor"    # SpGEMM, column-wise (Gustavson) product
    HYBRID = "hybrid"          # one substrate supporting tpu/eie/extensor modes


# Exact CCF pair support per dataflow class, in preference order.
_BASIC_PAIRS = {
    Dataflow.TPU: (("UMUK", "UKUN"),),
    Dataflow.EIE: (("UMCK", "UKUN"), ("UMUK", "UNCK")),
    Dataflow.EXTENSOR: (("UMCK", "UNCK"),),
    Dataflow.OUTERSPACE: (("UKCM", "UKCN"),),
    Dataflow.MATRAPTOR: (("UKCM", "UNCK"),),
}
_BASIC_PAIRS[Dataflow.HYBRID] = (
    _BASIC_PAIRS[Dataflow.TPU]
    + _BASIC_PAIRS[Dataflow.EIE]
    + _BASIC_PAIRS[Dataflow.EXTENSOR]
)


def supported_ccfs(dataflow: Dataflow) -> tuple:
    """CCF pairs (tag_A, tag_B) a dataflow class can consume."""
    return _BASIC_PAIRS[Dataflow(dataflow)]


class CostModelError(ValueError):
    """Spec/cluster combination the model cannot evaluate."""


@dataclass(frozen=True)
class ClusterConfig:
    """One sub-accelerator cluster: a dataflow class and its PE count."""

    name: str
    dataflow: Dataflow
    pe_count: int
    frequency: float = 1e9

    def __post_init__(self):
        if self.pe_count < 1:
            raise CostModelError("pe_count must be >= 1")
        if self.frequency <= 0:
            raise CostModelError("frequency must be positive")


@dataclass(frozen=True)
class EnergyParams:
    """Energy cost coefficients, in units of one integer MAC."""

    e_mac: float = 1.0
    e_sram_word: float = 10.0
    e_hbm_word: float = 6400.0
    e_idle_pe_cycle: float = 2.0

    def __post_init__(self):
        if min(self.e_mac, self.e_sram_word, self.e_hbm_word, self.e_idle_pe_cycle) < 0:
            raise CostModelError("energy coefficients must be non-negative")


@dataclass(frozen=True)
class KernelSpec:
    """One matmul task: extents, operand densities, and delivered formats."""

    id: str
    M: int
    K: int
    N: int
    d_A: float
    d_B: float
    ccf_A: CcfDescriptor
    ccf_B: CcfDescriptor
    A: StoredMatrix | None = None
    B: StoredMatrix | None = None

    def __post_init__(self):
        if min(self.M, self.K, self.N) < 1:
            raise CostModelError("extents must be >= 1")
        for d in (self.d_A, self.d_B):
            if not 0.0 < d <= 1.0:
                raise CostModelError(f"density must be in (0, 1]: {d}")
        if self.ccf_A.dims != frozenset(("M", "K")):
            raise CostModelError(f"ccf_A must describe an MxK operand: {self.ccf_A.tag}")
        if self.ccf_B.dims != frozenset(("K", "N")):
            raise CostModelError(f"ccf_B must describe a KxN operand: {self.ccf_B.tag}")

    @property
    def pair(self) -> tuple:
        return (self.ccf_A.tag, self.ccf_B.tag)

    def with_pair(self, pair) -> "KernelSpec":
        return KernelSpec(
            self.id, self.M, self.K, self.N, self.d_A, self.d_B,
            parse_ccf(pair[0]), parse_ccf(pair[1]), self.A, self.B,
        )


def make_spec(id, M, K, N, d_A, d_B, ccf_A=None, ccf_B=None, A=None, B=None) -> KernelSpec:
    """KernelSpec with delivered formats defaulting to the natural ones:
    compressed along K when the operand is sparse, dense otherwise."""
    if ccf_A is None:
        ccf_A = parse_ccf("UMCK") if d_A < 1.0 else parse_ccf("UMUK")
    elif isinstance(ccf_A, str):
        ccf_A = parse_ccf(ccf_A)
    if ccf_B is None:
        ccf_B = parse_ccf("UNCK") if d_B < 1.0 else parse_ccf("UKUN")
    elif isinstance(ccf_B, str):
        ccf_B = parse_ccf(ccf_B)
    return KernelSpec(id, M, K, N, d_A, d_B, ccf_A, ccf_B, A, B)


@dataclass(frozen=True)
class CostBreakdown:
    compute_cycles: int
    memory_cycles: int
    runtime_cycles: int
    traffic_bytes: int
    effectual_macs: float
    effective_utilization: float
    energy: float
    edp: float

    def as_dict(self) -> dict:
        return {
            "compute_cycles": self.compute_cycles,
            "memory_cycles": self.memory_cycles,
            "runtime_cycles": self.runtime_cycles,
            "traffic_bytes": self.traffic_bytes,
            "effectual_macs": self.effectual_macs,
            "effective_utilization": self.effective_utilization,
            "energy": self.energy,
            "edp": self.edp,
        }


def parallel_bound(dataflow: Dataflow, spec: KernelSpec) -> int:
    """Extent of the dimension product that caps usable PEs for this spec."""
    dataflow = Dataflow(dataflow)
    if dataflow == Dataflow.TPU:
        return spec.M * spec.N
    if dataflow == Dataflow.EIE:
        # one PE per row of a compressed A, or per column of a compressed B
        return spec.M if spec.ccf_A.compressed else spec.N
    if dataflow == Dataflow.EXTENSOR:
        # either traversal order is available; take the roomier one
        return max(spec.M, spec.N)
    if dataflow == Dataflow.OUTERSPACE:
        return spec.K
    if dataflow == Dataflow.MATRAPTOR:
        return spec.N
    # hybrid behaves as the contained dataflow matching the operand pair
    return parallel_bound(_hybrid_mode(spec.pair), spec)


def _hybrid_mode(pair) -> Dataflow:
    for df in (Dataflow.TPU, Dataflow.EIE, Dataflow.EXTENSOR):
        if tuple(pair) in _BASIC_PAIRS[df]:
            return df
    raise CostModelError(f"hybrid cluster does not support the pair {pair}")


def executed_iterations(spec: KernelSpec) -> float:
    """Estimated compute-loop trip count: M*K*N scaled per compressed operand.

    Uncompressed operands cannot be skipped, so their zero values are still
    multiplied; this is the work the cluster performs, not the useful work.
    """
    work = float(spec.M * spec.K * spec.N)
    if spec.ccf_A.compressed:
        work *= spec.d_A
    if spec.ccf_B.compressed:
        work *= spec.d_B
    return work


def effectual_macs(spec: KernelSpec) -> float:
    """Expected multiplications with both operands nonzero, independent of
    how the operands are stored."""
    return float(spec.M * spec.K * spec.N) * spec.d_A * spec.d_B


def usable_pes(cluster: ClusterConfig, spec: KernelSpec) -> int:
    return min(cluster.pe_count, parallel_bound(cluster.dataflow, spec))


def compute_cycles(cluster: ClusterConfig, spec: KernelSpec) -> int:
    """ceil(effectual iterations / usable PEs) for a supported CCF pair."""
    if spec.pair not in supported_ccfs(cluster.dataflow):
        raise CostModelError(
            f"{cluster.dataflow.value} cluster does not support the pair {spec.pair}"
        )
    return math.ceil(executed_iterations(spec) / usable_pes(cluster, spec))


def operand_storage_bytes(
    rows: int, cols: int, ccf: CcfDescriptor, density: float,
    value_bytes: int = 4, index_bytes: int = 4,
) -> float:
    """Expected stored size of one operand under a CCF at uniform density."""
    if not ccf.compressed:
        return float(rows * cols * value_bytes)
    nnz = density * rows * cols
    outer = rows if ccf.row_major else cols
    return nnz * (value_bytes + index_bytes) + (outer + 1) * index_bytes


def traffic_bytes(
    spec: KernelSpec, value_bytes: int = 4, index_bytes: int = 4, refetch: float = 1.0,
) -> int:
    """Bytes moved from HBM: both operands in their formats plus the dense
    output, each counted once (operands stream through the scratchpad
    tile-by-tile; the re-fetch factor models capacity misses, default 1)."""
    a = operand_storage_bytes(spec.M, spec.K, spec.ccf_A, spec.d_A, value_bytes, index_bytes)
    b = operand_storage_bytes(spec.K, spec.N, spec.ccf_B, spec.d_B, value_bytes, index_bytes)
    out = spec.M * spec.N * value_bytes
    return math.ceil((a + b) * refetch + out)


def memory_cycles(traffic: float, frequency: float, bandwidth: float) -> int:
    if bandwidth == UNLIMITED:
        return 0
    if bandwidth <= 0:
        raise CostModelError("bandwidth must be positive or unlimited")
    return math.ceil(traffic * frequency / bandwidth)


def energy(
    macs: float,
    hbm_words: float,
    sram_words: float,
    idle_pe_cycles: float,
    params: EnergyParams,
) -> float:
    return (
        macs * params.e_mac
        + hbm_words * params.e_hbm_word
        + sram_words * params.e_sram_word
        + idle_pe_cycles * params.e_idle_pe_cycle
    )


def runtime(
    cluster: ClusterConfig,
    spec: KernelSpec,
    bandwidth: float,
    params: EnergyParams | None = None,
    value_bytes: int = 4,
    index_bytes: int = 4,
    refetch: float = 1.0,
) -> CostBreakdown:
    """Roofline runtime plus the full accounting for one cluster alone."""
    params = params or EnergyParams()
    compute = compute_cycles(cluster, spec)
    traffic = traffic_bytes(spec, value_bytes, index_bytes, refetch)
    mem = memory_cycles(traffic, cluster.frequency, bandwidth)
    rt = max(compute, mem)
    executed = executed_iterations(spec)
    useful = effectual_macs(spec)
    util = useful / (cluster.pe_count * rt)
    words = traffic / value_bytes
    idle = cluster.pe_count * rt - executed
    e = energy(executed, words, words, idle, params)
    edp = e * rt / cluster.frequency
    return CostBreakdown(compute, mem, rt, traffic, useful, util, e, edp)
