"""Workload suite, MatrixMarket ingestion, and synthetic spec generation.

The bundled suite covers HPC, graph, and deep-learning matmuls whose shapes
and densities span the regimes that favor different dataflow classes:
ultra-sparse operands, skewed extents, and fully dense layers. "k" suffixes
in the published shapes expand as x1000 exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .costmodel import make_spec
from .formats import DENSE_B, gen_uniform_random, prune_explicit_zeros, read_mtx


@dataclass(frozen=True)
class WorkloadEntry:
    name: str
    application: str
    spec: KernelSpec

    def as_dict(self) -> dict:
        s = self.spec
        return {
            "name": self.name,
            "application": self.application,
            "M": s.M,
            "K": s.K,
            "N": s.N,
            "density_a": s.d_A,
            "density_b": s.d_B,
            "ccf_a": s.ccf_A.tag,
            "ccf_b": s.ccf_B.tag,
        }


# name, application, (M, K, N), (density_A, density_B) as fractions
_SUITE = (
    ("chem97ZtZ", "Stat Problem", (2500, 2500, 1200), (0.0011, 1.0)),
    ("journals", "Weighted Graph", (124, 124, 62), (0.785, 1.0)),
    ("m3plates", "Acoustics", (11000, 11000, 5500), (0.000054, 1.0)),
    ("synthetic_dense", "Varies", (5000, 5000, 2500), (1.0, 1.0)),
    ("bibd_81_3", "Combinatorial", (3200, 85000, 43000), (0.00093, 1.0)),
    ("speech", "Deep Learning", (7700, 2600, 1300), (0.05, 1.0)),
    ("gnmt", "Deep Learning", (1600, 1000, 36000), (0.5, 0.3)),
    ("transformer", "Deep Learning", (32000, 84, 1000), (0.5, 0.3)),
    ("citeseer", "GNN", (3300, 3300, 3700), (0.0011, 0.0085)),
)


def builtin_suite() -> list:
    """The nine bundled workloads, in canonical order."""
    entries = []
    for name, app, (m, k, n), (da, db) in _SUITE:
        entries.append(WorkloadEntry(name, app, make_spec(name, m, k, n, da, db)))
    return entries


def load_mtx(path):
    """Read a MatrixMarket coordinate file as a CSR matrix plus its density.

    Explicitly stored zeros are dropped before the density is derived.
    """
    m = prune_explicit_zeros(read_mtx(path))
    return m, m.nnz / (m.rows * m.cols)


def synth_spec(
    M: int,
    K: int,
    N: int,
    d_A: float,
    d_B: float,
    seed: int,
    materialize: bool = False,
    name: str | None = None,
) -> WorkloadEntry:
    """Synthetic uniform-random workload; optionally attach real matrices."""
    name = name or f"synth-{M}x{K}x{N}-s{seed}"
    a = b = None
    if materialize:
        a = gen_uniform_random(M, K, d_A, seed)
        b = gen_uniform_random(K, N, d_B, seed + 0x9E3779B9, ccf=DENSE_B)
    spec = make_spec(name, M, K, N, d_A, d_B, A=a, B=b)
    return WorkloadEntry(name, "synthetic", spec)


def demo_many_kernel_queue() -> list:
    """Four-task queue exercising each cluster type of a 4-way accelerator:
    a dense layer, a tall one-sparse-operand layer, a deep-K sparse product,
    and a wide-N sparse product."""
    return [
        make_spec("dense-gemm", 1000, 1000, 1000, 1.0, 1.0),
        make_spec("spmm-tall", 2000, 2000, 1000, 0.01, 1.0),
        make_spec("spgemm-deep-k", 400, 3000, 400, 0.05, 0.05),
        make_spec("spgemm-wide-n", 400, 400, 3000, 0.05, 0.05),
    ]


def save_suite(entries, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([e.as_dict() for e in entries], fh, indent=2)
        fh.write("\n")


def load_suite(path) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    entries = []
    for row in raw:
        spec = make_spec(
            row["name"], int(row["M"]), int(row["K"]), int(row["N"]),
            float(row["density_a"]), float(row["density_b"]),
            row.get("ccf_a"), row.get("ccf_b"),
        )
        entries.append(WorkloadEntry(row["name"], row.get("application", ""), spec))
    return entries
