"""Functional matrix-multiplication kernels, one per dataflow class.

Each kernel executes the loop nest its accelerator class implements, on
operands stored in the formats that class consumes, and reports exact
instrumentation counters (innermost-loop trip count, multiply-accumulates,
and metadata comparisons). The counters ground the analytical cycle model.

Two interchangeable backends provide the inner loops: a compiled extension
(``spaccel.kernels._core``) and a pure-Python fallback, selected at import.
Set SPACCEL_PURE_PYTHON=1 to force the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..formats import DENSE_OUT, StoredMatrix, compress, decompress, parse_ccf

if os.environ.get("SPACCEL_PURE_PYTHON", "").strip() not in ("", "0"):
    from . import _core_py as _backend

    BACKEND = "python"
else:
    try:
        from . import _core as _backend

        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _core_py as _backend

        BACKEND = "python"


class KernelError(ValueError):
    """Operand shapes or formats unsupported by the requested kernel."""


@dataclass(frozen=True)
class KernelCounters:
    loop_iterations: int
    macs: int
    index_comparisons: int

    def __post_init__(self):
        if min(self.loop_iterations, self.macs, self.index_comparisons) < 0:
            raise KernelError("counters must be non-negative")
        if self.macs > self.loop_iterations:
            raise KernelError("macs cannot exceed loop iterations")


@dataclass(frozen=True)
class KernelResult:
    output: StoredMatrix
    counters: KernelCounters


def _check(a: StoredMatrix, b: StoredMatrix, tag_a: str, tag_b: str):
    if a.ccf.tag != tag_a or b.ccf.tag != tag_b:
        raise KernelError(
            f"operands must be ({tag_a}, {tag_b}), got ({a.ccf.tag}, {b.ccf.tag})"
        )
    if a.cols != b.rows:
        raise KernelError(f"shape mismatch: {a.rows}x{a.cols} times {b.rows}x{b.cols}")


def _result(out: np.ndarray, iters, macs, cmps) -> KernelResult:
    output = StoredMatrix(out.shape[0], out.shape[1], DENSE_OUT, dense=out)
    return KernelResult(output, KernelCounters(int(iters), int(macs), int(cmps)))


def run_dense_gemm(a: StoredMatrix, b: StoredMatrix) -> KernelResult:
    """Dense x dense product; every (m, k, n) body executes (systolic style)."""
    _check(a, b, "UMUK", "UKUN")
    return _result(*_backend.dense_gemm(a.dense, b.dense))


def run_spmm_eie(a: StoredMatrix, b: StoredMatrix) -> KernelResult:
    """One-operand-compressed product along K (row/column streaming style)."""
    if a.ccf.tag == "UMCK" and b.ccf.tag == "UKUN":
        _check(a, b, "UMCK", "UKUN")
        return _result(*_backend.spmm_a_compressed(a.pos, a.crd, a.values, b.dense))
    if a.ccf.tag == "UMUK" and b.ccf.tag == "UNCK":
        _check(a, b, "UMUK", "UNCK")
        return _result(*_backend.spmm_b_compressed(a.dense, b.pos, b.crd, b.values))
    raise KernelError(
        f"exactly one operand must be compressed along K, got ({a.ccf.tag}, {b.ccf.tag})"
    )


def run_spgemm_inner(a: StoredMatrix, b: StoredMatrix) -> KernelResult:
    """Sparse x sparse inner product: two-pointer K-coordinate intersection."""
    _check(a, b, "UMCK", "UNCK")
    return _result(
        *_backend.spgemm_inner(a.pos, a.crd, a.values, b.pos, b.crd, b.values)
    )


def run_spgemm_outer(a: StoredMatrix, b: StoredMatrix) -> KernelResult:
    """Sparse x sparse outer product: one rank-1 update per K slice."""
    _check(a, b, "UKCM", "UKCN")
    return _result(
        *_backend.spgemm_outer(
            a.pos, a.crd, a.values, b.pos, b.crd, b.values, a.rows, b.cols
        )
    )


def run_spgemm_gustavson(a: StoredMatrix, b: StoredMatrix) -> KernelResult:
    """Sparse x sparse column-wise product: stream A columns named by B."""
    _check(a, b, "UKCM", "UNCK")
    return _result(
        *_backend.spgemm_gustavson(
            a.pos, a.crd, a.values, b.pos, b.crd, b.values, a.rows
        )
    )


# CCF pair -> kernel, used by plan execution and the verification command.
KERNEL_BY_PAIR = {
    ("UMUK", "UKUN"): run_dense_gemm,
    ("UMCK", "UKUN"): run_spmm_eie,
    ("UMUK", "UNCK"): run_spmm_eie,
    ("UMCK", "UNCK"): run_spgemm_inner,
    ("UKCM", "UKCN"): run_spgemm_outer,
    ("UKCM", "UNCK"): run_spgemm_gustavson,
}


def run_pair(a_dense: StoredMatrix, b_dense: StoredMatrix, pair) -> KernelResult:
    """Convert dense operands to a CCF pair and run the matching kernel."""
    try:
        kernel = KERNEL_BY_PAIR[tuple(pair)]
    except KeyError:
        raise KernelError(f"no kernel consumes the pair {pair}") from None
    a = compress(decompress(a_dense), parse_ccf(pair[0]))
    b = compress(decompress(b_dense), parse_ccf(pair[1]))
    return kernel(a, b)
