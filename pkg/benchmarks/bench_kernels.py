#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the pure-Python fallback.

Runs each dataflow kernel on identical seeded operands through both
backends, checks the outputs and counters agree, and reports wall times.

    python benchmarks/bench_kernels.py --extent 96 --density 0.1 --repeats 3
"""

import argparse
import time

import numpy as np

from spaccel.formats import DENSE_B, compress, gen_uniform_random, parse_ccf
from spaccel.kernels import _core_py

try:
    from spaccel.kernels import _core
except ImportError:
    _core = None

CASES = (
    ("dense_gemm", ("UMUK", "UKUN")),
    ("spmm_a_compressed", ("UMCK", "UKUN")),
    ("spmm_b_compressed", ("UMUK", "UNCK")),
    ("spgemm_inner", ("UMCK", "UNCK")),
    ("spgemm_outer", ("UKCM", "UKCN")),
    ("spgemm_gustavson", ("UKCM", "UNCK")),
)


def _operands(func_name, a, b, pair):
    fa = compress(a, parse_ccf(pair[0])) if "C" in pair[0] else a
    fb = compress(b, parse_ccf(pair[1])) if "C" in pair[1] else b
    if func_name == "dense_gemm":
        return (fa.dense, fb.dense)
    if func_name == "spmm_a_compressed":
        return (fa.pos, fa.crd, fa.values, fb.dense)
    if func_name == "spmm_b_compressed":
        return (fa.dense, fb.pos, fb.crd, fb.values)
    args = (fa.pos, fa.crd, fa.values, fb.pos, fb.crd, fb.values)
    if func_name == "spgemm_outer":
        return args + (a.rows, b.cols)
    if func_name == "spgemm_gustavson":
        return args + (a.rows,)
    return args


def _time(func, args, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = func(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--extent", type=int, default=96, help="M = K = N")
    parser.add_argument("--density", type=float, default=0.1)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if _core is None:
        print("compiled backend not built; timing the fallback only")

    e = args.extent
    a = gen_uniform_random(e, e, args.density, args.seed)
    b = gen_uniform_random(e, e, args.density, args.seed + 1, ccf=DENSE_B)

    print(f"extent {e}, density {args.density}, best of {args.repeats}")
    print(f"{'kernel':>20} {'python':>12} {'cython':>12} {'speedup':>9}")
    for func_name, pair in CASES:
        ops = _operands(func_name, a, b, pair)
        t_py, r_py = _time(getattr(_core_py, func_name), ops, args.repeats)
        if _core is None:
            print(f"{func_name:>20} {t_py * 1e3:>10.2f}ms {'-':>12} {'-':>9}")
            continue
        t_cy, r_cy = _time(getattr(_core, func_name), ops, args.repeats)
        assert np.allclose(r_py[0], r_cy[0]), func_name
        assert tuple(r_py[1:]) == tuple(int(x) for x in r_cy[1:]), func_name
        print(
            f"{func_name:>20} {t_py * 1e3:>10.2f}ms {t_cy * 1e3:>10.2f}ms "
            f"{t_py / t_cy:>8.1f}x"
        )


if __name__ == "__main__":
    main()
