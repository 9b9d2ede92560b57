"""Batch front-end: verify kernels, cost kernels, run scheduling sweeps.

Subcommands:
  verify         kernel-vs-reference property checks with exact counters
  cost           per-cluster cost table for one kernel on one accelerator
  sweep          workload-suite comparison across presets (plot-ready CSV)
  schedule-many  queue assignment timeline and total completion
  emit-presets   write preset accelerator configs as JSON files

Every emitted number is reproducible by direct library calls; identical
arguments and seed produce byte-identical artifacts. Exit codes: 0 success,
1 validation failure, 2 input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import archtemplate as archmod
from . import kernels as kernelmod
from . import scheduler as schedmod
from . import workloads as wlmod
from .costmodel import UNLIMITED, CostModelError, KernelSpec, make_spec, runtime, supported_ccfs
from .formats import DENSE_B, FormatError, gen_uniform_random

COST_COLUMNS = (
    "cluster", "compute_cycles", "memory_cycles", "runtime",
    "utilization", "energy", "edp",
)
SWEEP_COLUMNS = (
    "bandwidth", "workload", "preset", "makespan_cycles", "speedup",
    "utilization", "energy", "edp", "energy_improvement", "edp_improvement",
)


class InputError(ValueError):
    """Bad command-line input (exit code 2)."""


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters for the scheduling subcommands."""

    accelerator: str  # preset name or config file path
    workload_source: str  # "builtin" | "file" | "demo"
    bandwidths: tuple
    mode: str  # "single" | "many"
    objective: str
    out: str | None
    format: str
    seed: int
    charge_conversion: bool = False
    grid: tuple = schedmod.DEFAULT_GRID

    def __post_init__(self):
        if self.workload_source not in ("builtin", "file", "demo"):
            raise InputError(f"bad workload source {self.workload_source!r}")
        if self.mode not in ("single", "many"):
            raise InputError(f"bad mode {self.mode!r}")
        if self.objective not in ("makespan", "edp"):
            raise InputError(f"bad objective {self.objective!r}")
        if self.mode == "many" and self.objective != "makespan":
            raise InputError("many-kernel scheduling optimizes completion time only")
        if self.format not in ("csv", "json"):
            raise InputError(f"bad format {self.format!r}")
        if not self.bandwidths:
            raise InputError("at least one bandwidth is required")


def _parse_bandwidth(text: str) -> float:
    if text.strip().lower() == "unlimited":
        return UNLIMITED
    try:
        value = float(text)
    except ValueError:
        raise InputError(f"bandwidth must be a number or 'unlimited': {text!r}")
    if value <= 0:
        raise InputError("bandwidth must be positive")
    return value


def _bandwidth_label(bw: float) -> str:
    return "unlimited" if bw == UNLIMITED else f"{bw:g}"


def _parse_grid(denominator: int) -> tuple:
    if denominator < 1:
        raise InputError("--grid must be >= 1")
    return tuple(i / denominator for i in range(denominator + 1))


def _load_accelerator(args) -> archmod.AespaConfig:
    if getattr(args, "config", None) and getattr(args, "preset", None):
        raise InputError("give either --config or --preset, not both")
    if getattr(args, "config", None):
        return archmod.load_config(args.config)
    name = getattr(args, "preset", None) or "aespa-quarters"
    return archmod.preset(name)


def _resolve_suite(source: str):
    entries = wlmod.builtin_suite() if source == "builtin" else wlmod.load_suite(source)
    return [e.spec for e in entries]


def _write_text(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _render_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _render_csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: row.get(c, "") for c in columns})
    return buf.getvalue()


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    rng = np.random.default_rng(args.seed)
    densities = [float(d) for d in args.densities.split(",")] if args.densities else [0.01, 0.1, 0.5, 1.0]
    per_dataflow = {}
    failures = 0
    checks = 0
    # construction must reject an invariant-violating payload
    from .formats import CSR_A, StoredMatrix

    try:
        StoredMatrix(2, 2, CSR_A, pos=np.array([0, 1, 2]), crd=np.array([0, 5]), values=np.array([1.0, 1.0]))
        failures += 1
        print("format-invariants: FAIL (out-of-range crd accepted)")
    except FormatError:
        print("format-invariants: pass")

    for i in range(args.seeds):
        m = int(rng.integers(1, args.max_extent + 1))
        k = int(rng.integers(1, args.max_extent + 1))
        n = int(rng.integers(1, args.max_extent + 1))
        d_a = densities[i % len(densities)]
        d_b = densities[(i + 1) % len(densities)]
        a = gen_uniform_random(m, k, d_a, int(rng.integers(0, 2**63)))
        b = gen_uniform_random(k, n, d_b, int(rng.integers(0, 2**63)), ccf=DENSE_B)
        oracle = a.dense @ b.dense
        for pair, kernel in kernelmod.KERNEL_BY_PAIR.items():
            result = kernelmod.run_pair(a, b, pair)
            checks += 1
            stats = per_dataflow.setdefault(pair, {"instances": 0, "macs": 0, "iterations": 0, "mismatches": 0})
            stats["instances"] += 1
            stats["macs"] += result.counters.macs
            stats["iterations"] += result.counters.loop_iterations
            if not np.array_equal(result.output.dense, oracle):
                stats["mismatches"] += 1
                failures += 1
    for pair, stats in per_dataflow.items():
        status = "pass" if stats["mismatches"] == 0 else f"FAIL ({stats['mismatches']})"
        print(
            f"{pair[0]},{pair[1]}: {status}  instances={stats['instances']} "
            f"iterations={stats['iterations']} macs={stats['macs']}"
        )
    print(f"verify: {checks} kernel checks, {failures} failures (backend: {kernelmod.BACKEND})")
    if args.out:
        report = {
            "backend": kernelmod.BACKEND,
            "checks": checks,
            "failures": failures,
            "per_dataflow": {f"{p[0]},{p[1]}": s for p, s in per_dataflow.items()},
        }
        _write_text(_render_json(report), args.out)
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# cost


def _parse_shape(args) -> KernelSpec:
    if args.workload:
        for entry in wlmod.builtin_suite():
            if entry.name == args.workload:
                return entry.spec
        raise InputError(f"unknown workload {args.workload!r}")
    if not args.shape:
        raise InputError("give --workload or --shape MxKxN")
    try:
        m, k, n = (int(x) for x in args.shape.lower().split("x"))
    except ValueError:
        raise InputError(f"bad --shape {args.shape!r}, expected MxKxN")
    d_a, d_b = 1.0, 1.0
    if args.density:
        try:
            parts = [float(x) for x in args.density.split(",")]
            d_a, d_b = (parts[0], parts[0]) if len(parts) == 1 else parts
        except (ValueError, IndexError):
            raise InputError(f"bad --density {args.density!r}, expected dA,dB")
    return make_spec(f"{m}x{k}x{n}", m, k, n, d_a, d_b)


def cmd_cost(args) -> int:
    config = _load_accelerator(args)
    spec = _parse_shape(args)
    bandwidth = _parse_bandwidth(args.bandwidth)
    rows = []
    for cluster in config.clusters:
        best = None
        for pair in supported_ccfs(cluster.dataflow):
            bd = runtime(
                cluster, spec.with_pair(pair), bandwidth, config.energy,
                config.value_bytes, config.index_bytes,
            )
            key = (bd.runtime_cycles, bd.edp)
            if best is None or key < best[0]:
                best = (key, bd)
        bd = best[1]
        rows.append(
            {
                "cluster": cluster.name,
                "compute_cycles": bd.compute_cycles,
                "memory_cycles": bd.memory_cycles,
                "runtime": bd.runtime_cycles,
                "utilization": bd.effective_utilization,
                "energy": bd.energy,
                "edp": bd.edp,
            }
        )
    text = _render_csv(rows, COST_COLUMNS) if args.format == "csv" else _render_json(rows)
    sys.stdout.write(text)
    if args.out:
        _write_text(text, args.out)
    return 0


# ---------------------------------------------------------------------------
# sweep


def cmd_sweep(args) -> int:
    run = RunConfig(
        accelerator="(sweep)",
        workload_source="builtin" if args.suite == "builtin" else "file",
        bandwidths=tuple(_parse_bandwidth(b) for b in args.bandwidth) or (1.0e12,),
        mode="single",
        objective=args.objective,
        out=args.out,
        format=args.format,
        seed=0,
        charge_conversion=args.charge_conversion,
        grid=_parse_grid(args.grid),
    )
    suite = _resolve_suite(args.suite)
    if args.presets == "all":
        names = list(archmod.PRESET_NAMES)
    else:
        names = [p.strip() for p in args.presets.split(",") if p.strip()]
    configs = {}
    for name in names:
        configs[name] = archmod.preset(name)
    if args.baseline not in configs:
        configs[args.baseline] = archmod.preset(args.baseline)

    artifacts = []
    for bw in run.bandwidths:
        table = schedmod.compare_baselines(
            suite, configs, bw, baseline=args.baseline, objective=run.objective,
            grid=run.grid, charge_conversion=run.charge_conversion,
        )
        label = _bandwidth_label(bw)
        rows = []
        for r in table["rows"]:
            row = dict(r)
            row["bandwidth"] = label
            rows.append(row)
        for g in table["geomean"]:
            rows.append(
                {
                    "bandwidth": label,
                    "workload": "geomean",
                    "preset": g["preset"],
                    "speedup": g["speedup"],
                    "utilization": g["utilization"],
                    "energy_improvement": g["energy_improvement"],
                    "edp_improvement": g["edp_improvement"],
                }
            )
        artifacts.append((label, rows))

    for i, (label, rows) in enumerate(artifacts):
        text = _render_csv(rows, SWEEP_COLUMNS) if args.format == "csv" else _render_json(rows)
        out = args.out
        if out and len(artifacts) > 1:
            stem, dot, ext = out.rpartition(".")
            out = f"{stem}-{label}{dot}{ext}" if dot else f"{out}-{label}"
        if out:
            _write_text(text, out)
        else:
            sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# schedule-many


def cmd_schedule_many(args) -> int:
    if args.demo_queue and args.queue:
        raise InputError("give --queue FILE or --demo-queue, not both")
    run = RunConfig(
        accelerator=args.config or args.preset or "aespa-quarters",
        workload_source="demo" if args.demo_queue else "file",
        bandwidths=(_parse_bandwidth(args.bandwidth),),
        mode="many",
        objective="makespan",
        out=args.out,
        format=args.format,
        seed=0,
    )
    config = _load_accelerator(args)
    bandwidth = run.bandwidths[0]
    if args.demo_queue:
        queue = wlmod.demo_many_kernel_queue()
    elif args.queue:
        queue = [e.spec for e in wlmod.load_suite(args.queue)]
    else:
        raise InputError("give --queue FILE or --demo-queue")
    if not queue:
        raise InputError("queue is empty")
    report = schedmod.schedule_many(queue, config, bandwidth)
    obj = report.as_dict()
    obj["preset"] = config.name
    obj["bandwidth"] = _bandwidth_label(bandwidth)
    if args.format == "csv":
        rows = [a.as_dict() for a in report.assignments]
        text = _render_csv(rows, ("kernel", "cluster", "ccf_a", "ccf_b", "start_cycle", "end_cycle"))
        text += f"total_cycles,{report.total_cycles}\n"
    else:
        text = _render_json(obj)
    sys.stdout.write(text)
    if args.out:
        _write_text(text, args.out)
    return 0


# ---------------------------------------------------------------------------
# emit-presets


def cmd_emit_presets(args) -> int:
    import os

    names = (
        [p.strip() for p in args.presets.split(",") if p.strip()]
        if args.presets != "all"
        else [n for n in archmod.PRESET_NAMES if n != "aespa-searched"]
    )
    os.makedirs(args.out, exist_ok=True)
    for name in names:
        config = archmod.preset(name)
        path = os.path.join(args.out, f"{name}.json")
        archmod.save_config(config, path)
        print(f"{name}: {path}  peak_tflops={archmod.peak_tflops(config)!r}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spaccel",
        description="Analytical simulator and scheduler for heterogeneous sparse matmul accelerators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="kernel-vs-reference property checks")
    p.add_argument("--seeds", type=int, default=25, help="number of random instances")
    p.add_argument("--max-extent", type=int, default=48)
    p.add_argument("--densities", default=None, help="comma list, default 0.01,0.1,0.5,1.0")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)

    p = sub.add_parser("cost", help="cost one kernel on each cluster of an accelerator")
    p.add_argument("--workload", default=None, help="builtin workload name")
    p.add_argument("--shape", default=None, help="MxKxN")
    p.add_argument("--density", default=None, help="dA,dB (default dense)")
    p.add_argument("--preset", default=None, choices=archmod.PRESET_NAMES)
    p.add_argument("--config", default=None, help="accelerator config JSON")
    p.add_argument("--bandwidth", default="1e12")
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    p.add_argument("--out", default=None)

    p = sub.add_parser("sweep", help="suite x preset comparison table")
    p.add_argument("--suite", default="builtin", help="'builtin' or a suite JSON file")
    p.add_argument("--presets", default="all", help="'all' or comma list of preset names")
    p.add_argument("--baseline", default="homog-eie")
    p.add_argument("--bandwidth", action="append", default=[], help="repeatable; number or 'unlimited'")
    p.add_argument("--objective", default="makespan", choices=("makespan", "edp"))
    p.add_argument("--grid", type=int, default=8, help="split-fraction denominator")
    p.add_argument("--charge-conversion", action="store_true")
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    p.add_argument("--out", default=None)

    p = sub.add_parser("schedule-many", help="assign a kernel queue to clusters")
    p.add_argument("--queue", default=None, help="suite-format JSON file")
    p.add_argument("--demo-queue", action="store_true")
    p.add_argument("--preset", default=None, choices=archmod.PRESET_NAMES)
    p.add_argument("--config", default=None)
    p.add_argument("--bandwidth", default="unlimited")
    p.add_argument("--format", default="json", choices=("csv", "json"))
    p.add_argument("--out", default=None)

    p = sub.add_parser("emit-presets", help="write preset accelerator configs")
    p.add_argument("--presets", default="all")
    p.add_argument("--out", default="presets")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "verify": cmd_verify,
        "cost": cmd_cost,
        "sweep": cmd_sweep,
        "schedule-many": cmd_schedule_many,
        "emit-presets": cmd_emit_presets,
    }
    try:
        return handlers[args.command](args)
    except (InputError, FormatError, CostModelError, schedmod.ScheduleError,
            archmod.ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
