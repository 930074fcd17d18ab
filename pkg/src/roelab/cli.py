"""Command-line scenario runner.

Each subcommand loads its inputs, runs one analysis, and writes a JSON
report of the form {scenario, versions, results, timings}.  Reports are
deterministic byte for byte except for the timings field; sweeps also
emit CSV.  Errors exit with code 2 and a structured error JSON on
stdout.  The ROELAB_THREADS environment variable caps sweep parallelism;
per-seed runs are independent, so the thread count never changes values.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy

from . import __version__
from .concentration import concentration_witness
from .covering import covering_unitary, outer_roundtrip
from .extraction import extract_pair
from .fixtures import noisy_covering_unitary
from .locality import quasi_locality_violation
from .maps import closeness
from .operators import FiberedSpace
from .serialize import load_map, load_space, read_operator, report_bytes, write_operator

__all__ = ["main"]


def _thread_count() -> int:
    raw = os.environ.get("ROELAB_THREADS", "")
    if raw.strip():
        return max(1, int(raw))
    return min(8, os.cpu_count() or 1)


def _versions() -> dict:
    return {"roelab": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _emit(args, scenario: dict, results: dict, elapsed: float) -> None:
    report = {
        "scenario": scenario,
        "versions": _versions(),
        "results": results,
        "timings": {"elapsed_s": elapsed},
    }
    payload = report_bytes(report)
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(payload)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(payload.decode())


def _load_unitary(args):
    target = load_space(args.space)
    source = load_space(args.source_space) if getattr(args, "source_space", None) else None
    return read_operator(args.unitary, target, source)


def _cmd_extract(args) -> int:
    t0 = time.perf_counter()
    U = _load_unitary(args)
    report = extract_pair(U, args.delta)
    scenario = {"kind": "extract", "unitary": args.unitary, "space": args.space,
                "source_space": args.source_space, "delta": args.delta}
    _emit(args, scenario, report.to_json(), time.perf_counter() - t0)
    return 0


def _parse_fibers(spec: str, n: int) -> np.ndarray:
    parts = [p for p in spec.split(",") if p.strip()]
    if len(parts) == 1:
        return np.full(n, int(parts[0]))
    if len(parts) != n:
        raise ValueError(f"fiber spec lists {len(parts)} dims for {n} points")
    return np.array([int(p) for p in parts])


def _cmd_cover(args) -> int:
    t0 = time.perf_counter()
    f = load_map(args.map)
    source = FiberedSpace(f.source, _parse_fibers(args.fibers, f.source.n))
    U, plan = covering_unitary(f, source, separation=args.separation)
    if args.save_unitary:
        write_operator(args.save_unitary, U)
    results = {
        "plan": plan.to_json(),
        "unitarity_residual": U.unitarity_residual(),
        "support_radius": plan.support_radius,
    }
    scenario = {"kind": "cover", "map": args.map, "fibers": args.fibers,
                "separation": args.separation, "save_unitary": args.save_unitary}
    _emit(args, scenario, results, time.perf_counter() - t0)
    return 0


def _cmd_witness(args) -> int:
    t0 = time.perf_counter()
    U = _load_unitary(args)
    h_index = None if args.sweep_h else args.h_index
    witness = concentration_witness(U, args.y, args.radius, h_index)
    scenario = {"kind": "witness", "unitary": args.unitary, "space": args.space,
                "source_space": args.source_space, "y": args.y, "radius": args.radius,
                "h_index": h_index}
    _emit(args, scenario, witness.to_json(), time.perf_counter() - t0)
    return 0


def _cmd_ql(args) -> int:
    t0 = time.perf_counter()
    U = _load_unitary(args)
    report = quasi_locality_violation(U, args.radius, mode=args.mode, seed=args.seed)
    scenario = {"kind": "quasi-locality", "unitary": args.unitary, "space": args.space,
                "radius": args.radius, "mode": args.mode, "seed": args.seed}
    _emit(args, scenario, report.to_json(), time.perf_counter() - t0)
    return 0


def _parse_grid(raw: str | None):
    if not raw:
        return None
    return [float(v) for v in raw.split(",") if v.strip()]


def _cmd_outer(args) -> int:
    t0 = time.perf_counter()
    U = _load_unitary(args)
    report = outer_roundtrip(U, args.delta, _parse_grid(args.radius_grid))
    scenario = {"kind": "outer", "unitary": args.unitary, "space": args.space,
                "delta": args.delta, "radius_grid": args.radius_grid}
    _emit(args, scenario, report.to_json(), time.perf_counter() - t0)
    return 0


def _sweep_one(kind: str, n: int, seed: int, noise_radius: float, layers: int, delta: float) -> dict:
    U, h, _ = noisy_covering_unitary(kind, n, seed, noise_radius, layers)
    report = extract_pair(U, delta)
    return {
        "seed": seed,
        "R": report.R,
        "closeness_f_h": closeness(report.f, h),
        "closeness_fg": report.closeness_fg,
        "closeness_gf": report.closeness_gf,
        "verdict": report.equivalence.verdict,
    }


def _cmd_sweep(args) -> int:
    t0 = time.perf_counter()
    seeds = list(range(args.seeds))
    workers = _thread_count()
    if workers == 1:
        rows = [
            _sweep_one(args.h, args.n, s, args.noise_radius, args.layers, args.delta)
            for s in seeds
        ]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(
                pool.map(
                    lambda s: _sweep_one(args.h, args.n, s, args.noise_radius, args.layers, args.delta),
                    seeds,
                )
            )
    rows.sort(key=lambda r: r["seed"])
    scenario = {"kind": "roundtrip-sweep", "h": args.h, "n": args.n,
                "noise_radius": args.noise_radius, "layers": args.layers,
                "seeds": args.seeds, "delta": args.delta}
    if args.csv:
        header = "seed,R,closeness_f_h,closeness_fg,closeness_gf,verdict"
        lines = [header] + [
            f"{r['seed']},{r['R']:.17g},{r['closeness_f_h']:.17g},"
            f"{r['closeness_fg']:.17g},{r['closeness_gf']:.17g},{int(r['verdict'])}"
            for r in rows
        ]
        with open(args.csv, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    _emit(args, scenario, {"rows": rows}, time.perf_counter() - t0)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roelab",
        description="Quantitative coarse geometry of block operators on finite metric spaces",
    )
    parser.add_argument("--version", action="version", version=f"roelab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common_unitary(p):
        p.add_argument("--unitary", required=True, help="binary operator file")
        p.add_argument("--space", required=True, help="target/base space JSON")
        p.add_argument("--source-space", default=None,
                       help="source space JSON for rectangular operators")
        p.add_argument("--out", default=None, help="report JSON path (default stdout)")

    p = sub.add_parser("extract", help="extract the coarse equivalence pair from a unitary")
    common_unitary(p)
    p.add_argument("--delta", type=float, default=0.5)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("cover", help="build a covering unitary for a coarse map")
    p.add_argument("--map", required=True, help="map JSON with embedded spaces")
    p.add_argument("--fibers", default="1", help="uniform dim or comma list per source point")
    p.add_argument("--separation", type=float, default=0.0)
    p.add_argument("--save-unitary", default=None, help="write the unitary here")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_cover)

    p = sub.add_parser("witness", help="build a concentration witness at a point")
    common_unitary(p)
    p.add_argument("--y", type=int, required=True)
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--h-index", type=int, default=0)
    p.add_argument("--sweep-h", action="store_true", help="try every fiber basis vector at y")
    p.set_defaults(func=_cmd_witness)

    p = sub.add_parser("ql", help="quasi-locality violation of an operator")
    common_unitary(p)
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--mode", choices=["exact", "bounds"], default="exact")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_ql)

    p = sub.add_parser("outer", help="outer-automorphism roundtrip decomposition")
    common_unitary(p)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--radius-grid", default=None, help="comma-separated radii")
    p.set_defaults(func=_cmd_outer)

    p = sub.add_parser("sweep", help="seeded roundtrip sweep over noisy covering unitaries")
    p.add_argument("--h", choices=["identity", "reflection", "halving"], default="identity")
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--noise-radius", type=float, default=2.0)
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--csv", default=None, help="per-seed CSV path")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # structured error contract for scripts
        error = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        sys.stdout.write(report_bytes(error).decode())
        return 2


if __name__ == "__main__":
    sys.exit(main())
