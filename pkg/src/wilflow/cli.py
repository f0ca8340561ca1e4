"""Command-line interface: run a configured simulation, run a convergence
study, or export a revolved surface mesh.

Exit codes: 0 on success, 2 on configuration errors, 3 on numerical
failures; errors are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .analysis import STUDY_KINDS, convergence_study
from .config import ConfigError, RunConfig
from .output import (
    export_surface_obj,
    read_snapshot_curve,
    write_run_outputs,
    write_table,
)
from .schemes import run_simulation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _fail(code: int, kind: str, message: str, **extra) -> int:
    payload = {"error": kind, "message": message}
    payload.update(extra)
    print(json.dumps(payload), file=sys.stderr)
    return code


def _max_workers() -> int | None:
    value = os.environ.get("WILFLOW_THREADS")
    if not value:
        return None
    try:
        return max(1, int(value))
    except ValueError:
        return None


def cmd_run(args) -> int:
    try:
        config = RunConfig.from_file(args.config)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc), field=exc.field_name)
    out_dir = Path(args.out) if args.out else Path(config.output_dir)
    try:
        run = run_simulation(config)
        write_run_outputs(run, out_dir, export_obj=args.obj)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc), field=exc.field_name)
    except Exception as exc:  # solver/step failures surface here
        return _fail(EXIT_NUMERICAL, type(exc).__name__, str(exc))
    print(f"{run.termination} at t={run.termination_time:g}; "
          f"outputs in {out_dir}")
    return EXIT_OK


def cmd_converge(args) -> int:
    try:
        table = convergence_study(args.kind, args.levels, max_workers=_max_workers())
    except ValueError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc), field="kind/levels")
    except Exception as exc:
        return _fail(EXIT_NUMERICAL, type(exc).__name__, str(exc))
    out_dir = Path(args.out) if args.out else Path(f"converge_{args.kind}")
    write_table(table, out_dir)
    print((out_dir / "table.txt").read_text(), end="")
    return EXIT_OK


def cmd_export_obj(args) -> int:
    try:
        curve = read_snapshot_curve(Path(args.curve_csv))
    except Exception as exc:
        return _fail(EXIT_CONFIG, "config", f"cannot read curve: {exc}",
                     field="curve_csv")
    try:
        export_surface_obj(curve, args.segments, Path(args.out_obj))
    except Exception as exc:
        return _fail(EXIT_NUMERICAL, type(exc).__name__, str(exc))
    print(f"wrote {args.out_obj}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wilflow",
        description="Axisymmetric Willmore flow on polygonal generating curves",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one simulation from a JSON config")
    p_run.add_argument("config", help="path to the JSON run configuration")
    p_run.add_argument("--out", help="output directory (default: config output_dir)")
    p_run.add_argument("--obj", action="store_true",
                       help="also export surface meshes at snapshot times")
    p_run.set_defaults(func=cmd_run)

    p_conv = sub.add_parser("converge", help="run a refinement study")
    p_conv.add_argument("kind", choices=STUDY_KINDS)
    p_conv.add_argument("levels", type=int)
    p_conv.add_argument("--out", help="output directory (default: converge_<kind>)")
    p_conv.set_defaults(func=cmd_converge)

    p_obj = sub.add_parser("export-obj", help="revolve a curve CSV into an OBJ mesh")
    p_obj.add_argument("curve_csv")
    p_obj.add_argument("out_obj")
    p_obj.add_argument("--segments", type=int, default=64)
    p_obj.set_defaults(func=cmd_export_obj)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
