# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
Command-line entry point.

    vdatherm run <config> [--threads N] [--set key=value ...] [--overlay file] [--output dir]
    vdatherm compare <a.csv> <b.csv> [--window t0:t1] [--output metrics.csv]
    vdatherm calibrate <config> [--threads N] [--workers N] [--output dir]
    vdatherm mesh <config> [--output file.vtk]

Assumptions:
- Exit status 0 on success, 2 on config errors, 1 on any other failure
- Logs go to stderr, tables and summaries to stdout
- Output directory precedence: --output, then the config, then settings
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from vdatherm.calibrate import (
    CalibrationError,
    MetricsError,
    calibrate_config,
    error_metrics,
    metrics_frame,
)
from vdatherm.config import settings
from vdatherm.contract.loader import ConfigError, apply_overrides, parse_config, read_document
from vdatherm.contract.models import SimulationConfig
from vdatherm.logging_config import configure_logging, get_logger
from vdatherm.mesh import MeshError, build_mesh
from vdatherm.outputs import export_mesh, read_probes, write_frame, write_json
from vdatherm.process import ScheduleError
from vdatherm.solver import SolverError, run
from vdatherm.version import __version__

logger = get_logger(__name__)


def _window(text: Optional[str]) -> Optional[tuple[float, float]]:
    if text is None:
        return None
    try:
        lo, hi = (float(v) for v in text.split(":", 1))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"window must be t0:t1, got {text!r}") from exc
    if hi < lo:
        raise argparse.ArgumentTypeError("window end must not precede its start")
    return lo, hi


def _load(args: argparse.Namespace) -> tuple[dict, SimulationConfig]:
    document = read_document(args.config)
    overlay = read_document(args.overlay) if getattr(args, "overlay", None) else None
    apply_overrides(document, getattr(args, "set", None) or (), overlay)
    try:
        return document, parse_config(document)
    except ConfigError as exc:
        raise ConfigError(f"{args.config}: {exc}") from exc


def _output_dir(args: argparse.Namespace, config: SimulationConfig) -> Path:
    if args.output:
        return Path(args.output)
    if config.output.directory:
        return Path(config.output.directory)
    return Path(settings.output_dir)


def cmd_run(args: argparse.Namespace) -> int:
    _, config = _load(args)
    out = _output_dir(args, config)
    result = run(config, threads=args.threads or settings.threads, output_dir=out)
    summary = {k: v for k, v in result.summary.items() if k != "mesh"}
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    a = read_probes(args.a)
    b = read_probes(args.b)
    table = metrics_frame(error_metrics(a, b, args.window))
    print(table.to_string(index=False))
    if args.output:
        write_frame(table, args.output)
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    document, config = _load(args)
    if config.calibration is None:
        raise ConfigError(f"{args.config}: no calibration block")
    reference_path = Path(config.calibration.reference)
    if not reference_path.is_absolute():
        reference_path = Path(args.config).parent / reference_path
    reference = read_probes(reference_path)
    out = _output_dir(args, config)
    out.mkdir(parents=True, exist_ok=True)
    fitted = calibrate_config(
        document, config.calibration, reference,
        threads=args.threads or settings.threads, workers=args.workers,
    )
    write_json(fitted.overlay, out / "overlay.json")
    write_frame(fitted.result.trace_frame(), out / "trace.csv")
    if fitted.validation:
        write_frame(metrics_frame(fitted.validation), out / "validation.csv")
    print(json.dumps(
        {"best": fitted.overlay, "objective": fitted.result.objective,
         "evaluations": fitted.result.evaluations, "converged": fitted.result.converged},
        indent=2, sort_keys=True,
    ))
    return 0


def cmd_mesh(args: argparse.Namespace) -> int:
    _, config = _load(args)
    mesh = build_mesh(config.geometry, config.mesh_variant)
    path = Path(args.output or f"mesh_{config.mesh_variant}.vtk")
    export_mesh(mesh, path)
    print(json.dumps(mesh.summary(), indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vdatherm",
        description="Part-scale thermal simulation of powder-bed fusion builds",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ERROR")
    parser.add_argument("--json-logs", action="store_true", default=None, help="log as JSON lines")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a build")
    p_run.add_argument("config")
    p_run.add_argument("--threads", type=int, default=None)
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p_run.add_argument("--overlay", default=None, help="JSON object of path: value overrides")
    p_run.add_argument("--output", default=None, help="output directory")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="MAE/MRE of probe series A against reference B")
    p_cmp.add_argument("a")
    p_cmp.add_argument("b")
    p_cmp.add_argument("--window", type=_window, default=None, metavar="T0:T1")
    p_cmp.add_argument("--output", default=None, help="CSV file for the metric table")
    p_cmp.set_defaults(func=cmd_compare)

    p_cal = sub.add_parser("calibrate", help="fit the calibration block of a config")
    p_cal.add_argument("config")
    p_cal.add_argument("--threads", type=int, default=None)
    p_cal.add_argument("--workers", type=int, default=1, help="concurrent objective evaluations")
    p_cal.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p_cal.add_argument("--output", default=None, help="output directory")
    p_cal.set_defaults(func=cmd_calibrate)

    p_mesh = sub.add_parser("mesh", help="build and export the mesh only")
    p_mesh.add_argument("config")
    p_mesh.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p_mesh.add_argument("--output", default=None, help="VTK file")
    p_mesh.set_defaults(func=cmd_mesh)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level, args.json_logs)
    try:
        return args.func(args)
    except ConfigError as exc:
        logger.error("config_error", command=args.command, error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, MeshError, ScheduleError, CalibrationError, MetricsError,
            ValueError, OSError) as exc:
        logger.error("run_failed", command=args.command, error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return 1


def cli() -> None:
    sys.exit(main())


if __name__ == "__main__":
    cli()
