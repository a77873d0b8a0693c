"""Command line front end: run experiments, verify acceptance, plot CSVs.

Exit codes: 0 success, 1 acceptance failures, 2 configuration or usage
errors, 3 runtime invariant violations (blowup, monotonicity, positivity,
inconclusive probes).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, parse_config
from .experiments import run_experiment
from .similarity import BlowupError, InvariantViolation, ProbeInconclusive
from .verify import format_results, run_all
from ._version import __version__


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hjcrit",
        description="Numerical laboratory for critical gradient-absorption diffusion",
    )
    parser.add_argument("--version", action="version", version=f"hjcrit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a TOML config")
    p_run.add_argument("config", help="path to the TOML config file")

    p_verify = sub.add_parser("verify", help="run the acceptance battery")
    p_verify.add_argument(
        "--fast", action="store_true", help="only the sub-second criteria (1-4)"
    )

    p_plot = sub.add_parser("plot", help="render columns of a run CSV as SVG")
    p_plot.add_argument("csv", help="CSV produced by the run subcommand")
    p_plot.add_argument(
        "--cols",
        default="rescaled_mass",
        help="comma-separated column names (default: rescaled_mass)",
    )
    p_plot.add_argument("--log", action="store_true", help="log10 y axis")
    p_plot.add_argument("--out", default=None, help="output SVG path (default: CSV stem + .svg)")
    p_plot.add_argument("--dim", type=int, default=1, help="dimension for reference constants")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    path = Path(args.config)
    if not path.is_file():
        raise ConfigError(f"no such config file: {path}")
    cfg = parse_config(path)
    manifest = run_experiment(cfg)
    print(f"experiment {cfg.experiment} finished in {manifest.wall_clock_seconds:.2f}s")
    print(f"csv      {cfg.csv_path}")
    if cfg.svg_path is not None:
        print(f"svg      {cfg.svg_path}")
    print(f"manifest {cfg.csv_path}.manifest")
    for key, value in manifest.extras.items():
        print(f"{key} = {value}")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    results = run_all(fast=args.fast)
    print(format_results(results))
    return 1 if any(r.failed for r in results) else 0


def _cmd_plot(args: argparse.Namespace) -> int:
    from .plotting import emit_plot

    columns = [c.strip() for c in args.cols.split(",") if c.strip()]
    if not columns:
        raise ConfigError("--cols must name at least one column")
    csv_path = Path(args.csv)
    if not csv_path.is_file():
        raise ConfigError(f"no such CSV file: {csv_path}")
    out = emit_plot(
        csv_path,
        columns,
        log_scale=args.log,
        out_path=args.out,
        dim=args.dim,
    )
    print(f"wrote {out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_plot(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (BlowupError, InvariantViolation, ProbeInconclusive) as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
