"""Command-line entry point.

    cellpolar --config run.yaml --set M=12 --out results/
    cellpolar --set model=hilbert --sweep 3.14:12.57:4 --bisect --workers 2

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import io, linsys
from .core import ConfigError
from .runner import BisectionRefused, run, sweep

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cellpolar", description="Run cell-polarisation finite-volume simulations.")
    p.add_argument("--config", help="flat key/value YAML file with SimConfig fields")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("--out", help="output directory for snapshots, diagnostics and summaries")
    p.add_argument("--sweep", metavar="M_LOW:M_HIGH:N", help="run N log-spaced masses")
    p.add_argument("--bisect", action="store_true", help="refine the outcome change found by --sweep")
    p.add_argument("--workers", type=int, default=1, help="parallel sweep workers")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def parse_sweep(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--sweep expects M_low:M_high:n, got {text!r}")
    try:
        low, high, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"--sweep expects M_low:M_high:n, got {text!r}") from None
    if not 0 < low < high or n < 2:
        raise ConfigError("--sweep needs 0 < M_low < M_high and n >= 2")
    return low, high, n


def _num(x):
    return "nan" if x is None else repr(float(x))


def _print_summary(s, out=None):
    print(f"model={s.model} M={_num(s.M)} outcome={s.outcome} stop_time={_num(s.stop_time)} "
          f"mode_ratio={_num(s.mode_ratio)}", file=out or sys.stdout)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = io.load_config(args.config, args.overrides)
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        if args.bisect and not args.sweep:
            raise ConfigError("--bisect requires --sweep")
        bounds = parse_sweep(args.sweep) if args.sweep else None
    except ConfigError as exc:
        print(f"cellpolar: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        if bounds is None:
            summary = run(config, args.out)
            _print_summary(summary)
            return EXIT_OK
        result = sweep(config, *bounds, bisect=args.bisect, out_dir=args.out, workers=args.workers)
    except BisectionRefused as exc:
        for _, s in exc.summaries:
            _print_summary(s)
        print(f"cellpolar: bisection refused: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ConfigError) as exc:
        print(f"cellpolar: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"cellpolar: I/O error on {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_USAGE
    except (linsys.SolverFailure, ArithmeticError, RuntimeError) as exc:
        print(f"cellpolar: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    for _, s in result.runs:
        _print_summary(s)
    if result.bracket is not None:
        print(f"threshold={_num(result.threshold)} bracket={_num(result.bracket[0])}:"
              f"{_num(result.bracket[1])} iterations={result.iterations}")
    else:
        print("threshold=nan (no outcome change in range)")
    if args.out:
        data = {
            "runs": [s.to_dict() for _, s in result.runs],
            "threshold": result.threshold,
            "bracket": list(result.bracket) if result.bracket else None,
            "iterations": result.iterations,
        }
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "sweep.json").write_text(json.dumps(data, indent=2))
    return EXIT_OK
