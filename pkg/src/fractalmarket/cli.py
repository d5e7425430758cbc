"""Command-line interface.

Subcommands: simulate (arbitrage experiment), calculus (refinement
verifier suite), validate-config, version. Exit codes: 0 pass,
2 statistical failure, 3 internal-consistency failure, 4 config error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import __version__, _kernels
from .config import load_config
from .errors import ConfigError
from .harness import (
    EXIT_CONFIG_ERROR,
    run_calculus_suite,
    run_experiment,
    write_report,
)


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="path to a JSON config")
    parser.add_argument("--seeds", type=int, default=None,
                        help="override num_seeds from the config")
    parser.add_argument("--out", default=None,
                        help="override output_dir from the config")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads; 0 = auto")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fractalmarket",
        description="Fractal-modulated market simulation and arbitrage verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_flags(sub.add_parser("simulate", help="run the arbitrage experiment"))
    _add_run_flags(sub.add_parser("calculus", help="run the calculus verifier suite"))
    validate = sub.add_parser("validate-config", help="check a config file")
    validate.add_argument("--config", required=True)
    sub.add_parser("version", help="print version and kernel implementation")
    return parser


def _load(args):
    config = load_config(args.config)
    if getattr(args, "seeds", None) is not None:
        if args.seeds < 1:
            raise ConfigError(["--seeds must be a positive integer"])
        config = replace(config, num_seeds=args.seeds)
    if getattr(args, "out", None):
        config = replace(config, output_dir=args.out)
    return config


def _print_summary(report, written) -> None:
    for name, value in sorted(report.slopes.items()):
        print(f"slope {name}: {value:.4f}")
    for name, passed in sorted(report.verdicts.items()):
        print(f"verdict {name}: {'pass' if passed else 'FAIL'}")
    for err in report.errors:
        print(f"error: {err}")
    for path in written:
        print(f"wrote {path}")
    print(f"exit code {report.exit_code()}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "version":
        print(f"fractalmarket {__version__} (kernels: {_kernels.IMPLEMENTATION})")
        return 0
    try:
        config = _load(args)
    except ConfigError as exc:
        for violation in exc.violations:
            print(f"config error: {violation}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    if args.command == "validate-config":
        print("config OK")
        return 0
    try:
        if args.command == "simulate":
            report = run_experiment(config, threads=args.threads)
        else:
            report = run_calculus_suite(config, threads=args.threads)
    except ConfigError as exc:
        for violation in exc.violations:
            print(f"config error: {violation}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    written = write_report(report, config.output_dir)
    _print_summary(report, written)
    return report.exit_code()


if __name__ == "__main__":
    raise SystemExit(main())
