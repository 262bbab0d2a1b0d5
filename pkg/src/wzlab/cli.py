"""Command-line interface.

    wzlab run --config FILE [--out DIR] [--seed N] [--threads N]
    wzlab validate-config --config FILE
    wzlab figures-data --figure N [--out DIR]
    wzlab version

Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import __version__
from .errors import ConfigError, WZLabError
from .lab import FIGURE_IDS, ExperimentConfig, run_experiment, write_figure_data


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="wzlab",
        description="Noisy-holonomy numerical laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment config")
    run_p.add_argument("--config", required=True, help="JSON experiment file")
    run_p.add_argument("--out", default=None, help="output directory")
    run_p.add_argument("--seed", type=int, default=None, help="override config seed")
    run_p.add_argument(
        "--threads", type=int, default=1, help="worker threads (0 = auto)"
    )

    val_p = sub.add_parser("validate-config", help="check a config file")
    val_p.add_argument("--config", required=True)

    fig_p = sub.add_parser("figures-data", help="emit CSV data for a figure")
    fig_p.add_argument("--figure", type=int, required=True, choices=FIGURE_IDS)
    fig_p.add_argument("--out", default="results")

    sub.add_parser("version", help="print the package version")
    return parser


def cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2

    try:
        if args.command == "version":
            print(__version__)
            return 0
        if args.command == "validate-config":
            ExperimentConfig.load(args.config)
            print(f"ok: {args.config}")
            return 0
        if args.command == "figures-data":
            csv_path, json_path = write_figure_data(args.figure, args.out)
            print(csv_path)
            print(json_path)
            return 0
        if args.command == "run":
            config = ExperimentConfig.load(args.config)
            if args.seed is not None:
                config = dataclasses.replace(config, seed=int(args.seed))
            if args.out is not None:
                config = dataclasses.replace(config, out_dir=args.out)
            table = run_experiment(config, threads=args.threads)
            csv_path, json_path = table.write(config.out_dir)
            print(csv_path)
            print(json_path)
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except WZLabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    raise AssertionError("unreachable")


def main():
    raise SystemExit(cli())
