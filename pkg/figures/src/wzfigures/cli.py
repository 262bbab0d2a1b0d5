"""Command line: figures <figure-id> --in CSV --out PNG.

Exit codes mirror the lab CLI: 0 success, 2 bad usage/schema, 3 data
contract violation.
"""

import argparse
import sys

from .readers import SchemaError
from .recipes import FIGURE_IDS, DataContractError, FigureRecipe, render


def cli(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="figures", description="Render lab CSV tables to figure images"
    )
    parser.add_argument("figure_id", type=int, choices=FIGURE_IDS)
    parser.add_argument("--in", dest="input", required=True, help="input CSV")
    parser.add_argument("--out", dest="output", required=True, help="output PNG")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2

    try:
        recipe = FigureRecipe(args.figure_id, (args.input,), args.output)
        render(recipe)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except DataContractError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    print(args.output)
    return 0


def main():
    raise SystemExit(cli())
