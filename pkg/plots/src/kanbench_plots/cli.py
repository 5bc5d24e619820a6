"""kanbench-plots: render one figure family from benchmark CSVs."""

from __future__ import annotations

import argparse
import sys

from .figures import FAMILIES, FigureSpec, render
from .io import SchemaError

__all__ = ["main"]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="kanbench-plots")
    parser.add_argument("family", choices=FAMILIES)
    parser.add_argument("--runs", required=True, help="input CSV for the family")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--summary", default=None, help="summary.csv for curve labels")
    parser.add_argument("--dpi", type=int, default=120)
    parser.add_argument("--title", default="")
    args = parser.parse_args(argv)

    spec = FigureSpec(
        family=args.family,
        runs_csv=args.runs,
        out_path=args.out,
        summary_csv=args.summary,
        dpi=args.dpi,
        title=args.title,
    )
    try:
        series = render(spec)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{args.out}: {sum(series.values())} points across {len(series)} series")
    return 0


if __name__ == "__main__":
    sys.exit(main())
