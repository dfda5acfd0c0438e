"""The plot command: figures from benchmark CSV traces.

Usage: proxplot --csv trace.csv [more.csv ...] --out figure.png [--raw]
"""

from __future__ import annotations

import argparse
import sys

from .render import PlotSpec, render


def build_parser():
    parser = argparse.ArgumentParser(
        prog="proxplot",
        description="Render convergence figures (gap vs operator calls) from CSV traces.",
    )
    parser.add_argument("--csv", nargs="+", required=True, help="input CSV trace paths")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument(
        "--raw", action="store_true",
        help="plot raw per-iterate gaps instead of the best-so-far envelope",
    )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        result = render(PlotSpec(csv_paths=args.csv, out_path=args.out, raw=args.raw))
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {result.out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
