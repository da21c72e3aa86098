"""Command line wrapper: one figure per invocation."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FORMATS, X_MODES, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmimo-plot",
        description="Render mean per-user SE trade-off figures from a "
                    "simulator sweep CSV.")
    parser.add_argument("--csv", required=True,
                        help="sweep CSV produced by dmimo-simulate")
    parser.add_argument("--x", required=True, choices=X_MODES,
                        help="x axis: AP count (q) or AP density (density)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--format", choices=FORMATS, default=None,
                        help="image format (default: from the --out suffix)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(csv_path=Path(args.csv), x_mode=args.x,
                      out_path=Path(args.out), fmt=args.format)
    try:
        out = render(spec)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
