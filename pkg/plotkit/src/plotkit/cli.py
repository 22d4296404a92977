"""Batch renderer: figure specs + run CSVs in, PNG files out."""

from __future__ import annotations

import argparse
import sys

from .figspec import FigureSpecError, load_spec, shipped_figures
from .render import MissingInputError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ndl-plot", description="render ndlab run outputs into figures")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one or all figure specs")
    p.add_argument("spec", nargs="?",
                   help="figure name (fig1..fig8) or path to a spec JSON")
    p.add_argument("--all", action="store_true", help="render every shipped spec")
    p.add_argument("--data-root", required=True, help="directory with run outputs")
    p.add_argument("--out-dir", default="figures_out", help="image output directory")
    sub.add_parser("list", help="list shipped figure specs")
    args = parser.parse_args(argv)

    if args.command == "list":
        print("\n".join(shipped_figures()))
        return 0
    names = shipped_figures() if args.all else ([args.spec] if args.spec else [])
    if not names:
        print("error: give a spec name/path or --all", file=sys.stderr)
        return 2
    for name in names:
        try:
            spec = load_spec(name)
            out = render(spec, args.data_root, args.out_dir)
        except (FigureSpecError, MissingInputError, ValueError) as exc:
            print(f"error: {name}: {exc}", file=sys.stderr)
            return 2
        print(f"rendered {name} -> {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
