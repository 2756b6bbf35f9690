"""Figure CLI: ``auction-plot --kind <kind> --in <csv> --out <img> [--ci 0.95]``."""

from __future__ import annotations

import argparse
import json
import sys

from .csvdata import EmptyData, SchemaError
from .render import KINDS, FigureSpec, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="auction-plot", description=__doc__)
    parser.add_argument("--kind", choices=KINDS, required=True)
    parser.add_argument("--in", dest="input_csv", required=True)
    parser.add_argument("--out", dest="output_image", required=True)
    parser.add_argument("--ci", type=float, default=0.95)
    args = parser.parse_args(argv)
    try:
        out = render(
            FigureSpec(
                input_csv=args.input_csv,
                kind=args.kind,
                output_image=args.output_image,
                ci_level=args.ci,
            )
        )
    except (SchemaError, EmptyData, OSError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
