"""Command line entry point: nmipe-plots render <spec.json>.

The spec file is a JSON object:

    {
      "input_csv": "results.csv",          // or a list of CSV paths
      "figure_kind": "decay",              // decay | residual | heatmap
      "output_image": "figure.png"         // .png or .svg
    }
"""

from __future__ import annotations

import argparse
import json
import sys

from .reader import MalformedCsvError
from .render import load_spec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nmipe-plots", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_render = sub.add_parser("render", help="render a figure from a plot spec")
    p_render.add_argument("spec", help="path to plot-spec JSON")
    args = parser.parse_args(argv)

    try:
        spec = load_spec(args.spec)
    except (OSError, json.JSONDecodeError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        out = render(spec)
    except (MalformedCsvError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
