"""Command-line wrapper: one rendering job per invocation."""

from __future__ import annotations

import argparse
import sys

from .render import STYLES, PlotJob, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tirplot",
        description="Render exported simulator data files into figures.")
    parser.add_argument("--style", required=True, choices=STYLES)
    parser.add_argument("--field-csv", required=True,
                        help="field grid CSV (or the solution CSV for "
                             "--style bernoulli)")
    parser.add_argument("--vortices-json", help="critical-point report to overlay")
    parser.add_argument("--streamlines-json", help="streamline report to overlay")
    parser.add_argument("--output-image", required=True)
    args = parser.parse_args(argv)

    job = PlotJob(field_csv=args.field_csv, output_image=args.output_image,
                  style=args.style, vortices_json=args.vortices_json,
                  streamlines_json=args.streamlines_json)
    try:
        print(render(job))
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
