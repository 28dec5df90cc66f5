"""Command-line front end: render one figure from trajectory CSV exports.

Exit codes: 0 on success, 2 on usage errors or unusable input (missing
file, missing columns, malformed CSV).
"""

from __future__ import annotations

import argparse
import sys

from plot_reports.figures import (
    ColumnError,
    render_decay_figure,
    render_gain_figure,
)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot_reports",
        description="Render decay or performance-index figures from "
                    "trajectory CSVs")
    parser.add_argument("csv", nargs="+",
                        help="trajectory CSV file(s); the decay figure "
                             "overlays several, the gain figure takes one")
    parser.add_argument("--kind", required=True, choices=("decay", "gain"),
                        help="decay: |w|_H1 + |u| vs t; gain: J(t) with a "
                             "zero reference line")
    parser.add_argument("-o", "--output", required=True,
                        help="output image path (PNG)")
    parser.add_argument("--label", action="append",
                        help="legend label, one per CSV (decay only)")
    parser.add_argument("--log-y", action="store_true",
                        help="logarithmic vertical axis (decay only)")
    args = parser.parse_args(argv)

    try:
        if args.kind == "gain":
            if len(args.csv) != 1:
                parser.error("--kind gain takes exactly one CSV")
            if args.label or args.log_y:
                parser.error("--label/--log-y apply to --kind decay only")
            out = render_gain_figure(args.csv[0], args.output)
        else:
            out = render_decay_figure(args.csv, args.output,
                                      labels=args.label, logy=args.log_y)
    except (ColumnError, OSError, ValueError) as ex:
        print(f"plot_reports: {ex}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
