"""Command-line renderer for coverage heatmaps and convergence traces.

Exit status: 0 images written; 1 bad input (missing file, malformed
CSV, unknown configuration id); 2 usage error (from argparse).
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from .heatmap import PlotSpec, render_heatmap
from .trace import render_trace

EXIT_OK = 0
EXIT_ERROR = 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risplot",
        description="Render risbeam coverage CSVs as heatmaps and traces as line plots",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    hm = sub.add_parser("heatmap", help="one heatmap image per configuration id")
    hm.add_argument("coverage_csv", help="coverage CSV written by the simulator")
    hm.add_argument("--out", metavar="DIR", default=".", help="output directory")
    hm.add_argument("--config", metavar="ID", action="append",
                    help="configuration id to render (repeatable; default all)")
    hm.add_argument("--vmin", type=float, help="color scale lower bound, bit/s/Hz")
    hm.add_argument("--vmax", type=float, help="color scale upper bound, bit/s/Hz")
    hm.add_argument("--no-annotations", action="store_true",
                    help="omit BS/RIS markers and the obstacle segment")
    hm.add_argument("--format", choices=("png", "svg"), default="png")
    hm.add_argument("--dpi", type=int, default=150)

    tr = sub.add_parser("trace", help="objective vs iteration line plot")
    tr.add_argument("trace_csv", nargs="+", help="trace CSV(s) to overlay")
    tr.add_argument("--out", metavar="FILE", default="trace.png", help="output image path")
    tr.add_argument("--label", metavar="TEXT", action="append",
                    help="legend label per trace (default: file stem)")
    tr.add_argument("--dpi", type=int, default=150)
    return parser


def cmd_heatmap(args) -> int:
    spec = PlotSpec(
        coverage_csv=args.coverage_csv,
        out_dir=args.out,
        config_ids=tuple(args.config) if args.config else None,
        vmin=args.vmin,
        vmax=args.vmax,
        annotate=not args.no_annotations,
        image_format=args.format,
        dpi=args.dpi,
    )
    result = render_heatmap(spec)
    for image in result.images:
        print("wrote %s" % image.path)
    print("color range [%g, %g] bit/s/Hz" % (result.vmin, result.vmax))
    return EXIT_OK


def cmd_trace(args) -> int:
    result = render_trace(args.trace_csv, args.out, labels=args.label, dpi=args.dpi)
    print("wrote %s (%s)" % (
        result.path, ", ".join("%s: %d pts" % (s.label, s.n_points) for s in result.series)))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"heatmap": cmd_heatmap, "trace": cmd_trace}
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
