"""Rendering for risbeam CSV artifacts: coverage heatmaps, trace plots."""

from .heatmap import CoverageTable, PlotSpec, RenderResult, parse_coverage, render_heatmap
from .trace import TraceTable, parse_trace, render_trace

__all__ = [
    "CoverageTable",
    "PlotSpec",
    "RenderResult",
    "TraceTable",
    "parse_coverage",
    "parse_trace",
    "render_heatmap",
    "render_trace",
]

__version__ = "0.1.0"
