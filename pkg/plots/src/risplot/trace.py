"""Convergence plots from risbeam optimizer trace CSVs.

A trace CSV has a fixed header and one row per iterate; see the
simulator's documentation for the column semantics.  Several traces can
be overlaid on one axis, labeled by file stem unless explicit labels
are given.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from matplotlib.figure import Figure

TRACE_HEADER = ("iteration,outer,inner,surrogate,objective,best,"
                "unitarity_residual,symmetry_residual")


@dataclass
class TraceTable:
    """Parsed trace: columns of equal length, one row per iterate."""

    columns: Dict[str, np.ndarray]

    @property
    def n_rows(self) -> int:
        return self.columns["iteration"].size


def parse_trace(path: str) -> TraceTable:
    if not os.path.exists(path):
        raise ValueError("trace CSV %r does not exist" % path)
    with open(path) as f:
        header = f.readline().rstrip("\n")
        if header != TRACE_HEADER:
            raise ValueError("%s: not a trace CSV (unexpected header %r)" % (path, header))
        names = header.split(",")
        data: List[List[float]] = [[] for _ in names]
        for lineno, line in enumerate(f, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(names):
                raise ValueError("%s:%d: expected %d fields, got %d"
                                 % (path, lineno, len(names), len(parts)))
            try:
                for col, part in zip(data, parts):
                    col.append(float(part))
            except ValueError:
                raise ValueError("%s:%d: non-numeric field in %r"
                                 % (path, lineno, line)) from None
    if not data[0]:
        raise ValueError("%s: empty trace (no iterate rows)" % path)
    return TraceTable(columns={n: np.array(c) for n, c in zip(names, data)})


@dataclass(frozen=True)
class TraceSeries:
    label: str
    n_points: int


@dataclass(frozen=True)
class TraceRenderResult:
    path: str
    series: Tuple[TraceSeries, ...]


def render_trace(
    paths: Sequence[str],
    out_path: str,
    labels: Optional[Sequence[str]] = None,
    dpi: int = 150,
) -> TraceRenderResult:
    """Objective vs iteration for one or more traces, with the running
    best overlaid dashed.  Legend labels default to the file stems."""
    if not paths:
        raise ValueError("no trace files given")
    if labels is not None and len(labels) != len(paths):
        raise ValueError("got %d labels for %d traces" % (len(labels), len(paths)))
    tables = [parse_trace(p) for p in paths]
    if labels is None:
        labels = [os.path.splitext(os.path.basename(p))[0] for p in paths]

    fig = Figure(figsize=(6.0, 4.0), dpi=dpi)
    ax = fig.add_subplot(111)
    series = []
    for table, label in zip(tables, labels):
        it = table.columns["iteration"]
        line, = ax.plot(it, table.columns["objective"], marker=".", label=label)
        ax.plot(it, table.columns["best"], linestyle="--", linewidth=1,
                color=line.get_color())
        series.append(TraceSeries(label=label, n_points=int(it.size)))
    ax.set_xlabel("iteration")
    ax.set_ylabel("spectral efficiency [bit/s/Hz]")
    ax.legend()
    ax.grid(True, alpha=0.3)

    out_dir = os.path.dirname(out_path)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    fig.savefig(out_path, metadata={"Software": "risplot"})
    return TraceRenderResult(path=out_path, series=tuple(series))
