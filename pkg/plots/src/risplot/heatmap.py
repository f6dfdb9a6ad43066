"""Coverage-map heatmaps from risbeam coverage CSVs.

The renderer consumes only the documented CSV contract (magic line,
``# key: value`` metadata, ``x,y,config_id,spectral_efficiency`` rows)
so it has no dependency on the simulator package.  One image is written
per configuration id; all images of a run share one color range so
gains stay visually comparable across panels.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib
import numpy as np
from matplotlib.figure import Figure

COVERAGE_MAGIC = "# risbeam coverage v1"
COVERAGE_HEADER = "x,y,config_id,spectral_efficiency"

# Embedded in every image so tests and tooling can re-read the color
# range without pixel inspection.  No timestamps: identical inputs must
# produce identical bytes.
META_SOFTWARE = "risplot"
META_VMIN = "risplot-vmin"
META_VMAX = "risplot-vmax"


@dataclass(frozen=True)
class PlotSpec:
    """What to render and where.

    ``config_ids`` of None means every configuration in the CSV; vmin
    and vmax of None mean the shared min/max over the selected grids.
    """

    coverage_csv: str
    out_dir: str
    config_ids: Optional[Tuple[str, ...]] = None
    vmin: Optional[float] = None
    vmax: Optional[float] = None
    annotate: bool = True
    image_format: str = "png"
    dpi: int = 150


@dataclass
class CoverageTable:
    """Parsed coverage CSV: one (ny, nx) grid per configuration id."""

    xs: np.ndarray
    ys: np.ndarray
    grids: Dict[str, np.ndarray]
    metadata: Dict[str, str] = field(default_factory=dict)

    @property
    def extent(self) -> Tuple[float, float, float, float]:
        """Cell-edge bounding box (xmin, xmax, ymin, ymax) in meters."""
        dx = self.xs[1] - self.xs[0] if self.xs.size > 1 else 1.0
        dy = self.ys[1] - self.ys[0] if self.ys.size > 1 else 1.0
        return (
            float(self.xs[0] - dx / 2.0), float(self.xs[-1] + dx / 2.0),
            float(self.ys[0] - dy / 2.0), float(self.ys[-1] + dy / 2.0),
        )

    def value_range(self, ids: Sequence[str]) -> Tuple[float, float]:
        stack = np.concatenate([self.grids[i].ravel() for i in ids])
        if np.all(np.isnan(stack)):
            raise ValueError("all values are nan; nothing to color")
        return float(np.nanmin(stack)), float(np.nanmax(stack))


def parse_coverage(path: str) -> CoverageTable:
    """Parse and validate a coverage CSV.

    Raises ValueError with the offending line number for malformed rows
    and names the (x, y) hole when a configuration is missing a grid
    point (every configuration must cover the full grid).
    """
    if not os.path.exists(path):
        raise ValueError("coverage CSV %r does not exist" % path)
    metadata: Dict[str, str] = {}
    rows: List[Tuple[float, float, str, float]] = []
    with open(path) as f:
        first = f.readline().rstrip("\n")
        if first != COVERAGE_MAGIC:
            raise ValueError("%s: not a coverage CSV (expected %r first line)"
                             % (path, COVERAGE_MAGIC))
        for lineno, line in enumerate(f, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                metadata[key.strip()] = val.strip()
                continue
            if line == COVERAGE_HEADER:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ValueError("%s:%d: expected 4 comma-separated fields, got %d"
                                 % (path, lineno, len(parts)))
            try:
                x, y, value = float(parts[0]), float(parts[1]), float(parts[3])
            except ValueError:
                raise ValueError("%s:%d: non-numeric x, y or value in %r"
                                 % (path, lineno, line)) from None
            rows.append((x, y, parts[2], value))
    if not rows:
        raise ValueError("%s: no data rows" % path)

    xs = np.array(sorted({r[0] for r in rows}))
    ys = np.array(sorted({r[1] for r in rows}))
    ids = list(dict.fromkeys(r[2] for r in rows))
    xi = {x: i for i, x in enumerate(xs)}
    yi = {y: i for i, y in enumerate(ys)}
    grids = {cid: np.full((ys.size, xs.size), np.nan) for cid in ids}
    seen = {cid: np.zeros((ys.size, xs.size), dtype=bool) for cid in ids}
    for x, y, cid, value in rows:
        grids[cid][yi[y], xi[x]] = value
        seen[cid][yi[y], xi[x]] = True
    for cid in ids:
        if not seen[cid].all():
            iy, ix = np.argwhere(~seen[cid])[0]
            raise ValueError("%s: configuration %r is missing grid point (%g, %g)"
                             % (path, cid, xs[ix], ys[iy]))
    return CoverageTable(xs=xs, ys=ys, grids=grids, metadata=metadata)


def _parse_xy(text: str) -> Tuple[float, float]:
    parts = text.split()
    return float(parts[0]), float(parts[1])


@dataclass(frozen=True)
class RenderedImage:
    path: str
    config_id: str
    extent: Tuple[float, float, float, float]
    annotations: Tuple[str, ...]


@dataclass(frozen=True)
class RenderResult:
    images: Tuple[RenderedImage, ...]
    vmin: float
    vmax: float


def render_heatmap(spec: PlotSpec) -> RenderResult:
    """Render one heatmap image per configuration id.

    Returns the written paths plus the shared color range; the range is
    also embedded in the image metadata under ``risplot-vmin``/``-vmax``.
    """
    table = parse_coverage(spec.coverage_csv)
    ids = spec.config_ids if spec.config_ids is not None else tuple(table.grids)
    unknown = [i for i in ids if i not in table.grids]
    if unknown:
        raise ValueError("unknown configuration id(s) %s; CSV has %s"
                         % (unknown, sorted(table.grids)))
    if not ids:
        raise ValueError("no configuration ids selected")

    auto_lo, auto_hi = table.value_range(ids)
    vmin = spec.vmin if spec.vmin is not None else auto_lo
    vmax = spec.vmax if spec.vmax is not None else auto_hi
    if not (math.isfinite(vmin) and math.isfinite(vmax)) or vmin > vmax:
        raise ValueError("invalid color range [%g, %g]" % (vmin, vmax))

    os.makedirs(spec.out_dir, exist_ok=True)
    images = []
    for cid in ids:
        path = os.path.join(spec.out_dir, "heatmap-%s.%s" % (cid, spec.image_format))
        annotations = _draw(table, cid, path, vmin, vmax, spec)
        images.append(RenderedImage(path=path, config_id=cid,
                                    extent=table.extent, annotations=annotations))
    return RenderResult(images=tuple(images), vmin=vmin, vmax=vmax)


def _draw(table: CoverageTable, cid: str, path: str,
          vmin: float, vmax: float, spec: PlotSpec) -> Tuple[str, ...]:
    fig = Figure(figsize=(6.0, 5.0), dpi=spec.dpi)
    ax = fig.add_subplot(111)
    grid = np.ma.masked_invalid(table.grids[cid])
    cmap = matplotlib.colormaps["viridis"].copy()
    cmap.set_bad("lightgray")  # masked grid points
    im = ax.imshow(grid, origin="lower", extent=table.extent, cmap=cmap,
                   vmin=vmin, vmax=vmax, interpolation="nearest", aspect="equal")
    fig.colorbar(im, ax=ax, label="spectral efficiency [bit/s/Hz]")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(cid)

    drawn = []
    if spec.annotate:
        # markers often sit on the area boundary; keep them unclipped and
        # hang the labels below so they stay off the title
        if "bs_xy" in table.metadata:
            bx, by = _parse_xy(table.metadata["bs_xy"])
            ax.plot([bx], [by], marker="v", color="red", markersize=9,
                    markeredgecolor="white", linestyle="none", clip_on=False)
            ax.annotate("BS", (bx, by), textcoords="offset points",
                        xytext=(6, -14), color="red")
            drawn.append("bs")
        if "ris_xy" in table.metadata:
            rx, ry = _parse_xy(table.metadata["ris_xy"])
            ax.plot([rx], [ry], marker="s", color="red", markersize=8,
                    markeredgecolor="white", linestyle="none", clip_on=False)
            ax.annotate("RIS", (rx, ry), textcoords="offset points",
                        xytext=(6, -14), color="red")
            drawn.append("ris")
        if "obstacle" in table.metadata:
            x1, y1, x2, y2 = (float(v) for v in table.metadata["obstacle"].split())
            ax.plot([x1, x2], [y1, y2], color="black", linewidth=3)
            drawn.append("obstacle")

    meta = _image_metadata(spec.image_format, vmin, vmax)
    fig.savefig(path, metadata=meta, format=spec.image_format)
    return tuple(drawn)


def _image_metadata(fmt: str, vmin: float, vmax: float) -> Dict[str, Optional[str]]:
    meta: Dict[str, Optional[str]] = {
        "Software": META_SOFTWARE,
        META_VMIN: repr(vmin),
        META_VMAX: repr(vmax),
    }
    if fmt == "svg":
        meta["Date"] = None  # svg embeds a timestamp unless suppressed
        # svg metadata keys are restricted; drop the custom ones
        meta.pop(META_VMIN)
        meta.pop(META_VMAX)
    return meta
