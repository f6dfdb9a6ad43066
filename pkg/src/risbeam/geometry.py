"""Array geometry: antenna/element positions, panel frames, blockage tests.

Tilt convention used throughout: a tilt is (azimuth, elevation) where
azimuth is measured counter-clockwise from the +y axis in the horizontal
plane and elevation is measured from the +z axis (zenith).  The boresight
(outward normal) of a tilted panel is therefore

    n = (-sin(az) * sin(el), cos(az) * sin(el), cos(el))

so the reference BS tilt (pi, pi/2) faces -y (into the area from the north
edge) and the reference RIS tilt (-pi/2, pi/2) faces +x (off the west wall).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .config import ScenarioConfig


class GeometryError(ValueError):
    """Raised for degenerate or out-of-bounds geometry."""


def boresight(tilt: Tuple[float, float]) -> np.ndarray:
    az, el = tilt
    return np.array(
        [-math.sin(az) * math.sin(el), math.cos(az) * math.sin(el), math.cos(el)]
    )


def panel_frame(tilt: Tuple[float, float]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormal (normal, horizontal, vertical) frame of a tilted panel.

    The horizontal in-plane axis is z x n (well-defined only for panels
    whose normal is not vertical); the vertical axis completes the frame.
    """
    n = boresight(tilt)
    h = np.cross([0.0, 0.0, 1.0], n)
    norm = np.linalg.norm(h)
    if norm < 1e-12:
        raise GeometryError("panel normal is vertical; horizontal in-plane axis undefined")
    h = h / norm
    v = np.cross(n, h)
    return n, h, v


def bs_antenna_positions(cfg: ScenarioConfig) -> np.ndarray:
    """(M, 3) BS ULA positions: horizontal, orthogonal to the BS boresight."""
    az = cfg.bs_tilt[0]
    axis = np.array([math.cos(az), math.sin(az), 0.0])
    m = cfg.bs_antennas
    offsets = (np.arange(m) - (m - 1) / 2.0) * cfg.spacing
    return np.asarray(cfg.bs_position) + offsets[:, None] * axis


def ue_antenna_positions(cfg: ScenarioConfig, ue_xy: Tuple[float, float]) -> np.ndarray:
    """(K, 3) UE ULA positions along the x axis at the configured height."""
    x, y = ue_xy
    xmin, xmax, ymin, ymax = cfg.area
    if not (xmin <= x <= xmax and ymin <= y <= ymax):
        raise GeometryError("UE position (%g, %g) lies outside the area" % (x, y))
    k = cfg.ue_antennas
    offsets = (np.arange(k) - (k - 1) / 2.0) * cfg.spacing
    pos = np.zeros((k, 3))
    pos[:, 0] = x + offsets
    pos[:, 1] = y
    pos[:, 2] = cfg.ue_height
    return pos


def ris_element_positions(cfg: ScenarioConfig) -> np.ndarray:
    """(N, 3) RIS element centers, row-major over (rows, cols).

    Element i = r * cols + c sits at column c along the panel's horizontal
    axis (pitch a) and row r along its vertical axis (pitch b), centered
    on ris_position.
    """
    _, h, v = panel_frame(cfg.ris_tilt)
    a, b = cfg.element_size
    rows, cols = cfg.ris_rows, cfg.ris_cols
    ch = (np.arange(cols) - (cols - 1) / 2.0) * a
    rv = (np.arange(rows) - (rows - 1) / 2.0) * b
    grid = rv[:, None, None] * v + ch[None, :, None] * h
    return (np.asarray(cfg.ris_position) + grid).reshape(rows * cols, 3)


def pairwise_distances(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """(len(p), len(q)) Euclidean distances between two position sets."""
    d = np.linalg.norm(p[:, None, :] - q[None, :, :], axis=-1)
    if np.any(d <= 0.0):
        raise GeometryError("coincident points: zero propagation distance")
    return d


def segments_cross(p1, p2, q1, q2) -> bool:
    """True when 2-D segments p1-p2 and q1-q2 intersect (touching counts)."""
    p1, p2, q1, q2 = (np.asarray(v, dtype=float) for v in (p1, p2, q1, q2))

    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(v) < 1e-12:
            return 0
        return 1 if v > 0 else -1

    def on_segment(a, b, c):
        return (
            min(a[0], b[0]) - 1e-12 <= c[0] <= max(a[0], b[0]) + 1e-12
            and min(a[1], b[1]) - 1e-12 <= c[1] <= max(a[1], b[1]) + 1e-12
        )

    o1 = orient(p1, p2, q1)
    o2 = orient(p1, p2, q2)
    o3 = orient(q1, q2, p1)
    o4 = orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_segment(p1, p2, q1):
        return True
    if o2 == 0 and on_segment(p1, p2, q2):
        return True
    if o3 == 0 and on_segment(q1, q2, p1):
        return True
    if o4 == 0 and on_segment(q1, q2, p2):
        return True
    return False


def blocked_by_obstacle(cfg: ScenarioConfig, ue_xy: Tuple[float, float]) -> bool:
    """True when the horizontal BS-UE segment crosses the configured obstacle."""
    if cfg.obstacle is None:
        return False
    bs_xy = cfg.bs_position[:2]
    return segments_cross(bs_xy, ue_xy, cfg.obstacle.p1, cfg.obstacle.p2)


def fraunhofer_distance(cfg: ScenarioConfig) -> float:
    """Far-field onset 2 D^2 / lambda, D being the larger panel side."""
    a, b = cfg.element_size
    d = max(cfg.ris_cols * a, cfg.ris_rows * b)
    return 2.0 * d * d / cfg.wavelength


@dataclass(frozen=True)
class LinkGeometry:
    """All positions needed to build the channels for one UE drop."""

    bs: np.ndarray   # (M, 3)
    ue: np.ndarray   # (K, 3)
    ris: np.ndarray  # (N, 3)

    @classmethod
    def for_point(cls, cfg: ScenarioConfig, ue_xy, with_ris: bool = True) -> "LinkGeometry":
        ris = ris_element_positions(cfg) if with_ris else np.zeros((0, 3))
        return cls(
            bs=bs_antenna_positions(cfg),
            ue=ue_antenna_positions(cfg, ue_xy),
            ris=ris,
        )
