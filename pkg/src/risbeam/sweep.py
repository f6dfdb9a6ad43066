"""Coverage sweeps: spectral efficiency over the UE position grid.

A sweep evaluates every case (objective, scatter regime, panel size) at
the center of every grid cell covering the deployment area.  Points are
independent tasks; with ``workers > 1`` they run in a process pool and
are merged back by grid index, and each point draws its own seed from a
hash of (global seed, grid index, case id), so the worker count never
changes the numbers.

Points that sit within ``mask_radius`` of the BS or the RIS are skipped
(the near-field link budget is meaningless there), and a point whose
evaluation raises is marked invalid instead of aborting the sweep; both
appear as ``nan`` in the map and the CSV.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .channel import build_channels, effective_channel
from .config import OptimizerConfig, RunConfig, ScenarioConfig, SweepCase
from .geometry import blocked_by_obstacle
from .objectives import capacity_evaluate, txbf_evaluate
from .optimizer import staged_optimize
from .version import VERSION

COVERAGE_MAGIC = "# risbeam coverage v1"
SUMMARY_MAGIC = "# risbeam summary v1"
FLOAT_FMT = "%.9g"


def grid_axes(area: Tuple[float, float, float, float], resolution: float):
    """Cell-center coordinates of a square grid covering the area.

    Cell i is centered at min + (i + 1/2) * resolution; the cell count
    rounds up, so the grid always covers the full extent even when the
    resolution does not divide it.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    xmin, xmax, ymin, ymax = area

    def centers(lo: float, hi: float) -> np.ndarray:
        n = max(1, int(math.ceil((hi - lo) / resolution - 1e-9)))
        return lo + (np.arange(n) + 0.5) * resolution

    return centers(xmin, xmax), centers(ymin, ymax)


def point_seed(global_seed: int, ix: int, iy: int, case_id: str) -> int:
    """Stable per-point seed; independent of evaluation order."""
    blob = "%d:%d:%d:%s" % (global_seed, ix, iy, case_id)
    return int.from_bytes(hashlib.sha256(blob.encode()).digest()[:8], "little")


def masked_point(cfg: ScenarioConfig, xy, radius: float) -> bool:
    """True within ``radius`` of the BS or RIS ground position."""
    x, y = xy
    for px, py, _ in (cfg.bs_position, cfg.ris_position):
        if math.hypot(x - px, y - py) <= radius:
            return True
    return False


def behind_obstacle_mask(cfg: ScenarioConfig, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Boolean (ny, nx) grid of points whose BS path crosses the obstacle."""
    mask = np.zeros((ys.size, xs.size), dtype=bool)
    for iy, y in enumerate(ys):
        for ix, x in enumerate(xs):
            mask[iy, ix] = blocked_by_obstacle(cfg, (x, y))
    return mask


def evaluate_point(
    cfg: ScenarioConfig,
    opt: OptimizerConfig,
    case: SweepCase,
    xy: Tuple[float, float],
    seed: int,
) -> float:
    """Spectral efficiency of one case at one UE position."""
    if case.regime == "none":
        ch = build_channels(cfg, xy, with_ris=False)
        h = effective_channel(ch, None)
        if case.objective == "txbf":
            return txbf_evaluate(h, cfg.tx_power, cfg.noise_power).value
        return capacity_evaluate(h, cfg.tx_power, cfg.noise_power).value
    scen = cfg if case.n_r is None else cfg.with_ris_elements(case.n_r)
    ch = build_channels(scen, xy)
    out = staged_optimize(
        scen, ch, case.objective, case.regime,
        opt=opt, rng=np.random.default_rng(seed), record_residuals=False,
    )
    return out.value


def _eval_task(args):
    cfg, opt, case, ix, iy, x, y, seed = args
    try:
        return case.case_id, ix, iy, evaluate_point(cfg, opt, case, (x, y), seed), ""
    except Exception as exc:  # per-point failure: mark invalid, keep sweeping
        return case.case_id, ix, iy, float("nan"), "%s: %s" % (type(exc).__name__, exc)


@dataclass
class CoverageMap:
    """Per-case spectral-efficiency grids plus provenance metadata.

    ``values[c, iy, ix]`` is the value of case ``case_ids[c]`` at
    (xs[ix], ys[iy]); masked and failed points are nan.  ``notes`` maps
    (case_id, ix, iy) to a reason string for every nan.
    """

    xs: np.ndarray
    ys: np.ndarray
    case_ids: Tuple[str, ...]
    values: np.ndarray
    metadata: Dict[str, str]
    notes: Dict[Tuple[str, int, int], str] = field(default_factory=dict)

    def case_index(self, case_id: str) -> int:
        try:
            return self.case_ids.index(case_id)
        except ValueError:
            raise KeyError("unknown case id %r (have %s)" % (case_id, list(self.case_ids)))

    def case_values(self, case_id: str) -> np.ndarray:
        return self.values[self.case_index(case_id)]

    @property
    def n_invalid(self) -> int:
        return int(np.isnan(self.values).sum())

    def peak(self, case_id: str, region: Optional[np.ndarray] = None):
        """Largest valid value of the case, optionally within a region mask.

        Returns (value, (x, y)).  Raises ValueError when the region holds
        no valid point.
        """
        grid = self.case_values(case_id).copy()
        if region is not None:
            grid[~region] = np.nan
        if np.all(np.isnan(grid)):
            raise ValueError("no valid points for %r in the requested region" % case_id)
        iy, ix = np.unravel_index(np.nanargmax(grid), grid.shape)
        return float(grid[iy, ix]), (float(self.xs[ix]), float(self.ys[iy]))

    def to_csv(self, path: str) -> None:
        """Write the documented CSV: '#' metadata lines, then one row per
        (point, case).  Output is byte-deterministic for identical inputs."""
        with open(path, "w") as f:
            f.write(COVERAGE_MAGIC + "\n")
            for key, val in self.metadata.items():
                f.write("# %s: %s\n" % (key, val))
            f.write("x,y,config_id,spectral_efficiency\n")
            for c, case_id in enumerate(self.case_ids):
                for iy in range(self.ys.size):
                    for ix in range(self.xs.size):
                        f.write("%s,%s,%s,%s\n" % (
                            FLOAT_FMT % self.xs[ix],
                            FLOAT_FMT % self.ys[iy],
                            case_id,
                            FLOAT_FMT % self.values[c, iy, ix],
                        ))

    @classmethod
    def from_csv(cls, path: str) -> "CoverageMap":
        metadata: Dict[str, str] = {}
        rows: List[Tuple[float, float, str, float]] = []
        with open(path) as f:
            first = f.readline().rstrip("\n")
            if first != COVERAGE_MAGIC:
                raise ValueError("%s: not a coverage CSV (bad magic line)" % path)
            for lineno, line in enumerate(f, start=2):
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, val = line[1:].partition(":")
                    metadata[key.strip()] = val.strip()
                    continue
                if line.startswith("x,y,"):
                    continue
                parts = line.split(",")
                if len(parts) != 4:
                    raise ValueError("%s:%d: expected 4 fields, got %d" % (path, lineno, len(parts)))
                rows.append((float(parts[0]), float(parts[1]), parts[2], float(parts[3])))
        if not rows:
            raise ValueError("%s: no data rows" % path)
        xs = np.array(sorted({r[0] for r in rows}))
        ys = np.array(sorted({r[1] for r in rows}))
        case_ids = tuple(dict.fromkeys(r[2] for r in rows))
        values = np.full((len(case_ids), ys.size, xs.size), np.nan)
        xi = {x: i for i, x in enumerate(xs)}
        yi = {y: i for i, y in enumerate(ys)}
        ci = {c: i for i, c in enumerate(case_ids)}
        for x, y, cid, v in rows:
            values[ci[cid], yi[y], xi[x]] = v
        return cls(xs=xs, ys=ys, case_ids=case_ids, values=values, metadata=metadata)


def run_config_hash(run: RunConfig) -> str:
    """Digest of everything that determines sweep numbers (not workers)."""
    payload = {
        "scenario": run.scenario.canonical_dict(),
        "optimizer": asdict(run.optimizer),
        "grid_resolution": run.sweep.grid_resolution,
        "cases": [c.case_id for c in run.sweep.cases],
        "seed": run.sweep.seed,
        "mask_radius": run.sweep.mask_radius,
    }
    blob = json.dumps(payload, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _coverage_metadata(run: RunConfig) -> Dict[str, str]:
    cfg = run.scenario
    meta = {
        "version": VERSION,
        "config_hash": run_config_hash(run),
        "global_seed": str(run.sweep.seed),
        "grid_resolution": FLOAT_FMT % run.sweep.grid_resolution,
        "area": " ".join(FLOAT_FMT % v for v in cfg.area),
        "bs_xy": " ".join(FLOAT_FMT % v for v in cfg.bs_position[:2]),
        "ris_xy": " ".join(FLOAT_FMT % v for v in cfg.ris_position[:2]),
    }
    if cfg.obstacle is not None:
        meta["obstacle"] = " ".join(
            FLOAT_FMT % v for v in (*cfg.obstacle.p1, *cfg.obstacle.p2)
        )
    return meta


def run_sweep(run: RunConfig) -> CoverageMap:
    """Evaluate every sweep case on the full grid.  Deterministic per seed."""
    cfg, opt, sw = run.scenario, run.optimizer, run.sweep
    xs, ys = grid_axes(cfg.area, sw.grid_resolution)
    values = np.full((len(sw.cases), ys.size, xs.size), np.nan)
    notes: Dict[Tuple[str, int, int], str] = {}
    case_index = {c.case_id: i for i, c in enumerate(sw.cases)}

    tasks = []
    for case in sw.cases:
        for iy, y in enumerate(ys):
            for ix, x in enumerate(xs):
                if masked_point(cfg, (x, y), sw.mask_radius):
                    notes[(case.case_id, ix, iy)] = "masked: within %g m of BS or RIS" % sw.mask_radius
                    continue
                seed = point_seed(sw.seed, ix, iy, case.case_id)
                tasks.append((cfg, opt, case, ix, iy, float(x), float(y), seed))

    if sw.workers > 1:
        with ProcessPoolExecutor(max_workers=sw.workers) as pool:
            results = list(pool.map(_eval_task, tasks, chunksize=4))
    else:
        results = [_eval_task(t) for t in tasks]

    for case_id, ix, iy, value, note in results:
        values[case_index[case_id], iy, ix] = value
        if note:
            notes[(case_id, ix, iy)] = note

    return CoverageMap(
        xs=xs, ys=ys,
        case_ids=tuple(c.case_id for c in sw.cases),
        values=values,
        metadata=_coverage_metadata(run),
        notes=notes,
    )


@dataclass(frozen=True)
class SummaryRow:
    """Peak spectral efficiency of one case and its gain over a reference."""

    case_id: str
    peak: float
    peak_xy: Tuple[float, float]
    gain_pct: float


def summarize(
    cmap: CoverageMap,
    reference_id: str,
    region: Optional[np.ndarray] = None,
) -> List[SummaryRow]:
    """Peak per case (optionally within a region) and percent gain over
    the reference case's peak, mirroring the coverage-table layout."""
    if region is not None and not np.any(region):
        raise ValueError("region mask selects no points")
    ref_peak, _ = cmap.peak(reference_id, region)
    rows = []
    for case_id in cmap.case_ids:
        peak, xy = cmap.peak(case_id, region)
        gain = (peak - ref_peak) / ref_peak * 100.0
        rows.append(SummaryRow(case_id=case_id, peak=peak, peak_xy=xy, gain_pct=gain))
    return rows


def write_summary_csv(
    path: str,
    rows: Sequence[SummaryRow],
    metadata: Dict[str, str],
    reference_id: str,
) -> None:
    with open(path, "w") as f:
        f.write(SUMMARY_MAGIC + "\n")
        for key, val in metadata.items():
            f.write("# %s: %s\n" % (key, val))
        f.write("# reference: %s\n" % reference_id)
        f.write("config_id,peak_spectral_efficiency,peak_x,peak_y,gain_pct\n")
        for r in rows:
            f.write("%s,%s,%s,%s,%s\n" % (
                r.case_id, FLOAT_FMT % r.peak,
                FLOAT_FMT % r.peak_xy[0], FLOAT_FMT % r.peak_xy[1],
                FLOAT_FMT % r.gain_pct,
            ))
