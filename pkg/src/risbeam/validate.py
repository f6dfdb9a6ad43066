"""Fast self-checks against independent oracles.

Every check recomputes something the package derives analytically
(gradients, manifold maps, waterfilling, solver behavior) by brute force
or finite differences at small panel sizes.  The whole suite is meant as
a release gate: it runs in well under a minute and any mismatch beyond
tolerance is a failure.  Checks call library code through its module
namespace, so a corrupted function is caught even if it was replaced
after import.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from . import objectives, optimizer, scatter
from .channel import build_channels, effective_channel
from .config import OptimizerConfig, RunConfig, ScenarioConfig, SweepCase, SweepConfig


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _fd_directional(f: Callable[[np.ndarray], float], x: np.ndarray, d: np.ndarray, h: float) -> float:
    return (f(x + h * d) - f(x - h * d)) / (2.0 * h)


def _small_setup(n_r: int = 4, seed: int = 0):
    cfg = ScenarioConfig().with_ris_elements(n_r)
    ch = build_channels(cfg, (10.0, 40.0))
    rng = np.random.default_rng(seed)
    theta = scatter.random_scatter("bd-exp", n_r, rng).as_matrix()
    return cfg, ch, theta, rng


def gradient_fd_error(
    value: Callable[[np.ndarray], float],
    grad: np.ndarray,
    at: np.ndarray,
    rng: np.random.Generator,
    n_directions: int = 10,
    h: float = 1e-4,
) -> float:
    """Worst mismatch between Re tr(G^H d) and central differences.

    Errors are measured relative to the directional-derivative scale
    ||G||_F (directions are unit Frobenius norm): directions nearly
    orthogonal to G have derivatives around machine-noise level, so a
    ratio against the derivative itself would be meaningless there.
    """
    scale = max(float(np.linalg.norm(grad)), 1e-12)
    worst = 0.0
    for _ in range(n_directions):
        d = rng.standard_normal(at.shape)
        if np.iscomplexobj(at):
            d = d + 1j * rng.standard_normal(at.shape)
        d = d / np.linalg.norm(d)
        want = _fd_directional(value, at, d, h)
        got = float(np.real(np.trace(grad.conj().T @ d)))
        worst = max(worst, abs(got - want) / scale)
    return worst


def check_txbf_gradient() -> CheckResult:
    """txbf gradient vs central finite differences, ambient directions."""
    cfg, ch, theta, rng = _small_setup()

    def value(a: np.ndarray) -> float:
        h = effective_channel(ch, a)
        return objectives.txbf_evaluate(h, cfg.tx_power, cfg.noise_power).value

    h_eff = effective_channel(ch, theta)
    res = objectives.txbf_evaluate(h_eff, cfg.tx_power, cfg.noise_power)
    grad = objectives.txbf_gradient(ch, h_eff, res, cfg.tx_power, cfg.noise_power)
    worst = gradient_fd_error(value, grad, theta, rng)
    return CheckResult("txbf-gradient-fd", worst < 1e-6, "max rel err %.3g" % worst)


def check_capacity_gradient() -> CheckResult:
    """Fixed-precoder capacity gradient vs central finite differences."""
    cfg, ch, theta, rng = _small_setup(seed=1)
    h_eff = effective_channel(ch, theta)
    res = objectives.capacity_evaluate(h_eff, cfg.tx_power, cfg.noise_power)

    def value(a: np.ndarray) -> float:
        h = effective_channel(ch, a)
        return objectives.capacity_value_fixed_precoder(h, res.precoder, cfg.noise_power)

    grad = objectives.capacity_gradient(ch, h_eff, res.precoder, cfg.noise_power)
    worst = gradient_fd_error(value, grad, theta, rng)
    return CheckResult("capacity-gradient-fd", worst < 1e-6, "max rel err %.3g" % worst)


def check_exp_differential() -> CheckResult:
    """Matrix-exponential directional derivative vs finite differences,
    including a generator with a repeated eigenvalue."""
    rng = np.random.default_rng(2)
    worst = 0.0
    cases = []
    for _ in range(5):
        w = rng.standard_normal((5, 5))
        cases.append(0.5 * (w + w.T))
    cases.append(np.eye(5) * 0.7)  # fivefold repeated eigenvalue
    for w in cases:
        diff = scatter.ExpDifferential(w)
        for _ in range(4):
            d = rng.standard_normal(w.shape)
            d = 0.5 * (d + d.T)
            h = 1e-6
            fd = (scatter.ExpDifferential(w + h * d).theta
                  - scatter.ExpDifferential(w - h * d).theta) / (2.0 * h)
            err = np.linalg.norm(diff.apply(d) - fd) / max(np.linalg.norm(fd), 1e-12)
            worst = max(worst, float(err))
    return CheckResult("exp-differential-fd", worst < 1e-6, "max rel err %.3g" % worst)


def check_projection_manifold() -> CheckResult:
    """Projected matrices are symmetric unitary; projection is idempotent."""
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 17))
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        theta = scatter.project_unitary_symmetric(0.5 * (a + a.T))
        unit = np.linalg.norm(theta.conj().T @ theta - np.eye(n))
        sym = np.linalg.norm(theta - theta.T)
        again = scatter.project_unitary_symmetric(theta)
        idem = np.linalg.norm(again - theta)
        worst = max(worst, (unit + sym + idem) / (1e-10 * n))
    return CheckResult("projection-manifold", worst < 1.0, "worst residual %.3g of budget" % worst)


def check_waterfilling() -> CheckResult:
    """KKT conditions on 1000 random eigenvalue vectors."""
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(1000):
        k = int(rng.integers(1, 9))
        gains = rng.uniform(0.01, 10.0, size=k)
        total = float(rng.uniform(0.1, 10.0))
        noise = float(rng.uniform(0.01, 1.0))
        wf = objectives.waterfill(gains, total, noise)
        if np.any(wf.powers < 0):
            return CheckResult("waterfilling-kkt", False, "negative power")
        worst = max(worst, abs(wf.powers.sum() - total))
        active = wf.powers > 0
        levels = wf.powers[active] + noise / gains[active]
        if levels.size:
            worst = max(worst, float(np.max(np.abs(levels - wf.water_level))))
    return CheckResult("waterfilling-kkt", worst < 1e-9, "max KKT residual %.3g" % worst)


def check_adam_reference() -> CheckResult:
    """Adam on a 1-D quadratic vs a hand-stepped reference sequence."""
    stepper = optimizer.AdamAscent(1, 0.1, 0.9, 0.999, 1e-8)
    x = np.array([0.0])
    xs = []
    for _ in range(5):
        g = 2.0 * (3.0 - x)  # ascent on -(x-3)^2
        x = x + stepper.step(g)
        xs.append(float(x[0]))
    m = v = 0.0
    xref, ref = 0.0, []
    for t in range(1, 6):
        g = 2.0 * (3.0 - xref)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        mh = m / (1.0 - 0.9**t)
        vh = v / (1.0 - 0.999**t)
        xref += 0.1 * mh / (np.sqrt(vh) + 1e-8)
        ref.append(xref)
    err = float(np.max(np.abs(np.array(xs) - np.array(ref))))
    return CheckResult("adam-reference", err < 1e-12, "max deviation %.3g" % err)


def check_phase_alignment() -> CheckResult:
    """Single-element, single-antenna optimum aligns the two paths:
    |h_bu + h_ru theta h_br| must reach |h_bu| + |h_ru||h_br|."""
    cfg = ScenarioConfig(bs_antennas=1, ue_antennas=1, ris_rows=1, ris_cols=1)
    ch = build_channels(cfg, (10.0, 40.0))
    opt = OptimizerConfig(step_size=1e-3, inner_tol=1e-12, outer_tol=1e-12,
                          max_inner=2000, max_outer=5)
    out = optimizer.optimize(cfg, ch, "txbf", "diag", opt=opt,
                             rng=np.random.default_rng(5))
    target = abs(ch.h_bu[0, 0]) + abs(ch.h_ru[0, 0]) * abs(ch.h_br[0, 0])
    phi = out.scatter.phases
    got = abs(ch.h_bu[0, 0] + ch.h_ru[0, 0] * np.exp(1j * phi[0]) * ch.h_br[0, 0])
    err = abs(got - target) / target
    return CheckResult("phase-alignment", err < 1e-6, "rel misalignment %.3g" % err)


def check_staged_dominance() -> CheckResult:
    """Warm-started BD runs must not fall below the same-seed diag run."""
    cfg = ScenarioConfig().with_ris_elements(4)
    ch = build_channels(cfg, (10.0, 40.0))
    worst = 0.0
    for seed in range(10):
        d = optimizer.optimize(cfg, ch, "capacity", "diag",
                               rng=np.random.default_rng(seed))
        b = optimizer.staged_optimize(cfg, ch, "capacity", "bd-exp",
                                      rng=np.random.default_rng(seed))
        worst = max(worst, d.value - b.value)
    return CheckResult("staged-dominance", worst <= 1e-9, "worst shortfall %.3g" % worst)


def check_direct_peak_location() -> CheckResult:
    """On a small no-RIS grid the peak sits at the point nearest the BS."""
    cfg = ScenarioConfig()
    xs = np.linspace(6.0, 54.0, 5)
    ys = np.linspace(6.0, 54.0, 5)
    best, best_xy = -np.inf, None
    for y in ys:
        for x in xs:
            ch = build_channels(cfg, (x, y), with_ris=False)
            v = objectives.capacity_evaluate(
                effective_channel(ch, None), cfg.tx_power, cfg.noise_power).value
            if v > best:
                best, best_xy = v, (float(x), float(y))
    bx, by = cfg.bs_position[:2]
    dists = [(float(np.hypot(x - bx, y - by)), (float(x), float(y))) for y in ys for x in xs]
    nearest = min(dists)[1]
    ok = best_xy == nearest
    return CheckResult("direct-peak-location", ok,
                       "peak at (%g, %g), nearest grid point (%g, %g)" % (*best_xy, *nearest))


def check_sweep_determinism() -> CheckResult:
    """Two identical tiny sweeps serialize to byte-identical CSV."""
    import os
    import tempfile

    from . import sweep as sweep_mod

    run = RunConfig(
        scenario=ScenarioConfig(),
        sweep=SweepConfig(grid_resolution=20.0, cases=(SweepCase("capacity", "none"),), seed=7),
    )
    outs = []
    with tempfile.TemporaryDirectory() as tmp:
        for i in range(2):
            path = os.path.join(tmp, "coverage-%d.csv" % i)
            sweep_mod.run_sweep(run).to_csv(path)
            with open(path, "rb") as f:
                outs.append(f.read())
    return CheckResult("sweep-determinism", outs[0] == outs[1],
                       "%d bytes" % len(outs[0]))


ALL_CHECKS = (
    check_txbf_gradient,
    check_capacity_gradient,
    check_exp_differential,
    check_projection_manifold,
    check_waterfilling,
    check_adam_reference,
    check_phase_alignment,
    check_staged_dominance,
    check_direct_peak_location,
    check_sweep_determinism,
)


def run_checks() -> List[CheckResult]:
    results = []
    for fn in ALL_CHECKS:
        try:
            results.append(fn())
        except Exception as exc:  # a crashed check is a failed check
            name = fn.__name__.replace("check_", "").replace("_", "-")
            results.append(CheckResult(name, False, "raised %s: %s" % (type(exc).__name__, exc)))
    return results
