"""Alternating gradient ascent over the scattering-matrix feasible sets.

The outer loop refreshes whatever the gradient treats as fixed (the
waterfilled precoder for the capacity objective); the inner loop runs
first-order ascent steps in the regime's native coordinates:

* ``diag``: the N phases, using the diagonal-only gradient fast path.
* ``bd-exp``: the free entries of the symmetric generator; every step
  stays exactly feasible.
* ``bd-proj``: the dense matrix entries, re-projected onto the
  unitary-symmetric set after every step.  The ambient gradient is first
  projected onto the unitary tangent space at the current point, so the
  optimizer's moment estimates track feasible directions instead of the
  (discarded) normal component; the retraction restores symmetry.

The best scattering matrix seen so far, ranked by the true refreshed
objective, is tracked at every iterate and returned even when a run is
aborted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import objectives
from . import scatter as sc
from .channel import ChannelSet, effective_channel
from .config import OptimizerConfig, ScenarioConfig


class MomentumAscent:
    """Heavy-ball ascent: v <- beta v + g, step = alpha v."""

    def __init__(self, size: int, step_size: float, beta: float):
        self._alpha = step_size
        self._beta = beta
        self._v = np.zeros(size)

    def step(self, grad: np.ndarray) -> np.ndarray:
        self._v = self._beta * self._v + grad
        return self._alpha * self._v


class RMSPropAscent:
    """Per-coordinate scaling by a decayed root-mean-square of gradients."""

    def __init__(self, size: int, step_size: float, decay: float, epsilon: float):
        self._alpha = step_size
        self._rho = decay
        self._eps = epsilon
        self._s = np.zeros(size)

    def step(self, grad: np.ndarray) -> np.ndarray:
        self._s = self._rho * self._s + (1.0 - self._rho) * grad**2
        return self._alpha * grad / (np.sqrt(self._s) + self._eps)


class AdamAscent:
    """Bias-corrected first/second moment ascent."""

    def __init__(
        self, size: int, step_size: float, beta1: float, beta2: float, epsilon: float
    ):
        self._alpha = step_size
        self._b1 = beta1
        self._b2 = beta2
        self._eps = epsilon
        self._m = np.zeros(size)
        self._v = np.zeros(size)
        self._t = 0

    def step(self, grad: np.ndarray) -> np.ndarray:
        self._t += 1
        self._m = self._b1 * self._m + (1.0 - self._b1) * grad
        self._v = self._b2 * self._v + (1.0 - self._b2) * grad**2
        m_hat = self._m / (1.0 - self._b1**self._t)
        v_hat = self._v / (1.0 - self._b2**self._t)
        return self._alpha * m_hat / (np.sqrt(v_hat) + self._eps)


def _make_stepper(method: str, size: int, opt: OptimizerConfig):
    if method == "momentum":
        return MomentumAscent(size, opt.step_size, opt.momentum_beta)
    if method == "rmsprop":
        return RMSPropAscent(size, opt.step_size, opt.rms_decay, opt.epsilon)
    if method == "adam":
        return AdamAscent(size, opt.step_size, opt.adam_beta1, opt.adam_beta2, opt.epsilon)
    raise ValueError(f"unknown optimizer method {method!r}")


def resolve_method(method: str, regime: str) -> str:
    if method != "auto":
        return method
    return "rmsprop" if regime == "diag" else "adam"


class _DiagParams:
    uses_diag_gradient = True

    def __init__(self, phases: np.ndarray):
        self._phi = np.asarray(phases, dtype=float).copy()

    @property
    def size(self) -> int:
        return self._phi.size

    def scatter(self) -> sc.ScatterMatrix:
        return sc.ScatterMatrix.from_phases(self._phi)

    def pullback(self, grad_diag: np.ndarray) -> np.ndarray:
        return sc.diagonal_phase_gradient(grad_diag, self._phi)

    def update(self, delta: np.ndarray) -> None:
        self._phi = self._phi + delta


class _ExpParams:
    uses_diag_gradient = False

    def __init__(self, w: np.ndarray):
        w = np.asarray(w, dtype=float)
        self._n = w.shape[0]
        self._x, self._z = sc.split_symmetric(w)
        self._rows, self._cols = sc.offdiag_indices(self._n)
        self._diff = sc.ExpDifferential(w)
        self._theta = self._diff.theta

    @property
    def size(self) -> int:
        return self._x.size + self._z.size

    def scatter(self) -> sc.ScatterMatrix:
        return sc.ScatterMatrix.from_matrix(self._theta)

    def pullback(self, grad_theta: np.ndarray) -> np.ndarray:
        g = self._diff.pullback(grad_theta)
        gx = np.diagonal(g).copy()
        gz = g[self._rows, self._cols] + g[self._cols, self._rows]
        return np.concatenate([gx, gz])

    def update(self, delta: np.ndarray) -> None:
        self._x = self._x + delta[: self._n]
        self._z = self._z + delta[self._n :]
        self._diff = sc.ExpDifferential(sc.build_symmetric(self._n, self._x, self._z))
        self._theta = self._diff.theta


class _ProjParams:
    uses_diag_gradient = False

    def __init__(self, theta: np.ndarray):
        self._theta = np.asarray(theta, dtype=complex).copy()
        self._n = self._theta.shape[0]

    @property
    def size(self) -> int:
        return 2 * self._n * self._n

    def scatter(self) -> sc.ScatterMatrix:
        return sc.ScatterMatrix.from_matrix(self._theta)

    def pullback(self, grad_theta: np.ndarray) -> np.ndarray:
        # Unitary-tangent projection Theta * skew(Theta^H G).  Directional
        # derivatives along feasible directions are unchanged (the removed
        # part is normal to the manifold).
        x = self._theta.conj().T @ grad_theta
        tangent = self._theta @ (0.5 * (x - x.conj().T))
        return np.concatenate([tangent.real.ravel(), tangent.imag.ravel()])

    def update(self, delta: np.ndarray) -> None:
        n = self._n
        d = delta[: n * n].reshape(n, n) + 1j * delta[n * n :].reshape(n, n)
        self._theta = sc.project_unitary_symmetric(self._theta + d)


def _make_adapter(regime: str, init):
    if regime == "diag":
        return _DiagParams(init)
    if regime == "bd-exp":
        return _ExpParams(init)
    if regime == "bd-proj":
        return _ProjParams(init)
    raise ValueError(f"regime {regime!r} has nothing to optimize")


@dataclass
class OptimizationTrace:
    """Per-iterate history: objectives, running best, constraint residuals."""

    rows: List[Tuple] = field(default_factory=list)

    columns = (
        "iteration", "outer", "inner",
        "surrogate", "objective", "best",
        "unitarity_residual", "symmetry_residual",
    )

    def append(
        self, iteration: int, outer: int, inner: int,
        surrogate: float, objective: float, best: float,
        unitarity: float, symmetry: float,
    ) -> None:
        self.rows.append(
            (iteration, outer, inner, surrogate, objective, best, unitarity, symmetry)
        )

    def objective_values(self) -> np.ndarray:
        return np.array([r[4] for r in self.rows])

    def best_values(self) -> np.ndarray:
        return np.array([r[5] for r in self.rows])

    def final_residuals(self) -> Tuple[float, float]:
        return self.rows[-1][6], self.rows[-1][7]

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="ascii") as f:
            f.write(",".join(self.columns) + "\n")
            for it, outer, inner, sur, obj, best, uni, sym in self.rows:
                f.write(
                    f"{it},{outer},{inner},{sur:.9g},{obj:.9g},{best:.9g},"
                    f"{uni:.3g},{sym:.3g}\n"
                )


@dataclass(frozen=True)
class OptimizeOutcome:
    scatter: sc.ScatterMatrix
    value: float  # best true objective, bit/s/Hz
    objective: str
    regime: str
    method: str
    trace: OptimizationTrace
    outer_rounds: int
    inner_iterations: int
    degenerate_gap_count: int
    stop_reason: str

    @property
    def converged(self) -> bool:
        return self.stop_reason == "outer_converged"


def optimize(
    cfg: ScenarioConfig,
    ch: ChannelSet,
    objective: str,
    regime: str,
    opt: Optional[OptimizerConfig] = None,
    rng: Optional[np.random.Generator] = None,
    init=None,
    record_residuals: bool = True,
) -> OptimizeOutcome:
    """Maximize the objective over the regime's feasible set.

    ``init`` takes the regime's native coordinates (phases, symmetric
    generator, or dense feasible matrix); when omitted a random feasible
    start is drawn from ``rng``.  ``record_residuals`` controls whether
    constraint residuals are evaluated per iterate (an extra O(N^3) for
    the dense regimes; sweeps turn it off).
    """
    if objective not in ("txbf", "capacity"):
        raise ValueError(f"unknown objective {objective!r}")
    opt = opt if opt is not None else OptimizerConfig()
    n = ch.n_ris_elements
    if n == 0:
        raise ValueError("channel set was built without scattering elements")
    if init is None:
        rng = rng if rng is not None else np.random.default_rng()
        init = sc.random_init(regime, n, rng)
    adapter = _make_adapter(regime, init)
    method = resolve_method(opt.method, regime)
    p_tx, noise = cfg.tx_power, cfg.noise_power

    def residuals(s: sc.ScatterMatrix) -> Tuple[float, float]:
        if not record_residuals:
            return float("nan"), float("nan")
        return s.unitarity_residual(), s.symmetry_residual()

    trace = OptimizationTrace()
    cur = adapter.scatter()
    h = effective_channel(ch, cur)
    degenerate = 0
    if objective == "txbf":
        res = objectives.txbf_evaluate(h, p_tx, noise)
        degenerate += int(res.degenerate_gap)
        true_value = res.value
    else:
        res = objectives.capacity_evaluate(h, p_tx, noise)
        true_value = res.value
    best_value = true_value
    best_scatter = cur
    iteration = 0
    total_inner = 0
    outer_rounds = 0
    stop_reason = "max_outer"
    trace.append(0, 0, 0, true_value, true_value, best_value, *residuals(cur))

    aborted = False
    for outer in range(1, opt.max_outer + 1):
        outer_rounds = outer
        stepper = _make_stepper(method, adapter.size, opt)
        entering_best = best_value
        if objective == "capacity":
            res = objectives.capacity_evaluate(h, p_tx, noise)
            precoder = res.precoder
            j_prev = res.value
        else:
            j_prev = res.value

        for inner in range(1, opt.max_inner + 1):
            if objective == "txbf":
                grad = objectives.txbf_gradient(
                    ch, h, res, p_tx, noise, diag_only=adapter.uses_diag_gradient
                )
            else:
                grad = objectives.capacity_gradient(
                    ch, h, precoder, noise, diag_only=adapter.uses_diag_gradient
                )
            g_params = adapter.pullback(grad)
            if not np.all(np.isfinite(g_params)):
                stop_reason = "non_finite_gradient"
                aborted = True
                break
            try:
                adapter.update(stepper.step(g_params))
            except np.linalg.LinAlgError:
                stop_reason = "projection_failed"
                aborted = True
                break
            cur = adapter.scatter()
            h = effective_channel(ch, cur)
            iteration += 1
            total_inner += 1

            if objective == "txbf":
                res = objectives.txbf_evaluate(h, p_tx, noise)
                degenerate += int(res.degenerate_gap)
                j_t = res.value
                true_value = res.value
            else:
                j_t = objectives.capacity_value_fixed_precoder(h, precoder, noise)
                true_value = objectives.capacity_evaluate(h, p_tx, noise).value
            if not (np.isfinite(j_t) and np.isfinite(true_value)):
                stop_reason = "non_finite_objective"
                aborted = True
                break
            if true_value > best_value:
                best_value = true_value
                best_scatter = cur
            trace.append(
                iteration, outer, inner, j_t, true_value, best_value, *residuals(cur)
            )
            if abs(j_t - j_prev) <= opt.inner_tol * max(abs(j_t), 1e-300):
                break
            j_prev = j_t

        if aborted:
            break
        if best_value - entering_best <= opt.outer_tol * max(abs(best_value), 1e-300):
            stop_reason = "outer_converged"
            break

    return OptimizeOutcome(
        scatter=best_scatter,
        value=best_value,
        objective=objective,
        regime=regime,
        method=method,
        trace=trace,
        outer_rounds=outer_rounds,
        inner_iterations=total_inner,
        degenerate_gap_count=degenerate,
        stop_reason=stop_reason,
    )


def multistart(
    cfg: ScenarioConfig,
    ch: ChannelSet,
    objective: str,
    regime: str,
    opt: Optional[OptimizerConfig] = None,
    rng: Optional[np.random.Generator] = None,
    n_starts: int = 1,
) -> Tuple[OptimizeOutcome, np.ndarray]:
    """Best of ``n_starts`` independent runs; also returns every run's value."""
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    rng = rng if rng is not None else np.random.default_rng()
    best = None
    values = []
    for _ in range(n_starts):
        out = optimize(cfg, ch, objective, regime, opt=opt, rng=rng)
        values.append(out.value)
        if best is None or out.value > best.value:
            best = out
    return best, np.array(values)


def staged_optimize(
    cfg: ScenarioConfig,
    ch: ChannelSet,
    objective: str,
    regime: str,
    opt: Optional[OptimizerConfig] = None,
    rng: Optional[np.random.Generator] = None,
    n_random: int = 1,
    record_residuals: bool = True,
) -> OptimizeOutcome:
    """Pipeline solver: plain ascent for ``diag``, warm-started for BD.

    The BD feasible set contains every diagonal phase matrix, so a BD run
    started from a converged diagonal solution can only match or improve
    it.  Random restarts alone routinely fail to realize that dominance
    (the problems are non-convex and the BD-vs-diagonal optimum gap is
    often tiny), so for BD regimes this solves the diagonal problem first,
    refines it inside the BD set, and additionally tries ``n_random``
    random starts, returning the best outcome.  All draws come from the
    one ``rng`` stream, so results are deterministic per seed.
    """
    rng = rng if rng is not None else np.random.default_rng()
    if regime == "diag":
        return optimize(cfg, ch, objective, regime, opt=opt, rng=rng,
                        record_residuals=record_residuals)
    if regime not in ("bd-exp", "bd-proj"):
        raise ValueError(f"regime {regime!r} has nothing to optimize")
    diag_out = optimize(cfg, ch, objective, "diag", opt=opt, rng=rng,
                        record_residuals=record_residuals)
    phases = diag_out.scatter.phases
    warm_init = np.diag(phases) if regime == "bd-exp" else np.diag(np.exp(1j * phases))
    best = optimize(cfg, ch, objective, regime, opt=opt, init=warm_init,
                    record_residuals=record_residuals)
    for _ in range(n_random):
        out = optimize(cfg, ch, objective, regime, opt=opt, rng=rng,
                       record_residuals=record_residuals)
        if out.value > best.value:
            best = out
    return best
