"""Link objectives: dominant-mode beamforming and waterfilled capacity.

Both objectives are functions of the effective K x M channel H and are
reported in bit/s/Hz.  Their Theta-space gradients follow the convention
dJ = Re tr(G^H dTheta) with dH = h_ru dTheta h_br; each gradient has a
``diag_only`` fast path that returns just diag(G) without materializing
the N x N matrix (all that the phase-only regime needs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet

_LOG2E = math.log2(math.e)


@dataclass(frozen=True)
class WaterfillResult:
    powers: np.ndarray
    water_level: float
    n_active: int


def waterfill(gains: np.ndarray, total_power: float, noise_power: float) -> WaterfillResult:
    """Exact waterfilling over parallel channels with the given power gains.

    Maximizes sum log2(1 + p_i g_i / noise) subject to sum p_i = total and
    p_i >= 0.  Uses the closed-form active-set search: with gains sorted
    descending, the candidate level for k active modes is
    mu_k = (total + sum_{i<=k} noise/g_i) / k, and the solution is the
    largest k whose weakest active mode still gets positive power.
    """
    gains = np.asarray(gains, dtype=float)
    if gains.ndim != 1:
        raise ValueError("gains must be a vector")
    if total_power <= 0 or noise_power <= 0:
        raise ValueError("powers must be positive")
    powers = np.zeros_like(gains)
    usable = np.flatnonzero(gains > 0)
    if usable.size == 0:
        return WaterfillResult(powers=powers, water_level=0.0, n_active=0)
    order = usable[np.argsort(gains[usable])[::-1]]
    inv = noise_power / gains[order]
    k = np.arange(1, order.size + 1)
    mu = (total_power + np.cumsum(inv)) / k
    feasible = np.flatnonzero(mu > inv)
    n_active = int(feasible[-1]) + 1
    level = float(mu[n_active - 1])
    powers[order[:n_active]] = level - inv[:n_active]
    return WaterfillResult(powers=powers, water_level=level, n_active=n_active)


@dataclass(frozen=True)
class TxBFResult:
    """Dominant-mode transmit beamforming over the effective channel."""

    value: float  # bit/s/Hz
    sigma_max: float
    combiner: np.ndarray  # (K,) receive direction
    beamformer: np.ndarray  # (M,) transmit direction
    degenerate_gap: bool  # top two modes numerically tied


def txbf_evaluate(
    h_eff: np.ndarray, tx_power: float, noise_power: float, gap_rtol: float = 1e-10
) -> TxBFResult:
    u, s, vh = np.linalg.svd(np.asarray(h_eff))
    degenerate = s.size > 1 and (s[0] - s[1]) <= gap_rtol * max(s[0], 1e-300)
    snr = tx_power * s[0] ** 2 / noise_power
    return TxBFResult(
        value=float(np.log2(1.0 + snr)),
        sigma_max=float(s[0]),
        combiner=u[:, 0].copy(),
        beamformer=vh[0].conj().copy(),
        degenerate_gap=bool(degenerate),
    )


def txbf_gradient(
    ch: ChannelSet,
    h_eff: np.ndarray,
    result: TxBFResult,
    tx_power: float,
    noise_power: float,
    diag_only: bool = False,
) -> np.ndarray:
    """Theta-space gradient of the beamforming rate.

    The dominant eigenvalue of H H^H has differential
    d lambda = 2 Re(u^H dH H^H u), which chains through the rate to a
    rank-one G = c * (h_ru^H u) (u^H H h_br^H) with
    c = 2 (P / noise) log2(e) / (1 + P lambda / noise).
    """
    u = result.combiner
    lam = result.sigma_max**2
    rho = tx_power / noise_power
    coeff = 2.0 * rho * _LOG2E / (1.0 + rho * lam)
    left = ch.h_ru.conj().T @ u  # (N,)
    right = (u.conj() @ h_eff) @ ch.h_br.conj().T  # (N,)
    if diag_only:
        return coeff * left * right
    return coeff * np.outer(left, right)


@dataclass(frozen=True)
class CapacityResult:
    """Waterfilled eigenmode transmission over the effective channel."""

    value: float  # bit/s/Hz
    singular_values: np.ndarray
    powers: np.ndarray  # per mode, sums to the transmit power
    water_level: float
    precoder: np.ndarray  # (M, r) active right singular vectors * sqrt(power)


def capacity_evaluate(
    h_eff: np.ndarray, tx_power: float, noise_power: float
) -> CapacityResult:
    _, s, vh = np.linalg.svd(np.asarray(h_eff))
    wf = waterfill(s**2, tx_power, noise_power)
    active = np.flatnonzero(wf.powers > 0)
    precoder = vh[active].conj().T * np.sqrt(wf.powers[active])[None, :]
    value = float(np.sum(np.log2(1.0 + wf.powers[active] * s[active] ** 2 / noise_power)))
    return CapacityResult(
        value=value,
        singular_values=s.copy(),
        powers=wf.powers,
        water_level=wf.water_level,
        precoder=precoder,
    )


def capacity_value_fixed_precoder(
    h_eff: np.ndarray, precoder: np.ndarray, noise_power: float
) -> float:
    """log2 det(I + H B B^H H^H / noise) with the precoder B held fixed."""
    hb = np.asarray(h_eff) @ precoder
    k = hb.shape[0]
    x = np.eye(k) + hb @ hb.conj().T / noise_power
    sign, logdet = np.linalg.slogdet(x)
    # sign is nan for overflowed inputs, and nan <= 0 is False, so check both
    if not np.isfinite(logdet) or not sign.real > 0:
        raise np.linalg.LinAlgError("capacity Gram matrix is not positive definite")
    return float(logdet * _LOG2E)


def capacity_gradient(
    ch: ChannelSet,
    h_eff: np.ndarray,
    precoder: np.ndarray,
    noise_power: float,
    diag_only: bool = False,
) -> np.ndarray:
    """Theta-space gradient of the fixed-precoder rate.

    With B frozen and X = I + (H B)(H B)^H / noise,

        G = (2 log2(e) / noise) h_ru^H X^{-1} (H B) B^H h_br^H,

    rank at most the number of active modes.
    """
    hb = np.asarray(h_eff) @ precoder  # (K, r)
    k = hb.shape[0]
    x = np.eye(k) + hb @ hb.conj().T / noise_power
    xinv_hb = np.linalg.solve(x, hb)  # (K, r)
    coeff = 2.0 * _LOG2E / noise_power
    left = ch.h_ru.conj().T @ xinv_hb  # (N, r)
    right = precoder.conj().T @ ch.h_br.conj().T  # (r, N)
    if diag_only:
        return coeff * np.einsum("nr,rn->n", left, right)
    return coeff * (left @ right)
