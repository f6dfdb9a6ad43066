"""Deterministic LOS channel construction for the three links.

Every entry has the form sqrt(gain) * exp(-j * 2 pi d / lambda) with a
per-antenna-pair distance d.  The direct BS-UE link uses the 3GPP UMi
street-canyon LOS pathloss (single slope, distances clamped from below);
the two RIS links use an aperture link budget with the panel's scattering
pattern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .config import ScenarioConfig
from .geometry import LinkGeometry, blocked_by_obstacle, panel_frame


def _sinc(x: np.ndarray) -> np.ndarray:
    """sin(x)/x with sinc(0) = 1 (unnormalized)."""
    return np.sinc(np.asarray(x) / np.pi)


def pathloss_direct(cfg: ScenarioConfig, distance_m) -> np.ndarray:
    """Linear power gain of the direct link at the given 3-D distance(s).

    Implements the urban-microcell street-canyon LOS model below its
    breakpoint: PL(dB) = 32.4 + 21 log10(d) + 20 log10(f_GHz).  Distances
    under ``pathloss_min_distance`` are evaluated at the clamp (the model
    is not specified closer in) and config validation guarantees the
    breakpoint lies outside the area.  Antenna gains are excluded unless
    ``direct_link_antenna_gains`` is set.
    """
    d = np.maximum(np.asarray(distance_m, dtype=float), cfg.pathloss_min_distance)
    f_ghz = cfg.carrier_frequency / 1e9
    pl_db = 32.4 + 21.0 * np.log10(d) + 20.0 * math.log10(f_ghz)
    gain = 10.0 ** (-pl_db / 10.0)
    if cfg.direct_link_antenna_gains:
        gain = gain * cfg.bs_gain * cfg.ue_gain
    return gain


def ris_element_gains(
    cfg: ScenarioConfig, geom: LinkGeometry
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-element power gains (g_ru, g_br) of the two RIS links.

    g_br[i, l]: capture of BS antenna l by element i, proportional to the
    element aperture projected on the incident azimuth,

        scale * (G_t / 4 pi) * (a b / d_il^2) * cos(psi_i)^2.

    g_ru[k, i]: re-radiation from element i toward UE antenna k through the
    panel scattering pattern,

        scale * (G_u / 4 pi) * (a b / d_ki^2) * sinc(Y)^2 * sinc(W)^2,
        W = (pi a / lambda) cos(theta_s),
        Y = (pi a / lambda) (sin(psi_i) + sin(theta_s) sin(psi_s)),

    where theta_s is the scattered elevation measured from the panel plane,
    psi_i / psi_s are incident/scattered azimuths measured from the panel
    normal (signed, in the panel's horizontal plane), and the incident
    direction is taken from the BS array center.  Directions behind the
    panel get zero gain.
    """
    n, h, _ = panel_frame(cfg.ris_tilt)
    a, b = cfg.element_size
    lam = cfg.wavelength
    scale = cfg.ris_gain_scale

    bs_center = np.asarray(cfg.bs_position, dtype=float)

    # Incident azimuth per element, from the BS array center.
    w = bs_center[None, :] - geom.ris  # (N, 3)
    w_n = w @ n
    w_h = w @ h
    horiz = np.hypot(w_n, w_h)
    cos_psi_i = np.clip(w_n, 0.0, None) / np.maximum(horiz, 1e-300)
    sin_psi_i = w_h / np.maximum(horiz, 1e-300)

    d_br = np.linalg.norm(geom.ris[:, None, :] - geom.bs[None, :, :], axis=-1)  # (N, M)
    g_br = scale * (cfg.bs_gain / (4.0 * math.pi)) * (a * b) / d_br**2
    g_br = g_br * cos_psi_i[:, None] ** 2

    # Scattered direction per (UE antenna, element).
    s = geom.ue[:, None, :] - geom.ris[None, :, :]  # (K, N, 3)
    d_ru = np.linalg.norm(s, axis=-1)  # (K, N)
    s_n = s @ n
    s_h = s @ h
    front = s_n > 0.0
    sin_theta_s = np.clip(s_n / d_ru, -1.0, 1.0)
    cos_theta_s = np.sqrt(np.clip(1.0 - sin_theta_s**2, 0.0, 1.0))
    horiz_s = np.maximum(np.hypot(s_n, s_h), 1e-300)
    sin_psi_s = s_h / horiz_s

    w_arg = (math.pi * a / lam) * cos_theta_s
    y_arg = (math.pi * a / lam) * (sin_psi_i[None, :] + sin_theta_s * sin_psi_s)
    pattern = _sinc(y_arg) ** 2 * _sinc(w_arg) ** 2

    g_ru = scale * (cfg.ue_gain / (4.0 * math.pi)) * (a * b) / d_ru**2
    g_ru = g_ru * pattern * front

    return g_ru, g_br


@dataclass(frozen=True)
class ChannelSet:
    """Frozen channel matrices for one UE drop.

    h_bu: (K, M) direct link, h_br: (N, M) BS-to-RIS, h_ru: (K, N)
    RIS-to-UE.  h_br/h_ru are empty (N = 0) when built without a RIS.
    """

    h_bu: np.ndarray
    h_br: np.ndarray
    h_ru: np.ndarray
    ue_xy: Tuple[float, float]
    blocked: bool

    @property
    def n_ris_elements(self) -> int:
        return self.h_br.shape[0]


def build_channels(
    cfg: ScenarioConfig, ue_xy, with_ris: bool = True
) -> ChannelSet:
    """Construct the deterministic channel set for a UE at ``ue_xy``."""
    geom = LinkGeometry.for_point(cfg, ue_xy, with_ris=with_ris)
    lam = cfg.wavelength
    k_wave = 2.0 * math.pi / lam

    d_bu = np.linalg.norm(geom.ue[:, None, :] - geom.bs[None, :, :], axis=-1)  # (K, M)
    h_bu = np.sqrt(pathloss_direct(cfg, d_bu)) * np.exp(-1j * k_wave * d_bu)

    blocked = blocked_by_obstacle(cfg, ue_xy)
    if blocked:
        h_bu = h_bu * cfg.obstacle.amplitude_factor

    if with_ris and geom.ris.shape[0] > 0:
        g_ru, g_br = ris_element_gains(cfg, geom)
        d_br = np.linalg.norm(geom.ris[:, None, :] - geom.bs[None, :, :], axis=-1)
        d_ru = np.linalg.norm(geom.ue[:, None, :] - geom.ris[None, :, :], axis=-1)
        h_br = np.sqrt(g_br) * np.exp(-1j * k_wave * d_br)
        h_ru = np.sqrt(g_ru) * np.exp(-1j * k_wave * d_ru)
    else:
        k, m = cfg.ue_antennas, cfg.bs_antennas
        h_br = np.zeros((0, m), dtype=complex)
        h_ru = np.zeros((k, 0), dtype=complex)

    return ChannelSet(h_bu=h_bu, h_br=h_br, h_ru=h_ru, ue_xy=tuple(ue_xy), blocked=blocked)


def effective_channel(ch: ChannelSet, scatter: Optional[object] = None) -> np.ndarray:
    """Effective K x M downlink channel h_bu + h_ru @ Theta @ h_br.

    ``scatter`` may be None (no RIS), a ScatterMatrix, a dense (N, N)
    array, or a length-N vector of diagonal entries.
    """
    if scatter is None:
        return ch.h_bu.copy()
    entries = getattr(scatter, "as_operand", lambda: scatter)()
    entries = np.asarray(entries)
    if entries.ndim == 1:
        if entries.shape[0] != ch.n_ris_elements:
            raise ValueError("scatter size does not match channel set")
        return ch.h_bu + (ch.h_ru * entries[None, :]) @ ch.h_br
    if entries.shape != (ch.n_ris_elements, ch.n_ris_elements):
        raise ValueError("scatter size does not match channel set")
    return ch.h_bu + ch.h_ru @ entries @ ch.h_br
