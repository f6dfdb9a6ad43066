import math

import numpy as np
import pytest

from risbeam.channel import (
    build_channels,
    effective_channel,
    pathloss_direct,
    ris_element_gains,
)
from risbeam.config import Obstacle, ScenarioConfig
from risbeam.geometry import LinkGeometry, panel_frame
from risbeam.scatter import ScatterMatrix


def test_pathloss_hand_value():
    cfg = ScenarioConfig()
    # PL(100 m, 30 GHz) = 32.4 + 21*2 + 20*log10(30) = 103.94... dB
    want_db = 32.4 + 21.0 * 2.0 + 20.0 * math.log10(30.0)
    assert 10 * np.log10(pathloss_direct(cfg, 100.0)) == pytest.approx(-want_db)


def test_pathloss_clamped_below_ten_meters():
    cfg = ScenarioConfig()
    assert pathloss_direct(cfg, 3.0) == pathloss_direct(cfg, 10.0)
    assert pathloss_direct(cfg, 10.0) > pathloss_direct(cfg, 10.5)


def test_pathloss_monotone_and_vectorized():
    cfg = ScenarioConfig()
    d = np.linspace(10.0, 80.0, 40)
    g = pathloss_direct(cfg, d)
    assert g.shape == d.shape
    assert np.all(np.diff(g) < 0)


def test_pathloss_antenna_gain_flag():
    base = ScenarioConfig()
    with_gains = ScenarioConfig(direct_link_antenna_gains=True)
    ratio = pathloss_direct(with_gains, 50.0) / pathloss_direct(base, 50.0)
    assert ratio == pytest.approx(base.bs_gain * base.ue_gain)


def test_element_gains_structure():
    cfg = ScenarioConfig().with_ris_elements(8)
    geom = LinkGeometry.for_point(cfg, (10.0, 40.0))
    g_ru, g_br = ris_element_gains(cfg, geom)
    assert g_ru.shape == (2, 8)
    assert g_br.shape == (8, 4)
    assert np.all(g_ru >= 0) and np.all(g_br > 0)
    assert np.all(np.isfinite(g_ru)) and np.all(np.isfinite(g_br))


def test_element_gains_textbook_formula_at_unit_scale():
    # BS and UE both on the panel boresight: every pattern factor is 1
    # (theta_s from the plane is 90 degrees so W = 0; both azimuths are 0
    # so Y = 0) and the gains reduce to the bare aperture budget
    # (G / 4 pi) * a b / d^2.
    cfg = ScenarioConfig(
        ris_rows=1, ris_cols=1, ris_gain_scale=1.0,
        bs_position=(60.0, 40.0, 10.0), ue_antennas=1, bs_antennas=1,
    )
    geom = LinkGeometry.for_point(cfg, (20.0, 40.0))
    # pin the single antennas exactly onto the +x boresight line
    geom = LinkGeometry(
        bs=np.array([[60.0, 40.0, 6.0]]), ue=np.array([[20.0, 40.0, 6.0]]), ris=geom.ris)
    g_ru, g_br = ris_element_gains(cfg, geom)
    a, b = cfg.element_size
    d = np.linalg.norm(geom.ue[0] - geom.ris[0])
    want = (cfg.ue_gain / (4 * math.pi)) * a * b / d**2
    assert g_ru[0, 0] == pytest.approx(want, rel=1e-12)

    d_br = np.linalg.norm(geom.bs[0] - geom.ris[0])
    want_br = (cfg.bs_gain / (4 * math.pi)) * a * b / d_br**2  # cos(psi_i) = 1
    assert g_br[0, 0] == pytest.approx(want_br, rel=1e-12)


def test_element_gains_documented_formula_off_axis():
    # Transcribe the documented pattern math independently for a single
    # element and an oblique UE direction and compare.
    cfg = ScenarioConfig(ris_rows=1, ris_cols=1, ris_gain_scale=1.0,
                         bs_antennas=1, ue_antennas=1)
    geom = LinkGeometry.for_point(cfg, (20.0, 25.0))
    g_ru, _ = ris_element_gains(cfg, geom)

    n, h, _ = panel_frame(cfg.ris_tilt)
    a, b = cfg.element_size
    lam = cfg.wavelength
    w = np.asarray(cfg.bs_position) - geom.ris[0]
    sin_psi_i = (w @ h) / math.hypot(w @ n, w @ h)
    s = geom.ue[0] - geom.ris[0]
    d = np.linalg.norm(s)
    sin_theta_s = (s @ n) / d
    cos_theta_s = math.sqrt(1 - sin_theta_s**2)
    sin_psi_s = (s @ h) / math.hypot(s @ n, s @ h)
    w_arg = math.pi * a / lam * cos_theta_s
    y_arg = math.pi * a / lam * (sin_psi_i + sin_theta_s * sin_psi_s)
    pattern = np.sinc(y_arg / math.pi) ** 2 * np.sinc(w_arg / math.pi) ** 2
    want = (cfg.ue_gain / (4 * math.pi)) * a * b / d**2 * pattern
    assert g_ru[0, 0] == pytest.approx(float(want), rel=1e-12)


def test_element_gains_behind_panel_zero():
    # RIS on the west wall faces +x; a UE cannot be behind it inside the
    # area, so build a geometry by hand with the UE at negative x.
    cfg = ScenarioConfig().with_ris_elements(4)
    geom = LinkGeometry.for_point(cfg, (10.0, 40.0))
    behind = LinkGeometry(bs=geom.bs, ue=np.array([[-5.0, 40.0, 1.5], [-5.0, 41.0, 1.5]]), ris=geom.ris)
    g_ru, _ = ris_element_gains(cfg, behind)
    assert np.all(g_ru == 0.0)


def test_incident_azimuth_attenuates_capture():
    # Grazing incidence (BS nearly in the panel plane) must capture far
    # less than normal incidence at the same distance.
    d = 30.0
    normal = ScenarioConfig(ris_rows=1, ris_cols=1, bs_position=(d, 40.0, 6.0))
    grazing = ScenarioConfig(ris_rows=1, ris_cols=1, bs_position=(0.5, 40.0 - d, 6.0))
    g_n = ris_element_gains(normal, LinkGeometry.for_point(normal, (10.0, 40.0)))[1]
    g_g = ris_element_gains(grazing, LinkGeometry.for_point(grazing, (10.0, 40.0)))[1]
    assert g_g[0, 0] < 0.05 * g_n[0, 0]


def test_channel_entry_form():
    cfg = ScenarioConfig().with_ris_elements(8)
    ch = build_channels(cfg, (10.0, 40.0))
    assert ch.h_bu.shape == (2, 4)
    assert ch.h_br.shape == (8, 4)
    assert ch.h_ru.shape == (2, 8)
    # sqrt(gain) magnitudes: direct entries carry the UMi pathloss
    geom = LinkGeometry.for_point(cfg, (10.0, 40.0))
    d00 = np.linalg.norm(geom.ue[0] - geom.bs[0])
    assert abs(ch.h_bu[0, 0]) == pytest.approx(
        math.sqrt(pathloss_direct(cfg, d00)), rel=1e-12)
    # phase = -2 pi d / lambda
    want_phase = np.exp(-1j * 2 * math.pi * d00 / cfg.wavelength)
    assert ch.h_bu[0, 0] / abs(ch.h_bu[0, 0]) == pytest.approx(want_phase, rel=1e-9)


def test_obstacle_attenuates_direct_only():
    obs = Obstacle((23.0, 40.0), (33.0, 40.0), attenuation_db=10.0)
    cfg = ScenarioConfig(obstacle=obs).with_ris_elements(8)
    clear = ScenarioConfig().with_ris_elements(8)
    shadowed_xy = (30.0, 20.0)
    ch_obs = build_channels(cfg, shadowed_xy)
    ch_clear = build_channels(clear, shadowed_xy)
    assert ch_obs.blocked and not ch_clear.blocked
    assert np.allclose(ch_obs.h_bu, 0.1 * ch_clear.h_bu)
    assert np.allclose(ch_obs.h_br, ch_clear.h_br)
    assert np.allclose(ch_obs.h_ru, ch_clear.h_ru)
    # unshadowed point: identical channels
    ch2 = build_channels(cfg, (5.0, 20.0))
    assert not ch2.blocked
    assert np.allclose(ch2.h_bu, build_channels(clear, (5.0, 20.0)).h_bu)


def test_build_without_ris():
    cfg = ScenarioConfig()
    ch = build_channels(cfg, (10.0, 40.0), with_ris=False)
    assert ch.n_ris_elements == 0
    assert ch.h_ru.shape == (2, 0)
    h = effective_channel(ch, None)
    assert np.array_equal(h, ch.h_bu)


def test_effective_channel_operand_forms():
    cfg = ScenarioConfig().with_ris_elements(6)
    ch = build_channels(cfg, (10.0, 40.0))
    rng = np.random.default_rng(0)
    phases = rng.uniform(0, 2 * np.pi, 6)
    sm = ScatterMatrix.from_phases(phases)
    via_vector = effective_channel(ch, np.exp(1j * phases))
    via_scatter = effective_channel(ch, sm)
    via_dense = effective_channel(ch, np.diag(np.exp(1j * phases)))
    assert np.allclose(via_scatter, via_vector, atol=1e-18)
    assert np.allclose(via_dense, via_vector, atol=1e-18)
    want = ch.h_bu + (ch.h_ru * np.exp(1j * phases)) @ ch.h_br
    assert np.allclose(via_vector, want, atol=1e-18)


def test_effective_channel_size_mismatch():
    cfg = ScenarioConfig().with_ris_elements(6)
    ch = build_channels(cfg, (10.0, 40.0))
    with pytest.raises(ValueError):
        effective_channel(ch, np.ones(5))
    with pytest.raises(ValueError):
        effective_channel(ch, np.eye(5))


def test_ris_coherent_budget_grows_with_elements():
    # The phase-aligned cascade bound sum_i |h_ru[0,i]| |h_br[i,0]| (what
    # a diagonal panel can steer toward one antenna pair) must grow with
    # the element count; every extra element adds a positive term.
    xy = (10.0, 40.0)
    budgets = []
    for n in (32, 64, 128):
        ch = build_channels(ScenarioConfig().with_ris_elements(n), xy)
        budgets.append(float(np.sum(np.abs(ch.h_ru[0]) * np.abs(ch.h_br[:, 0]))))
    assert budgets[0] < budgets[1] < budgets[2]
    assert budgets[2] > 2.0 * budgets[0]
