"""Scenario, optimizer and sweep configuration.

All quantities are stored in SI units (watts, meters, hertz, radians,
linear gains).  Decibel values appear only in config files and in the
run manifest; they are converted exactly once, at load time.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import dataclass, field, asdict, replace
from typing import Optional, Tuple

# Propagation speed. 3e8 keeps a 30 GHz carrier at exactly 1 cm wavelength,
# which the half-wavelength element spacings below rely on.
C_LIGHT = 3.0e8

CONFIG_FORMAT_VERSION = 1


class ConfigError(ValueError):
    """Raised for invalid or inconsistent configuration values."""


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def dbm_to_watts(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watts_to_dbm(x_w: float) -> float:
    return 10.0 * math.log10(x_w) + 30.0


@dataclass(frozen=True)
class Obstacle:
    """2-D blocking segment with a fixed penetration loss.

    The direct BS-UE channel is multiplied by ``amplitude_factor`` whenever
    the horizontal BS-UE segment crosses this segment.
    """

    p1: Tuple[float, float]
    p2: Tuple[float, float]
    attenuation_db: float = 10.0

    @property
    def amplitude_factor(self) -> float:
        # Field-amplitude scale for a blocked path. Calibrated against the
        # reference coverage tables this simulator reproduces; see README.
        return 10.0 ** (-self.attenuation_db / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical deployment: geometry, powers, array layouts.

    Defaults describe the reference urban-microcell scenario: a 4-antenna
    BS on the north edge of a 60 m x 60 m area, a 2-antenna UE at 1.5 m
    height, and a wall-mounted RIS panel on the west edge.
    """

    carrier_frequency: float = 30.0e9
    bandwidth: float = 50.0e6
    tx_power: float = dbm_to_watts(24.0)
    noise_power: float = dbm_to_watts(-94.0)
    bs_gain: float = db_to_linear(3.0)
    ue_gain: float = db_to_linear(3.0)

    bs_position: Tuple[float, float, float] = (30.0, 60.0, 10.0)
    bs_tilt: Tuple[float, float] = (math.pi, math.pi / 2.0)
    bs_antennas: int = 4
    ue_antennas: int = 2
    ue_height: float = 1.5
    antenna_spacing: Optional[float] = None  # None -> half wavelength

    ris_position: Tuple[float, float, float] = (0.0, 40.0, 6.0)
    ris_tilt: Tuple[float, float] = (-math.pi / 2.0, math.pi / 2.0)
    ris_rows: int = 5
    ris_cols: int = 200
    ris_element_size: Optional[Tuple[float, float]] = None  # None -> half wavelength

    area: Tuple[float, float, float, float] = (0.0, 60.0, 0.0, 60.0)
    obstacle: Optional[Obstacle] = None

    # The 3GPP UMi LOS pathloss model is specified for distances >= 10 m;
    # shorter links are evaluated at the clamp distance.
    pathloss_min_distance: float = 10.0
    # The direct link treats BS/UE antennas as isotropic (0 dBi).  Setting
    # this flag folds bs_gain * ue_gain into the direct-link budget instead.
    direct_link_antenna_gains: bool = False
    # Per-link scale on the RIS element gains.  1.0 gives the textbook
    # aperture budget G * ab / (4 pi d^2); the default of 4 pi reproduces
    # the reference coverage tables.  See README ("Link-budget calibration").
    ris_gain_scale: float = 4.0 * math.pi

    @property
    def wavelength(self) -> float:
        return C_LIGHT / self.carrier_frequency

    @property
    def spacing(self) -> float:
        return self.antenna_spacing if self.antenna_spacing is not None else 0.5 * self.wavelength

    @property
    def element_size(self) -> Tuple[float, float]:
        if self.ris_element_size is not None:
            return self.ris_element_size
        half = 0.5 * self.wavelength
        return (half, half)

    @property
    def n_ris_elements(self) -> int:
        return self.ris_rows * self.ris_cols

    def __post_init__(self):
        if self.carrier_frequency <= 0 or self.bandwidth <= 0:
            raise ConfigError("carrier frequency and bandwidth must be positive")
        if self.tx_power <= 0 or self.noise_power <= 0:
            raise ConfigError("tx_power and noise_power must be positive")
        if self.bs_antennas < 1 or self.ue_antennas < 1:
            raise ConfigError("antenna counts must be >= 1")
        if self.ris_rows < 1 or self.ris_cols < 1:
            raise ConfigError("RIS grid dimensions must be >= 1")
        xmin, xmax, ymin, ymax = self.area
        if not (xmin < xmax and ymin < ymax):
            raise ConfigError("area extent must be non-empty")
        if self.pathloss_min_distance < 0:
            raise ConfigError("pathloss_min_distance must be >= 0")
        if self.ris_gain_scale <= 0:
            raise ConfigError("ris_gain_scale must be positive")
        bs_h = self.bs_position[2]
        if bs_h <= 1.0 or self.ue_height <= 1.0:
            raise ConfigError("BS and UE heights must exceed the 1 m effective environment height")
        # Pre-breakpoint UMi LOS is the only pathloss branch implemented;
        # reject geometries where the breakpoint falls inside the area.
        if self.breakpoint_distance() <= self.max_link_distance():
            raise ConfigError(
                "pathloss breakpoint %.1f m falls inside the deployment area "
                "(max link distance %.1f m); the single-slope LOS model does not apply"
                % (self.breakpoint_distance(), self.max_link_distance())
            )

    def breakpoint_distance(self) -> float:
        """UMi LOS breakpoint, with the standard 1 m effective environment height."""
        h_bs = self.bs_position[2] - 1.0
        h_ue = self.ue_height - 1.0
        return 4.0 * h_bs * h_ue * self.carrier_frequency / C_LIGHT

    def max_link_distance(self) -> float:
        """Largest possible BS-UE 3-D distance for a UE inside the area."""
        xmin, xmax, ymin, ymax = self.area
        bx, by, bz = self.bs_position
        dz = bz - self.ue_height
        worst = 0.0
        for cx in (xmin, xmax):
            for cy in (ymin, ymax):
                worst = max(worst, math.hypot(cx - bx, cy - by))
        return math.sqrt(worst**2 + dz**2)

    def with_ris_elements(self, n_r: int) -> "ScenarioConfig":
        """Same scenario with the panel resized to n_r elements.

        Keeps the configured row count when it divides n_r, otherwise the
        largest smaller row count that does (down to a single row).
        """
        if n_r < 1:
            raise ConfigError("n_r must be >= 1")
        rows = next(r for r in range(min(self.ris_rows, n_r), 0, -1) if n_r % r == 0)
        return replace(self, ris_rows=rows, ris_cols=n_r // rows)

    def canonical_dict(self) -> dict:
        d = asdict(self)
        d["obstacle"] = None if self.obstacle is None else asdict(self.obstacle)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class OptimizerConfig:
    """Gradient-ascent settings shared by all scatter-matrix regimes.

    ``method`` may be "momentum", "rmsprop", "adam" or "auto"; "auto"
    selects rmsprop for the diagonal regime and adam for the BD regimes.
    """

    method: str = "auto"
    step_size: float = 0.05
    momentum_beta: float = 0.9
    rms_decay: float = 0.9
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    epsilon: float = 1.0e-8
    inner_tol: float = 1.0e-5
    outer_tol: float = 1.0e-5
    max_inner: int = 200
    max_outer: int = 20

    def __post_init__(self):
        if self.method not in ("auto", "momentum", "rmsprop", "adam"):
            raise ConfigError("unknown optimizer method %r" % (self.method,))
        if self.step_size <= 0:
            raise ConfigError("step_size must be positive")
        if self.inner_tol <= 0 or self.outer_tol <= 0:
            raise ConfigError("tolerances must be positive")
        if self.max_inner < 1 or self.max_outer < 1:
            raise ConfigError("iteration limits must be >= 1")
        for name in ("momentum_beta", "rms_decay", "adam_beta1", "adam_beta2"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ConfigError("%s must lie in [0, 1)" % name)


VALID_REGIMES = ("none", "diag", "bd-exp", "bd-proj")
VALID_OBJECTIVES = ("capacity", "txbf")


@dataclass(frozen=True)
class SweepCase:
    """One curve of a coverage sweep: objective, scatter regime, panel size."""

    objective: str = "capacity"
    regime: str = "none"
    n_r: Optional[int] = None

    def __post_init__(self):
        if self.objective not in VALID_OBJECTIVES:
            raise ConfigError("unknown objective %r" % (self.objective,))
        if self.regime not in VALID_REGIMES:
            raise ConfigError("unknown regime %r" % (self.regime,))
        if self.regime == "none" and self.n_r is not None:
            raise ConfigError("n_r is meaningless without a RIS")
        if self.n_r is not None and self.n_r < 1:
            raise ConfigError("n_r must be >= 1")

    @property
    def case_id(self) -> str:
        if self.regime == "none":
            return "%s-none" % self.objective
        suffix = "" if self.n_r is None else "-n%d" % self.n_r
        return "%s-%s%s" % (self.objective, self.regime, suffix)

    @staticmethod
    def parse(text: str) -> "SweepCase":
        """Parse "objective:regime[:n_r]", e.g. "capacity:bd-proj:1000"."""
        parts = text.strip().split(":")
        if len(parts) not in (2, 3):
            raise ConfigError("cannot parse sweep case %r" % text)
        n_r = int(parts[2]) if len(parts) == 3 else None
        return SweepCase(objective=parts[0], regime=parts[1], n_r=n_r)


@dataclass(frozen=True)
class SweepConfig:
    grid_resolution: float = 1.0
    cases: Tuple[SweepCase, ...] = (SweepCase(),)
    seed: int = 0
    workers: int = 1
    mask_radius: float = 0.5

    def __post_init__(self):
        if self.grid_resolution <= 0:
            raise ConfigError("grid_resolution must be positive")
        if not self.cases:
            raise ConfigError("at least one sweep case is required")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.mask_radius < 0:
            raise ConfigError("mask_radius must be >= 0")
        ids = [c.case_id for c in self.cases]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate sweep case ids: %s" % ids)


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)


def _parse_floats(text: str, n: int, what: str) -> Tuple[float, ...]:
    parts = text.split()
    if len(parts) != n:
        raise ConfigError("%s expects %d numbers, got %r" % (what, n, text))
    return tuple(float(p) for p in parts)


def _parse_bool(text: str, what: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError("%s expects a boolean, got %r" % (what, text))


def load_config(path: str) -> RunConfig:
    """Load an INI run configuration (see configs/reference.ini).

    Every key is optional; omitted keys keep the built-in reference
    defaults.  Decibel keys are converted to linear/SI here.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError("config file %r not found or unreadable" % path)

    meta = parser["meta"] if parser.has_section("meta") else {}
    version = int(meta.get("format_version", CONFIG_FORMAT_VERSION))
    if version != CONFIG_FORMAT_VERSION:
        raise ConfigError("unsupported config format_version %d" % version)

    kwargs = {}
    if parser.has_section("scenario"):
        s = parser["scenario"]
        if "carrier_frequency_ghz" in s:
            kwargs["carrier_frequency"] = float(s["carrier_frequency_ghz"]) * 1e9
        if "bandwidth_mhz" in s:
            kwargs["bandwidth"] = float(s["bandwidth_mhz"]) * 1e6
        if "tx_power_dbm" in s:
            kwargs["tx_power"] = dbm_to_watts(float(s["tx_power_dbm"]))
        if "noise_power_dbm" in s:
            kwargs["noise_power"] = dbm_to_watts(float(s["noise_power_dbm"]))
        if "bs_gain_dbi" in s:
            kwargs["bs_gain"] = db_to_linear(float(s["bs_gain_dbi"]))
        if "ue_gain_dbi" in s:
            kwargs["ue_gain"] = db_to_linear(float(s["ue_gain_dbi"]))
        if "bs_position" in s:
            kwargs["bs_position"] = _parse_floats(s["bs_position"], 3, "bs_position")
        if "bs_tilt" in s:
            kwargs["bs_tilt"] = _parse_floats(s["bs_tilt"], 2, "bs_tilt")
        if "ris_position" in s:
            kwargs["ris_position"] = _parse_floats(s["ris_position"], 3, "ris_position")
        if "ris_tilt" in s:
            kwargs["ris_tilt"] = _parse_floats(s["ris_tilt"], 2, "ris_tilt")
        for key in ("bs_antennas", "ue_antennas", "ris_rows", "ris_cols"):
            if key in s:
                kwargs[key] = int(s[key])
        if "ue_height" in s:
            kwargs["ue_height"] = float(s["ue_height"])
        if "antenna_spacing" in s:
            kwargs["antenna_spacing"] = float(s["antenna_spacing"])
        if "ris_element_size" in s:
            kwargs["ris_element_size"] = _parse_floats(s["ris_element_size"], 2, "ris_element_size")
        if "area" in s:
            kwargs["area"] = _parse_floats(s["area"], 4, "area")
        if "obstacle" in s:
            x1, y1, x2, y2 = _parse_floats(s["obstacle"], 4, "obstacle")
            att = float(s.get("obstacle_attenuation_db", 10.0))
            kwargs["obstacle"] = Obstacle((x1, y1), (x2, y2), att)
        if "pathloss_min_distance" in s:
            kwargs["pathloss_min_distance"] = float(s["pathloss_min_distance"])
        if "direct_link_antenna_gains" in s:
            kwargs["direct_link_antenna_gains"] = _parse_bool(
                s["direct_link_antenna_gains"], "direct_link_antenna_gains"
            )
        if "ris_gain_scale" in s:
            kwargs["ris_gain_scale"] = float(s["ris_gain_scale"])
    scenario = ScenarioConfig(**kwargs)

    okwargs = {}
    if parser.has_section("optimizer"):
        o = parser["optimizer"]
        if "method" in o:
            okwargs["method"] = o["method"].strip()
        for key in (
            "step_size", "momentum_beta", "rms_decay", "adam_beta1",
            "adam_beta2", "epsilon", "inner_tol", "outer_tol",
        ):
            if key in o:
                okwargs[key] = float(o[key])
        for key in ("max_inner", "max_outer"):
            if key in o:
                okwargs[key] = int(o[key])
    optimizer = OptimizerConfig(**okwargs)

    skwargs = {}
    if parser.has_section("sweep"):
        w = parser["sweep"]
        if "grid_resolution" in w:
            skwargs["grid_resolution"] = float(w["grid_resolution"])
        if "cases" in w:
            skwargs["cases"] = tuple(SweepCase.parse(c) for c in w["cases"].split(","))
        if "seed" in w:
            skwargs["seed"] = int(w["seed"])
        if "workers" in w:
            skwargs["workers"] = int(w["workers"])
        if "mask_radius" in w:
            skwargs["mask_radius"] = float(w["mask_radius"])
    sweep = SweepConfig(**skwargs)

    return RunConfig(scenario=scenario, optimizer=optimizer, sweep=sweep)


def manifest_scenario_entry(cfg: ScenarioConfig) -> dict:
    """Scenario as written to run manifests: SI values plus dB echoes."""
    d = cfg.canonical_dict()
    d["derived"] = {
        "wavelength_m": cfg.wavelength,
        "antenna_spacing_m": cfg.spacing,
        "ris_element_size_m": list(cfg.element_size),
        "n_ris_elements": cfg.n_ris_elements,
        "breakpoint_distance_m": cfg.breakpoint_distance(),
        "pathloss_clamp_m": cfg.pathloss_min_distance,
    }
    d["decibel"] = {
        "tx_power_dbm": watts_to_dbm(cfg.tx_power),
        "noise_power_dbm": watts_to_dbm(cfg.noise_power),
        "bs_gain_dbi": linear_to_db(cfg.bs_gain),
        "ue_gain_dbi": linear_to_db(cfg.ue_gain),
        "obstacle_attenuation_db": None if cfg.obstacle is None else cfg.obstacle.attenuation_db,
    }
    return d
