"""RIS-assisted MIMO downlink simulator and scattering-matrix optimizer."""

from .channel import ChannelSet, build_channels, effective_channel
from .config import (
    ConfigError,
    Obstacle,
    OptimizerConfig,
    RunConfig,
    ScenarioConfig,
    SweepCase,
    SweepConfig,
    load_config,
)
from .objectives import capacity_evaluate, txbf_evaluate, waterfill
from .optimizer import OptimizeOutcome, multistart, optimize, staged_optimize
from .scatter import ScatterMatrix

from .version import VERSION as __version__

__all__ = [
    "ChannelSet",
    "ConfigError",
    "Obstacle",
    "OptimizeOutcome",
    "OptimizerConfig",
    "RunConfig",
    "ScatterMatrix",
    "ScenarioConfig",
    "SweepCase",
    "SweepConfig",
    "build_channels",
    "capacity_evaluate",
    "effective_channel",
    "load_config",
    "multistart",
    "optimize",
    "staged_optimize",
    "txbf_evaluate",
    "waterfill",
    "__version__",
]
