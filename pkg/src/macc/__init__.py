"""Coded distributed matrix-vector multiplication over a mobile ad hoc cluster.

A seeded discrete-event simulator of master/worker offloading with Gaussian
coding, physical link and compute models, baseline allocators (uniform,
load-balanced, HCMM), and a from-scratch MADDPG trainer that learns the
per-task load allocation.
"""

__version__ = "0.1.0"

from .config import ScenarioConfig, TrainConfig, load_config, preset_scenario
from .numerics import RngStream

__all__ = [
    "RngStream",
    "ScenarioConfig",
    "TrainConfig",
    "load_config",
    "preset_scenario",
    "__version__",
]
