"""Simulation and design toolkit for a vibration-driven optical heat engine.

A mechanical mode sweeps an optical mode's frequency between two spectrally
peaked thermal reservoirs.  The package provides the closed-form cycle model
and stochastic trajectory simulations with colored noise and memory, plus
ensemble statistics, fitting helpers, and a command-line interface.
"""

from .core import (
    ConfigError,
    DriveSpec,
    EngineConfig,
    EnsembleSpec,
    InitialState,
    ModelParams,
    NumericsError,
    NumericsSpec,
    OttoError,
    ReservoirSpec,
    TimeGrid,
    load_config,
    validate_config,
)
from .analytical import analytical_report, analytical_sweep
from .ensemble import EnsembleStats, run_ensemble
from .solver import simulate_trajectory

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DriveSpec",
    "EngineConfig",
    "EnsembleSpec",
    "EnsembleStats",
    "InitialState",
    "ModelParams",
    "NumericsError",
    "NumericsSpec",
    "OttoError",
    "ReservoirSpec",
    "TimeGrid",
    "analytical_report",
    "analytical_sweep",
    "load_config",
    "run_ensemble",
    "simulate_trajectory",
    "validate_config",
    "__version__",
]
