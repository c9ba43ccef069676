"""Shared fixtures: canonical operating points used across the test modules."""

import pytest

from ottomech.core import (
    DriveSpec,
    EngineConfig,
    EnsembleSpec,
    InitialState,
    ModelParams,
    NumericsSpec,
    ReservoirSpec,
    TimeGrid,
)


@pytest.fixture
def sharp_point():
    """Engine point with sharp-edged reservoir bands, used by the analytic model."""
    params = ModelParams(omega_b=0.05, g0=0.01, gamma_b=0.0)
    hot = ReservoirSpec.step(omega_center=1.03, temperature=0.56, width=0.04, coupling=0.022)
    cold = ReservoirSpec.step(omega_center=0.97, temperature=0.11, width=0.04, coupling=0.022)
    drive = DriveSpec(delta_omega_a=0.139, phase=0.0)
    return params, hot, cold, drive


@pytest.fixture
def smooth_point():
    # Narrowband peaked reservoirs, self-oscillating regime.
    params = ModelParams(omega_b=0.048, g0=0.012, gamma_b=0.0)
    hot = ReservoirSpec.lorentzian(omega_center=1.04, temperature=0.56, width=0.031, coupling=0.007)
    cold = ReservoirSpec.lorentzian(omega_center=0.964, temperature=0.11, width=0.025, coupling=0.0082)
    return params, hot, cold


@pytest.fixture
def smooth_config(smooth_point):
    """Full simulation config on a short grid, cheap enough for unit tests."""
    params, hot, cold = smooth_point
    return EngineConfig(
        params=params,
        hot=hot,
        cold=cold,
        drive=None,
        grid=TimeGrid(dt=0.05, n_steps=2000),
        initial=InitialState(n_a0=0.5, n_b0=39.0),
        ensemble=EnsembleSpec(n_trajectories=8, base_seed=1234, batch_size=4, workers=1),
        numerics=NumericsSpec(),
    )
