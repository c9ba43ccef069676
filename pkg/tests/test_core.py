"""Configuration model: validation, serialization, environment overrides."""

import math

import numpy as np
import pytest

from ottomech.core import (
    ConfigError,
    DriveSpec,
    EnsembleSpec,
    InitialState,
    ModelParams,
    NumericsSpec,
    ReservoirSpec,
    TimeGrid,
    Trajectory,
    apply_env_overrides,
    config_from_dict,
    config_to_dict,
    gamma_from_q,
    load_config,
    save_config,
    validate_config,
)


def minimal_raw():
    return {
        "system": {"omega_b": 0.048, "g0": 0.012, "q_b": 2250},
        "hot_reservoir": {
            "kind": "lorentzian", "omega_center": 1.04,
            "temperature": 0.56, "width": 0.031, "coupling": 0.007,
        },
        "cold_reservoir": {
            "kind": "lorentzian", "omega_center": 0.964,
            "temperature": 0.11, "width": 0.025, "coupling": 0.0082,
        },
        "grid": {"dt": 0.05, "n_steps": 2000},
    }


def test_params_reject_bad_values():
    with pytest.raises(ConfigError):
        ModelParams(omega_b=-0.1, g0=0.01)
    with pytest.raises(ConfigError):
        ModelParams(omega_b=0.05, g0=-1e-3)
    with pytest.raises(ConfigError):
        ModelParams(omega_b=0.05, g0=0.01, gamma_b=-1e-9)
    with pytest.raises(ConfigError):
        ModelParams(omega_b=0.05, g0=0.01, omega_a0=0.0)


def test_quality_factor_roundtrip():
    p = ModelParams(omega_b=0.048, g0=0.012, gamma_b=gamma_from_q(0.048, 2250.0))
    assert p.q_b == pytest.approx(2250.0, rel=1e-15)
    assert ModelParams(omega_b=0.048, g0=0.012).q_b == math.inf
    with pytest.raises(ConfigError):
        gamma_from_q(0.048, 0.0)


def test_reservoir_validation():
    with pytest.raises(ConfigError):
        ReservoirSpec(kind="gaussian", omega_center=1.0, temperature=0.5,
                      width=0.04, coupling=0.02)
    with pytest.raises(ConfigError):
        ReservoirSpec.step(omega_center=1.0, temperature=-0.5, width=0.04,
                           coupling=0.02)
    with pytest.raises(ConfigError):
        ReservoirSpec.step(omega_center=1.0, temperature=0.5, width=0.0,
                           coupling=0.02)
    r = ReservoirSpec.lorentzian(omega_center=1.04, temperature=0.56,
                                 width=0.031, coupling=0.007)
    with pytest.raises(ConfigError):
        r.require_kind("step")


def test_drive_and_grid_validation():
    with pytest.raises(ConfigError):
        DriveSpec(delta_omega_a=-0.1)
    with pytest.raises(ConfigError):
        TimeGrid(dt=0.0, n_steps=100)
    with pytest.raises(ConfigError):
        TimeGrid(dt=0.05, n_steps=1)
    g = TimeGrid(dt=0.05, n_steps=2001)
    assert g.t_total == pytest.approx(100.0)
    t = g.times()
    assert t.shape == (2001,)
    assert t[0] == 0.0
    assert t[-1] == pytest.approx(100.0)


def test_initial_state_amplitudes():
    init = InitialState(n_a0=0.5, n_b0=39.0)
    assert abs(init.alpha0()) ** 2 == pytest.approx(0.5, rel=1e-15)
    assert abs(init.beta0()) ** 2 == pytest.approx(39.0, rel=1e-15)
    with pytest.raises(ConfigError):
        InitialState(n_a0=-0.1)


def test_ensemble_and_numerics_validation():
    with pytest.raises(ConfigError):
        EnsembleSpec(n_trajectories=0)
    with pytest.raises(ConfigError):
        EnsembleSpec(base_seed=-1)
    with pytest.raises(ConfigError):
        EnsembleSpec(batch_size=0)
    with pytest.raises(ConfigError):
        NumericsSpec(eps_tail=0.0)
    with pytest.raises(ConfigError):
        NumericsSpec(noise_dtype="float16")
    with pytest.raises(ConfigError):
        NumericsSpec(window_steps=0)


def test_validate_config_flags_bad_ordering():
    params = ModelParams(omega_b=0.05, g0=0.01)
    hot = ReservoirSpec.step(omega_center=0.9, temperature=0.56, width=0.04,
                             coupling=0.022)
    cold = ReservoirSpec.step(omega_center=0.97, temperature=0.11, width=0.04,
                              coupling=0.022)
    report = validate_config(params, (hot, cold), TimeGrid(dt=0.05, n_steps=100))
    assert not report.ok
    assert any("ordering" in v for v in report.violations)


def test_validate_config_flags_mixed_kinds_and_coarse_dt():
    params = ModelParams(omega_b=0.05, g0=0.01)
    hot = ReservoirSpec.step(omega_center=1.03, temperature=0.56, width=0.04,
                             coupling=0.022)
    cold = ReservoirSpec.lorentzian(omega_center=0.97, temperature=0.11,
                                    width=0.025, coupling=0.0082)
    report = validate_config(params, (hot, cold), TimeGrid(dt=1.0, n_steps=100))
    assert any("mixed" in v for v in report.violations)
    assert report.warnings  # dt = 1.0 under-resolves the optical period


def test_config_roundtrip_through_dict():
    cfg = config_from_dict(minimal_raw())
    assert cfg.params.gamma_b == pytest.approx(0.048 / (2 * 2250), rel=1e-15)
    again = config_from_dict(config_to_dict(cfg))
    assert again == cfg


def test_config_gamma_q_exclusive():
    raw = minimal_raw()
    raw["system"]["gamma_b"] = 1e-5
    with pytest.raises(ConfigError, match="not both"):
        config_from_dict(raw)


def test_config_steps_total_exclusive():
    raw = minimal_raw()
    raw["grid"]["t_total"] = 100.0
    with pytest.raises(ConfigError, match="not both"):
        config_from_dict(raw)
    raw = minimal_raw()
    del raw["grid"]["n_steps"]
    with pytest.raises(ConfigError, match="n_steps or t_total"):
        config_from_dict(raw)


def test_config_t_total_sets_step_count():
    raw = minimal_raw()
    del raw["grid"]["n_steps"]
    raw["grid"]["t_total"] = 100.0
    cfg = config_from_dict(raw)
    assert cfg.grid.n_steps == 2001
    assert cfg.grid.t_total == pytest.approx(100.0)


def test_config_rejects_unknown_keys():
    raw = minimal_raw()
    raw["system"]["omega_q"] = 1.0
    with pytest.raises(ConfigError, match="unknown keys"):
        config_from_dict(raw)
    raw = minimal_raw()
    raw["wrong_section"] = {}
    with pytest.raises(ConfigError, match="unknown config sections"):
        config_from_dict(raw)
    raw = minimal_raw()
    del raw["hot_reservoir"]["width"]
    with pytest.raises(ConfigError, match="missing key"):
        config_from_dict(raw)


def test_config_numerics_window_steps_key():
    raw = minimal_raw()
    raw["numerics"] = {"window_steps": 1500, "eps_tail": 1e-5}
    cfg = config_from_dict(raw)
    assert cfg.numerics.window_steps == 1500
    assert cfg.numerics.eps_tail == pytest.approx(1e-5)


def test_env_overrides_are_typed():
    raw = minimal_raw()
    env = {
        "OTTOMECH_SYSTEM__OMEGA_B": "0.05",
        "OTTOMECH_GRID__N_STEPS": "400",
        "OTTOMECH_ENSEMBLE__N_TRAJECTORIES": "3",
        "HOME": "/root",
    }
    raw = apply_env_overrides(raw, environ=env)
    cfg = config_from_dict(raw)
    assert cfg.params.omega_b == 0.05
    assert cfg.grid.n_steps == 400
    assert cfg.ensemble.n_trajectories == 3


def test_env_override_bad_name_rejected():
    with pytest.raises(ConfigError, match="SECTION__KEY"):
        apply_env_overrides(minimal_raw(), environ={"OTTOMECH_OMEGA_B": "1"})


def test_load_and_save_config(tmp_path):
    cfg = config_from_dict(minimal_raw())
    path = tmp_path / "cfg.yaml"
    save_config(cfg, path)
    assert load_config(path, env_overrides=False) == cfg
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.yaml")
    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    with pytest.raises(ConfigError, match="empty"):
        load_config(empty)


def test_trajectory_occupations_match_amplitudes():
    grid = TimeGrid(dt=0.1, n_steps=4)
    alpha = np.array([1 + 0j, 0.5 + 0.5j, 0.1 - 0.2j, 2j])
    beta = np.array([3 + 0j, 1 + 1j, 0j, 1 - 1j])
    traj = Trajectory(grid=grid, alpha=alpha, beta=beta, seed=7)
    n_a, n_b = traj.occupations()
    assert np.array_equal(n_a, alpha.real**2 + alpha.imag**2)
    assert np.array_equal(n_b, beta.real**2 + beta.imag**2)
