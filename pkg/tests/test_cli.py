"""Command line interface: exit codes, file layouts, manifests, replay."""

import json

import numpy as np
import pytest
import yaml

from ottomech.cli import main


BASE_CONFIG = {
    "system": {"omega_b": 0.5, "g0": 0.012, "q_b": 300},
    "hot_reservoir": {
        "kind": "lorentzian", "omega_center": 1.04,
        "temperature": 0.56, "width": 0.031, "coupling": 0.007,
    },
    "cold_reservoir": {
        "kind": "lorentzian", "omega_center": 0.964,
        "temperature": 0.11, "width": 0.025, "coupling": 0.0082,
    },
    "drive": {"delta_omega_a": 0.139, "phase": 0.0},
    "grid": {"dt": 0.05, "n_steps": 2400},
    "ensemble": {"n_trajectories": 6, "base_seed": 11, "batch_size": 3,
                 "workers": 1},
    "numerics": {"window_steps": 400},
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "engine.yaml"
    path.write_text(yaml.safe_dump(BASE_CONFIG))
    return path


@pytest.fixture
def sharp_config_path(tmp_path):
    """Step-band variant; the closed-form verb only accepts this kind."""
    raw = dict(BASE_CONFIG)
    raw["hot_reservoir"] = {"kind": "step", "omega_center": 1.03,
                            "temperature": 0.56, "width": 0.04,
                            "coupling": 0.022}
    raw["cold_reservoir"] = {"kind": "step", "omega_center": 0.97,
                             "temperature": 0.11, "width": 0.04,
                             "coupling": 0.022}
    raw["system"] = {"omega_b": 0.05, "g0": 0.01, "q_b": 300}
    path = tmp_path / "sharp.yaml"
    path.write_text(yaml.safe_dump(raw))
    return path


def header_of(path):
    return path.read_text().splitlines()[0]


def test_analytical_sweep_outputs(sharp_config_path, tmp_path):
    out = tmp_path / "an"
    code = main(["analytical", "--config", str(sharp_config_path), "--out",
                 str(out), "--axis", "delta_omega_a", "--values",
                 "0.1,0.139,0.2"])
    assert code == 0
    assert header_of(out / "sweep.csv").startswith(
        "delta_omega_a,tau_h,tau_c,omega_bar_h")
    assert len((out / "sweep.csv").read_text().splitlines()) == 4
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["verb"] == "analytical"
    assert manifest["outputs"]["sweep"] == "sweep.csv"


def test_simulate_outputs_and_overrides(config_path, tmp_path):
    out = tmp_path / "sim"
    code = main(["simulate", "--config", str(config_path), "--out", str(out),
                 "--trajectories", "3", "--seed", "42"])
    assert code == 0
    assert header_of(out / "stats.csv") == "t,mean_n_a,mean_n_b,var_n_b"
    assert header_of(out / "terminal.csv") == "trajectory,terminal_n_b"
    lines = (out / "terminal.csv").read_text().splitlines()
    assert len(lines) == 4  # header plus the overridden trajectory count
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["ensemble"]["n_trajectories"] == 3
    assert manifest["config"]["ensemble"]["base_seed"] == 42
    assert manifest["metrics"]["n_trajectories"] == 3
    # one transition fewer than grid points, per trajectory
    assert manifest["metrics"]["total_steps"] == 3 * 2399


def test_outdir_with_manifest_is_refused(config_path, tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(config_path), "--out",
                 str(out), "--trajectories", "1"]) == 0
    assert main(["simulate", "--config", str(config_path), "--out",
                 str(out), "--trajectories", "1"]) == 2


def test_bad_invocations_exit_two(config_path, tmp_path):
    out = tmp_path / "x"
    assert main(["simulate", "--config", str(tmp_path / "nope.yaml"),
                 "--out", str(out)]) == 2
    assert main(["analytical", "--config", str(config_path), "--out",
                 str(out), "--axis", "bogus", "--values", "1"]) == 2
    assert main(["analytical", "--config", str(config_path), "--out",
                 str(out), "--axis", "omega_b"]) == 2  # no values or range
    assert main(["analytical", "--config", str(config_path), "--out",
                 str(out), "--axis", "omega_b", "--values", "0.5",
                 "--start", "0.1", "--stop", "0.2"]) == 2
    assert main(["decay-sweep", "--config", str(config_path), "--out",
                 str(out), "--q-values", "-5"]) == 2
    assert main(["--help"]) == 0


def test_analytical_requires_drive_section(config_path, tmp_path):
    raw = dict(BASE_CONFIG)
    raw = {k: v for k, v in raw.items() if k != "drive"}
    nodrive = tmp_path / "nodrive.yaml"
    nodrive.write_text(yaml.safe_dump(raw))
    assert main(["analytical", "--config", str(nodrive), "--out",
                 str(tmp_path / "nd"), "--axis", "omega_b", "--values",
                 "0.5"]) == 2


def test_manifest_replay_is_bitwise(config_path, tmp_path):
    first = tmp_path / "first"
    assert main(["simulate", "--config", str(config_path), "--out",
                 str(first), "--trajectories", "4"]) == 0
    manifest = json.loads((first / "manifest.json").read_text())
    replay_cfg = tmp_path / "replay.yaml"
    replay_cfg.write_text(yaml.safe_dump(manifest["config"]))
    second = tmp_path / "second"
    assert main(["simulate", "--config", str(replay_cfg), "--out",
                 str(second)]) == 0
    assert (first / "stats.csv").read_bytes() == (
        second / "stats.csv").read_bytes()
    assert (first / "terminal.csv").read_bytes() == (
        second / "terminal.csv").read_bytes()


def test_worker_count_does_not_change_results(config_path, tmp_path):
    one = tmp_path / "w1"
    two = tmp_path / "w2"
    assert main(["simulate", "--config", str(config_path), "--out",
                 str(one), "--workers", "1"]) == 0
    assert main(["simulate", "--config", str(config_path), "--out",
                 str(two), "--workers", "2"]) == 0
    assert (one / "stats.csv").read_bytes() == (two / "stats.csv").read_bytes()


def test_env_override_reaches_the_run(config_path, tmp_path, monkeypatch):
    monkeypatch.setenv("OTTOMECH_GRID__N_STEPS", "600")
    out = tmp_path / "env"
    assert main(["simulate", "--config", str(config_path), "--out",
                 str(out), "--trajectories", "2"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["grid"]["n_steps"] == 600
    assert len((out / "stats.csv").read_text().splitlines()) == 601


def test_decay_sweep_row_per_quality_factor(config_path, tmp_path):
    out = tmp_path / "decay"
    code = main(["decay-sweep", "--config", str(config_path), "--out",
                 str(out), "--q-values", "300"])
    assert code == 0
    lines = (out / "decay.csv").read_text().splitlines()
    assert lines[0] == "q_b,n_ss,n_coh,power,eta"
    assert len(lines) == 2
    assert float(lines[1].split(",")[0]) == 300.0


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_numeric_failure_exits_three(config_path, tmp_path, monkeypatch):
    # an absurd reservoir coupling makes the integration diverge
    monkeypatch.setenv("OTTOMECH_HOT_RESERVOIR__COUPLING", "10000")
    out = tmp_path / "boom"
    code = main(["simulate", "--config", str(config_path), "--out",
                 str(out), "--trajectories", "1"])
    assert code == 3


def test_param_sweep_pairs_model_and_simulation(config_path, tmp_path):
    out = tmp_path / "ps"
    code = main(["param-sweep", "--config", str(config_path), "--out",
                 str(out), "--axis", "delta_omega_a", "--values",
                 "0.1,0.139"])
    assert code == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "delta_omega_a,power_analytical,power_quasiclassical"
    assert len(lines) == 3


def test_fluctuations_outputs(config_path, tmp_path):
    out = tmp_path / "fluc"
    code = main(["fluctuations", "--config", str(config_path), "--out",
                 str(out), "--traces", "3"])
    assert code == 0
    assert header_of(out / "traces.csv") == "t,n_b_000,n_b_001,n_b_002"
    assert header_of(out / "histogram.csv") == "bin_left,bin_right,count"
    report = json.loads((out / "report.json").read_text())
    assert "fano" in report
    assert report["n_trajectories"] == 6


def test_spectra_and_kernel_dumps(config_path, tmp_path):
    sp = tmp_path / "spectra"
    code = main(["spectra", "dump", "--config", str(config_path), "--out",
                 str(sp), "--num", "101", "--wmax", "2.0"])
    assert code == 0
    lines = (sp / "spectra.csv").read_text().splitlines()
    assert lines[0] == "omega,j_hot,s_hot,j_cold,s_cold"
    assert len(lines) == 102
    kn = tmp_path / "kernel"
    assert main(["kernel", "dump", "--config", str(config_path), "--out",
                 str(kn)]) == 0
    lines = (kn / "kernel_hot.csv").read_text().splitlines()
    assert lines[0] == "t,kappa"
    assert len(lines) == 402  # forced window of 400 steps plus t = 0 row
    assert header_of(kn / "kernel_cold.csv") == "t,kappa"


def test_analyze_round_trip(config_path, tmp_path):
    run = tmp_path / "run"
    assert main(["simulate", "--config", str(config_path), "--out",
                 str(run)]) == 0
    out = tmp_path / "report"
    assert main(["analyze", "--run", str(run), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["n_ss"] is not None
    assert report["fano"] is not None
    assert header_of(out / "extrema.csv") == "cycle,maximum,minimum"
    # terminal histogram bins scale with the square root of the samples
    assert len((out / "histogram.csv").read_text().splitlines()) >= 2


def test_analyze_needs_a_manifest(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["analyze", "--run", str(empty), "--out",
                 str(tmp_path / "r")]) == 2


def test_noise_selftest_passes(config_path, tmp_path):
    out = tmp_path / "noise"
    code = main(["noise", "selftest", "--config", str(config_path), "--out",
                 str(out)])
    assert code == 0
    assert header_of(out / "psd_hot.csv") == "omega,theory,estimate"
    assert header_of(out / "psd_cold.csv") == "omega,theory,estimate"
    report = json.loads((out / "report.json").read_text())
    for name in ("hot", "cold"):
        assert report[name]["pass"]
        assert report[name]["psd_l2_error"] < 0.15
        assert report[name]["variance_rel_error"] < 0.08
