"""Command-line interface.

Verbs map configuration files onto the closed-form sweeps, ensemble runs,
damping and parameter sweeps, fluctuation studies, and post-hoc analysis,
writing plot-ready CSV tables, JSON scalar reports, and a run manifest per
output directory.  Exit codes: 0 success, 2 configuration or usage error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    build_performance_report,
    cycle_extrema,
    efficiency_estimate,
    extracted_power,
    fano_factor,
    fit_exponential_saturation,
    fit_linear_growth,
)
from .analytical import SWEEP_AXES, analytical_report, analytical_sweep, apply_axis
from .core import (
    STEP,
    ConfigError,
    NumericsError,
    TimeGrid,
    config_from_dict,
    config_to_dict,
    gamma_from_q,
    load_config,
)
from .ensemble import EnsembleStats, run_ensemble, trajectory_traces
from .kernel import tabulate_kernel
from .noise import build_filter, noise_streams, sample_noise, welch_psd
from .solver import build_setup
from .spectra import noise_psd, spectral_density

MANIFEST_NAME = "manifest.json"


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _prepare_outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if (out / MANIFEST_NAME).exists():
        raise ConfigError(
            f"output directory {out} already holds a run manifest; "
            "choose a fresh directory"
        )
    return out


def write_manifest(outdir, verb, config_dict, base_seed, metrics, outputs):
    manifest = {
        "verb": verb,
        "code_version": __version__,
        "base_seed": base_seed,
        "config": config_dict,
        "metrics": metrics,
        "outputs": outputs,
    }
    (outdir / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )


def _load_config(args, need_drive=False):
    cfg = load_config(args.config)
    ens = cfg.ensemble
    if getattr(args, "trajectories", None) is not None:
        ens = dataclasses.replace(ens, n_trajectories=args.trajectories)
    if getattr(args, "seed", None) is not None:
        ens = dataclasses.replace(ens, base_seed=args.seed)
    if getattr(args, "workers", None) is not None:
        ens = dataclasses.replace(ens, workers=args.workers)
    cfg = dataclasses.replace(cfg, ensemble=ens)
    if need_drive and cfg.drive is None:
        raise ConfigError("this verb needs a drive section in the configuration")
    return cfg


def _axis_values(args):
    if args.values is not None:
        if args.start is not None or args.stop is not None:
            raise ConfigError("give either --values or --start/--stop/--num, not both")
        vals = [float(v) for v in args.values.split(",") if v.strip() != ""]
    else:
        if args.start is None or args.stop is None:
            raise ConfigError("need --values or both --start and --stop")
        vals = np.linspace(args.start, args.stop, args.num).tolist()
    if not vals:
        raise ConfigError("empty sweep range")
    return vals


def _stats_rows(stats):
    t = stats.grid.times()
    for k in range(stats.grid.n_steps):
        yield (t[k], stats.mean_n_a[k], stats.mean_n_b[k], stats.var_n_b[k])


def _write_ensemble_outputs(outdir, stats):
    write_csv(outdir / "stats.csv", ["t", "mean_n_a", "mean_n_b", "var_n_b"],
              _stats_rows(stats))
    write_csv(outdir / "terminal.csv", ["trajectory", "terminal_n_b"],
              ((i, v) for i, v in enumerate(stats.terminal_n_b)))
    return {"stats": "stats.csv", "terminal": "terminal.csv"}


def _histogram_rows(samples):
    nbins = max(1, round(math.sqrt(len(samples))))
    counts, edges = np.histogram(samples, bins=nbins)
    for j in range(nbins):
        yield (edges[j], edges[j + 1], int(counts[j]))


def cmd_analytical(args):
    cfg = _load_config(args, need_drive=True)
    values = _axis_values(args)
    started = time.perf_counter()
    rows = analytical_sweep(cfg.params, cfg.drive, cfg.hot, cfg.cold,
                            args.axis, values)
    outdir = _prepare_outdir(args)
    header = [args.axis] + [name for name, _ in rows[0][1].scalar_fields()]
    write_csv(outdir / "sweep.csv", header,
              ([v] + [val for _, val in rep.scalar_fields()] for v, rep in rows))
    write_manifest(outdir, "analytical", config_to_dict(cfg), cfg.ensemble.base_seed,
                   {"n_points": len(rows),
                    "wall_time_s": round(time.perf_counter() - started, 3)},
                   {"sweep": "sweep.csv"})
    print(f"analytical sweep over {args.axis}: {len(rows)} rows -> {outdir / 'sweep.csv'}")
    return 0


def cmd_simulate(args):
    cfg = _load_config(args)
    outdir = _prepare_outdir(args)
    started = time.perf_counter()
    stats = run_ensemble(cfg)
    outputs = _write_ensemble_outputs(outdir, stats)
    metrics = {
        "n_trajectories": stats.n_trajectories,
        "steps_per_trajectory": cfg.grid.n_steps - 1,
        "total_steps": stats.n_trajectories * (cfg.grid.n_steps - 1),
        "wall_time_s": round(time.perf_counter() - started, 3),
    }
    write_manifest(outdir, "simulate", config_to_dict(cfg), stats.base_seed,
                   metrics, outputs)
    print(f"simulated {stats.n_trajectories} trajectories -> {outdir / 'stats.csv'}")
    return 0


def cmd_decay_sweep(args):
    cfg = _load_config(args)
    qs = [float(v) for v in args.q_values.split(",") if v.strip() != ""]
    if not qs:
        raise ConfigError("empty quality-factor list")
    if any(q <= 0 for q in qs):
        raise ConfigError("quality factors must be positive")
    outdir = _prepare_outdir(args)
    started = time.perf_counter()
    setup0 = build_setup(cfg.params, cfg.hot, cfg.cold, cfg.grid,
                         cfg.initial, cfg.numerics)
    rows = []
    for q in qs:
        params_q = dataclasses.replace(
            cfg.params, gamma_b=gamma_from_q(cfg.params.omega_b, q))
        cfg_q = dataclasses.replace(cfg, params=params_q)
        stats = run_ensemble(cfg_q, setup=dataclasses.replace(setup0, params=params_q))
        fit = fit_exponential_saturation(stats, params_q.omega_b, args.transient)
        ext = extracted_power(fit.n_ss, params_q, cfg.hot, cfg.cold)
        delta, _ = cycle_extrema(stats, params_q.omega_b, args.transient)
        eta = (efficiency_estimate(ext.power, delta, cfg.hot, params_q.omega_b)
               if delta > 0 else math.nan)
        rows.append((q, fit.n_ss, ext.n_b_coherent, ext.power, eta))
    write_csv(outdir / "decay.csv", ["q_b", "n_ss", "n_coh", "power", "eta"], rows)
    write_manifest(outdir, "decay-sweep", config_to_dict(cfg), cfg.ensemble.base_seed,
                   {"n_points": len(rows),
                    "wall_time_s": round(time.perf_counter() - started, 3)},
                   {"decay": "decay.csv"})
    print(f"decay sweep over {len(rows)} quality factors -> {outdir / 'decay.csv'}")
    return 0


def _sharp_band_view(res):
    """Closed-form counterpart of a peaked reservoir.

    The analytic cycle model wants sharp band edges; reuse the center,
    temperature, width, and coupling numbers unchanged.
    """
    if res.kind == STEP:
        return res
    return dataclasses.replace(res, kind=STEP)


def cmd_param_sweep(args):
    cfg = _load_config(args, need_drive=True)
    values = _axis_values(args)
    outdir = _prepare_outdir(args)
    started = time.perf_counter()
    # kernels and noise filters survive drive and mechanical-frequency changes
    reusable = args.axis in ("omega_b", "delta_omega_a")
    setup0 = None
    if reusable:
        setup0 = build_setup(cfg.params, cfg.hot, cfg.cold, cfg.grid,
                             cfg.initial, cfg.numerics)
    rows = []
    for v in values:
        p, d, h, c = apply_axis(cfg.params, cfg.drive, cfg.hot, cfg.cold,
                                args.axis, v)
        p_analytic = analytical_report(
            p, d, _sharp_band_view(h), _sharp_band_view(c)).power
        cfg_v = dataclasses.replace(cfg, params=p, drive=d, hot=h, cold=c)
        if reusable:
            setup = dataclasses.replace(setup0, params=p)
        else:
            setup = build_setup(p, h, c, cfg.grid, cfg.initial, cfg.numerics)
        stats = run_ensemble(cfg_v, setup=setup)
        _, p_quasi = fit_linear_growth(stats, p.omega_b, args.transient)
        rows.append((v, p_analytic, p_quasi))
    write_csv(outdir / "sweep.csv",
              [args.axis, "power_analytical", "power_quasiclassical"], rows)
    write_manifest(outdir, "param-sweep", config_to_dict(cfg), cfg.ensemble.base_seed,
                   {"n_points": len(rows),
                    "wall_time_s": round(time.perf_counter() - started, 3)},
                   {"sweep": "sweep.csv"})
    print(f"parameter sweep over {args.axis}: {len(rows)} rows -> {outdir / 'sweep.csv'}")
    return 0


def cmd_fluctuations(args):
    cfg = _load_config(args)
    outdir = _prepare_outdir(args)
    started = time.perf_counter()
    setup = build_setup(cfg.params, cfg.hot, cfg.cold, cfg.grid,
                        cfg.initial, cfg.numerics)
    stats = run_ensemble(cfg, setup=setup)
    outputs = _write_ensemble_outputs(outdir, stats)
    n_traces = min(args.traces, stats.n_trajectories)
    traces = trajectory_traces(setup, stats.base_seed, np.arange(n_traces))
    t = cfg.grid.times()
    trace_nb = [tr.occupations()[1] for tr in traces]
    write_csv(outdir / "traces.csv",
              ["t"] + [f"n_b_{j:03d}" for j in range(n_traces)],
              ((t[k], *(nb[k] for nb in trace_nb)) for k in range(cfg.grid.n_steps)))
    write_csv(outdir / "histogram.csv", ["bin_left", "bin_right", "count"],
              _histogram_rows(stats.terminal_n_b))
    fano = fano_factor(stats.terminal_n_b)
    report = {
        "fano": fano,
        "n_trajectories": stats.n_trajectories,
        "terminal_mean": float(np.mean(stats.terminal_n_b)),
        "terminal_variance": float(np.var(stats.terminal_n_b, ddof=1)),
    }
    (outdir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    outputs.update({"traces": "traces.csv", "histogram": "histogram.csv",
                    "report": "report.json"})
    write_manifest(outdir, "fluctuations", config_to_dict(cfg), stats.base_seed,
                   {"n_trajectories": stats.n_trajectories,
                    "n_traces": n_traces,
                    "wall_time_s": round(time.perf_counter() - started, 3)},
                   outputs)
    print(f"fluctuation study: Fano {fano:.4g} over "
          f"{stats.n_trajectories} terminal samples -> {outdir / 'report.json'}")
    return 0


def cmd_spectra_dump(args):
    cfg = load_config(args.config)
    outdir = _prepare_outdir(args)
    w = np.linspace(0.0, args.wmax, args.num)
    cols = {
        "j_hot": spectral_density(w, cfg.hot),
        "s_hot": noise_psd(w, cfg.hot),
        "j_cold": spectral_density(w, cfg.cold),
        "s_cold": noise_psd(w, cfg.cold),
    }
    write_csv(outdir / "spectra.csv", ["omega"] + list(cols),
              ((w[k], *(c[k] for c in cols.values())) for k in range(len(w))))
    write_manifest(outdir, "spectra-dump", config_to_dict(cfg),
                   cfg.ensemble.base_seed,
                   {"n_points": len(w), "omega_max": args.wmax},
                   {"spectra": "spectra.csv"})
    print(f"spectral densities on {len(w)} frequencies -> {outdir / 'spectra.csv'}")
    return 0


def cmd_kernel_dump(args):
    cfg = load_config(args.config)
    outdir = _prepare_outdir(args)
    started = time.perf_counter()
    outputs = {}
    windows = {}
    for name, res in (("hot", cfg.hot), ("cold", cfg.cold)):
        table = tabulate_kernel(res, cfg.grid, cfg.numerics.eps_tail,
                                cfg.numerics.window_steps)
        ts = cfg.grid.dt * np.arange(table.window + 1)
        write_csv(outdir / f"kernel_{name}.csv", ["t", "kappa"],
                  zip(ts, table.kappa))
        outputs[f"kernel_{name}"] = f"kernel_{name}.csv"
        windows[name] = table.window
    write_manifest(outdir, "kernel-dump", config_to_dict(cfg),
                   cfg.ensemble.base_seed,
                   {"window_steps": windows, "eps_tail": cfg.numerics.eps_tail,
                    "wall_time_s": round(time.perf_counter() - started, 3)},
                   outputs)
    print(f"memory kernels tabulated (hot {windows['hot']}, "
          f"cold {windows['cold']} steps) -> {outdir}")
    return 0


_SELFTEST_SAMPLES = 1 << 18
_SELFTEST_SEGMENTS = 16
_SELFTEST_REALIZATIONS = 16


def cmd_noise_selftest(args):
    cfg = load_config(args.config)
    seed = cfg.ensemble.base_seed if args.seed is None else args.seed
    outdir = _prepare_outdir(args)
    grid = TimeGrid(dt=cfg.grid.dt, n_steps=_SELFTEST_SAMPLES)
    report = {}
    outputs = {}
    failed = False
    for name, res in (("hot", cfg.hot), ("cold", cfg.cold)):
        process = build_filter(res, grid)
        # average over independent realizations: one colored series has a
        # correlation time of many samples, so single-shot moments scatter
        est_acc = None
        var_acc = 0.0
        w = None
        for r in range(_SELFTEST_REALIZATIONS):
            stream_h, stream_c = noise_streams(seed, r)
            xi = sample_noise(process, stream_h if name == "hot" else stream_c)
            w, est = welch_psd(xi, grid.dt, n_segments=_SELFTEST_SEGMENTS)
            est_acc = est if est_acc is None else est_acc + est
            var_acc += float(np.var(xi))
        est = est_acc / _SELFTEST_REALIZATIONS
        var_actual = var_acc / _SELFTEST_REALIZATIONS
        theory = noise_psd(w, res)
        norm = float(np.linalg.norm(theory))
        l2 = float(np.linalg.norm(est - theory) / norm) if norm > 0 else 0.0
        var_expected = float(np.trapezoid(theory, w))
        var_rel = abs(var_actual - var_expected) / var_expected if var_expected else 0.0
        ok = l2 < 0.15 and var_rel < 0.08
        failed = failed or not ok
        report[name] = {
            "psd_l2_error": l2,
            "variance_expected": var_expected,
            "variance_actual": var_actual,
            "variance_rel_error": var_rel,
            "pass": ok,
        }
        write_csv(outdir / f"psd_{name}.csv", ["omega", "theory", "estimate"],
                  zip(w, theory, est))
        outputs[f"psd_{name}"] = f"psd_{name}.csv"
    (outdir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    outputs["report"] = "report.json"
    write_manifest(outdir, "noise-selftest", config_to_dict(cfg), seed,
                   {"n_samples": _SELFTEST_SAMPLES,
                    "n_segments": _SELFTEST_SEGMENTS,
                    "n_realizations": _SELFTEST_REALIZATIONS}, outputs)
    for name in ("hot", "cold"):
        r = report[name]
        print(f"{name}: PSD L2 {r['psd_l2_error']:.3f}, variance "
              f"{r['variance_actual']:.4g} vs {r['variance_expected']:.4g} "
              f"-> {'ok' if r['pass'] else 'FAIL'}")
    if failed:
        raise NumericsError("synthesized noise statistics missed their targets; "
                            f"see {outdir / 'report.json'}")
    return 0


def cmd_analyze(args):
    rundir = Path(args.run)
    manifest_path = rundir / MANIFEST_NAME
    if not manifest_path.exists():
        raise ConfigError(f"no run manifest found at {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    cfg = config_from_dict(manifest["config"])
    stats_file = rundir / manifest["outputs"].get("stats", "stats.csv")
    terminal_file = rundir / manifest["outputs"].get("terminal", "terminal.csv")
    table = np.loadtxt(stats_file, delimiter=",", skiprows=1)
    if table.shape[0] != cfg.grid.n_steps:
        raise ConfigError(
            f"time series length {table.shape[0]} does not match the manifest "
            f"grid ({cfg.grid.n_steps} samples)"
        )
    terminal = np.loadtxt(terminal_file, delimiter=",", skiprows=1, ndmin=2)[:, 1]
    stats = EnsembleStats(
        grid=cfg.grid,
        mean_n_a=table[:, 1],
        mean_n_b=table[:, 2],
        var_n_b=table[:, 3],
        terminal_n_b=terminal,
        n_trajectories=len(terminal),
        base_seed=manifest["base_seed"],
    )
    outdir = _prepare_outdir(args)
    report = build_performance_report(stats, cfg.params, cfg.hot, cfg.cold,
                                      args.transient)
    (outdir / "report.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    outputs = {"report": "report.json"}
    try:
        _, extrema = cycle_extrema(stats, cfg.params.omega_b, args.transient)
    except ValueError:
        extrema = None
    if extrema is not None:
        write_csv(outdir / "extrema.csv", ["cycle", "maximum", "minimum"],
                  ((j, extrema[j, 0], extrema[j, 1]) for j in range(len(extrema))))
        outputs["extrema"] = "extrema.csv"
    write_csv(outdir / "histogram.csv", ["bin_left", "bin_right", "count"],
              _histogram_rows(stats.terminal_n_b))
    outputs["histogram"] = "histogram.csv"
    write_manifest(outdir, "analyze", manifest["config"], stats.base_seed,
                   {"source_run": str(rundir)}, outputs)
    print(f"analysis of {rundir} -> {outdir / 'report.json'}")
    return 0


def _add_common(sp, config=True, ensemble=False):
    if config:
        sp.add_argument("--config", required=True, help="YAML configuration file")
    sp.add_argument("--out", required=True, help="output directory")
    if ensemble:
        sp.add_argument("--seed", type=int, default=None, help="base seed override")
        sp.add_argument("--trajectories", type=int, default=None,
                        help="trajectory count override")
        sp.add_argument("--workers", type=int, default=None,
                        help="worker count override")


def _add_axis(sp):
    sp.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sp.add_argument("--values", default=None,
                    help="comma-separated axis values")
    sp.add_argument("--start", type=float, default=None)
    sp.add_argument("--stop", type=float, default=None)
    sp.add_argument("--num", type=int, default=41)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ottomech",
        description="Design and simulate a vibration-driven optical heat engine.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    sp = sub.add_parser("analytical", help="closed-form model sweep")
    _add_common(sp)
    _add_axis(sp)
    sp.set_defaults(func=cmd_analytical)

    sp = sub.add_parser("simulate", help="run a stochastic ensemble")
    _add_common(sp, ensemble=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("decay-sweep", help="ensemble per mechanical quality factor")
    _add_common(sp, ensemble=True)
    sp.add_argument("--q-values", required=True,
                    help="comma-separated mechanical quality factors")
    sp.add_argument("--transient", type=float, default=None,
                    help="transient to drop before fitting")
    sp.set_defaults(func=cmd_decay_sweep)

    sp = sub.add_parser("param-sweep",
                        help="closed-form and stochastic power along one axis")
    _add_common(sp, ensemble=True)
    _add_axis(sp)
    sp.add_argument("--transient", type=float, default=None)
    sp.set_defaults(func=cmd_param_sweep)

    sp = sub.add_parser("fluctuations",
                        help="per-trajectory spread and Fano factor")
    _add_common(sp, ensemble=True)
    sp.add_argument("--traces", type=int, default=20,
                    help="number of full per-trajectory series to retain")
    sp.set_defaults(func=cmd_fluctuations)

    sp = sub.add_parser("spectra", help="reservoir spectral tables")
    ss = sp.add_subparsers(dest="subverb", required=True)
    spd = ss.add_parser("dump", help="tabulate coupling density and noise PSD")
    _add_common(spd)
    spd.add_argument("--wmax", type=float, default=3.0)
    spd.add_argument("--num", type=int, default=3001)
    spd.set_defaults(func=cmd_spectra_dump)

    sp = sub.add_parser("kernel", help="memory kernel tables")
    ss = sp.add_subparsers(dest="subverb", required=True)
    spd = ss.add_parser("dump", help="tabulate the memory kernels")
    _add_common(spd)
    spd.set_defaults(func=cmd_kernel_dump)

    sp = sub.add_parser("noise", help="noise synthesis checks")
    ss = sp.add_subparsers(dest="subverb", required=True)
    spd = ss.add_parser("selftest",
                        help="compare synthesized noise statistics to theory")
    _add_common(spd)
    spd.add_argument("--seed", type=int, default=None)
    spd.set_defaults(func=cmd_noise_selftest)

    sp = sub.add_parser("analyze", help="figures of merit from a finished run")
    sp.add_argument("--run", required=True, help="directory of a simulate run")
    sp.add_argument("--out", required=True)
    sp.add_argument("--transient", type=float, default=None)
    sp.set_defaults(func=cmd_analyze)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
        return 0 if code == 0 else 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
