"""Figures of merit extracted from ensemble statistics.

Power from occupation growth or from the damped steady state, the
thermal/coherent split of the mechanical occupation, per-cycle swings of the
optical occupation, an efficiency estimate, and the Fano factor of terminal
occupation samples.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.optimize import curve_fit

from .core import NumericsError
from .spectra import weighted_mech_thermal_occupation


def _mech_period(omega_b):
    if omega_b <= 0:
        raise ValueError("mechanical frequency must be positive")
    return 2.0 * math.pi / omega_b


def _fit_window(stats, omega_b, transient, min_periods):
    """Times and mean_n_b past the transient, with the horizon precondition."""
    period = _mech_period(omega_b)
    if transient is None:
        transient = 2.0 * period
    t = stats.grid.times()
    span = t[-1] - t[0]
    if span <= transient + min_periods * period:
        raise ValueError(
            f"window too short: horizon {span:.6g} needs more than "
            f"{min_periods} mechanical periods after the transient {transient:.6g}"
        )
    mask = (t - t[0]) > transient
    return t[mask], stats.mean_n_b[mask]


def fit_linear_growth(stats, omega_b, transient=None):
    """Least-squares line on mean_n_b after the transient.

    Returns (slope, power) with power = omega_b * slope.  Exact on affine
    input up to floating point.
    """
    t, y = _fit_window(stats, omega_b, transient, min_periods=5)
    slope, _ = np.polyfit(t, y, 1)
    return slope, omega_b * slope


@dataclasses.dataclass(frozen=True)
class SaturationFit:
    """Exponential-approach fit n(t) = n_ss - (n_ss - n0) e^{-rate t}.

    Time is measured from the start of the fit window, so n0 is the fitted
    occupation at the transient boundary.
    """

    n_ss: float
    rate: float
    n0: float
    residual_rms: float


def fit_exponential_saturation(stats, omega_b, transient=None):
    t, y = _fit_window(stats, omega_b, transient, min_periods=5)
    tl = t - t[0]
    span = tl[-1]
    n0_guess = float(y[0])
    nss_guess = float(y[-1])
    gap = abs(n0_guess - nss_guess)
    rate_guess = 1.0 / span
    if gap > 0:
        # first crossing of the 1/e level sets the rate scale
        crossed = np.nonzero(np.abs(y - nss_guess) <= gap / math.e)[0]
        if len(crossed) and tl[crossed[0]] > 0:
            rate_guess = 1.0 / tl[crossed[0]]

    def model(tt, n_ss, n0, rate):
        return n_ss - (n_ss - n0) * np.exp(-rate * tt)

    guesses = (nss_guess, n0_guess, rate_guess)
    try:
        popt, _ = curve_fit(
            model, tl, y, p0=guesses,
            bounds=([-np.inf, -np.inf, 0.0], [np.inf, np.inf, np.inf]),
            maxfev=20000,
        )
    except RuntimeError as exc:
        raise NumericsError(
            "exponential saturation fit did not converge "
            f"(initial guesses n_ss={nss_guess:.6g}, n0={n0_guess:.6g}, "
            f"rate={rate_guess:.6g}): {exc}"
        ) from exc
    n_ss, n0, rate = (float(v) for v in popt)
    if rate * span < 0.1:
        # a near-linear ramp collapses onto the degenerate ridge r -> 0
        raise NumericsError(
            f"saturation not resolved in the fit window: fitted rate {rate:.6g} "
            f"times span {span:.6g} is below 0.1 "
            f"(initial guesses n_ss={nss_guess:.6g}, n0={n0_guess:.6g}, "
            f"rate={rate_guess:.6g})"
        )
    residual = float(np.sqrt(np.mean((model(tl, *popt) - y) ** 2)))
    return SaturationFit(n_ss=n_ss, rate=rate, n0=n0, residual_rms=residual)


@dataclasses.dataclass(frozen=True)
class ExtractedPower:
    """Steady-state power split into coherent occupation times damping.

    A negative coherent occupation is reported as-is with operating False,
    never clamped.
    """

    n_b_coherent: float
    power: float
    thermal_occupation: float
    operating: bool


def extracted_power(n_ss, params, hot, cold):
    """Power drawn from the damped mechanical mode at steady state."""
    if params.gamma_b <= 0:
        raise ValueError("extracted power needs a damped mechanical mode")
    n_th = weighted_mech_thermal_occupation(params.omega_b, hot, cold)
    n_coh = n_ss - n_th
    power = params.gamma_b * n_coh * params.omega_b
    return ExtractedPower(
        n_b_coherent=n_coh,
        power=power,
        thermal_occupation=n_th,
        operating=n_coh >= 0.0,
    )


def cycle_extrema(stats, omega_b, transient=None):
    """Per-cycle max/min of mean_n_a after the transient.

    Windows are one mechanical period long and anchored at whole-period
    boundaries of the grid origin, where the deterministic mechanical phase
    recurs.  Returns (delta_n_cycle, extrema) with extrema[:, 0] the maxima
    and extrema[:, 1] the minima.
    """
    period = _mech_period(omega_b)
    if transient is None:
        transient = 2.0 * period
    t = stats.grid.times()
    anchor = t[0] + math.ceil(transient / period - 1e-12) * period
    n_windows = int(math.floor((t[-1] - anchor) / period + 1e-12))
    if n_windows < 5:
        raise ValueError(
            f"too few cycles: {n_windows} complete mechanical periods after "
            "the transient, need at least 5"
        )
    edges = np.searchsorted(t, anchor + period * np.arange(n_windows + 1) - 1e-9 * period)
    maxima = np.empty(n_windows)
    minima = np.empty(n_windows)
    for j in range(n_windows):
        seg = stats.mean_n_a[edges[j]:edges[j + 1]]
        maxima[j] = seg.max()
        minima[j] = seg.min()
    delta = float(np.mean(maxima - minima))
    return delta, np.column_stack([maxima, minima])


def efficiency_estimate(power, delta_n_cycle, hot, omega_b):
    """Work per cycle over heat drawn per cycle.

    Work is power times the mechanical period; heat per cycle is the
    hot-side photon energy times the per-cycle occupation swing.
    """
    if delta_n_cycle <= 0:
        raise ValueError("efficiency undefined for zero per-cycle swing")
    work_per_cycle = power * _mech_period(omega_b)
    heat_per_cycle = hot.omega_center * delta_n_cycle
    return work_per_cycle / heat_per_cycle


def fano_factor(samples):
    """Unbiased sample variance over sample mean."""
    arr = np.asarray(samples, dtype=float)
    if arr.size < 2:
        raise ValueError("Fano factor needs at least two samples")
    mean = arr.mean()
    if mean <= 0:
        raise ValueError("Fano factor undefined for nonpositive mean")
    return float(arr.var(ddof=1) / mean)


@dataclasses.dataclass(frozen=True)
class PerformanceReport:
    """Scalar figures of merit for one ensemble run.

    Fields that do not apply to the run mode (undamped vs damped) are None.
    """

    power_growth: float | None
    n_ss: float | None
    rate: float | None
    fit_residual_rms: float | None
    n_b_coherent: float | None
    power_extracted: float | None
    thermal_occupation: float | None
    operating: bool | None
    delta_n_cycle: float | None
    eta: float | None
    fano: float | None

    def to_dict(self):
        return dataclasses.asdict(self)


def build_performance_report(stats, params, hot, cold, transient=None):
    """Compose the full report from ensemble statistics.

    Damped runs get the saturation fit and extracted power; undamped runs get
    the growth power.  The efficiency uses whichever power the run mode
    defines.
    """
    omega_b = params.omega_b
    power_growth = n_ss = rate = residual = None
    n_coh = power_ext = n_th = None
    operating = None
    if params.gamma_b > 0:
        fit = fit_exponential_saturation(stats, omega_b, transient)
        n_ss, rate, residual = fit.n_ss, fit.rate, fit.residual_rms
        ext = extracted_power(fit.n_ss, params, hot, cold)
        n_coh, power_ext, n_th = ext.n_b_coherent, ext.power, ext.thermal_occupation
        operating = ext.operating
        power_for_eta = power_ext
    else:
        _, power_growth = fit_linear_growth(stats, omega_b, transient)
        power_for_eta = power_growth
    try:
        delta, _ = cycle_extrema(stats, omega_b, transient)
    except ValueError:
        delta = None
    eta = None
    if delta is not None and delta > 0:
        eta = efficiency_estimate(power_for_eta, delta, hot, omega_b)
    try:
        fano = fano_factor(stats.terminal_n_b)
    except ValueError:
        fano = None
    return PerformanceReport(
        power_growth=power_growth,
        n_ss=n_ss,
        rate=rate,
        fit_residual_rms=residual,
        n_b_coherent=n_coh,
        power_extracted=power_ext,
        thermal_occupation=n_th,
        operating=operating,
        delta_n_cycle=delta,
        eta=eta,
        fano=fano,
    )
