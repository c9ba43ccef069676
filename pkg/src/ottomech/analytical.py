"""Closed-form engine model for step-band reservoirs.

The optical frequency is swept as omega_a(t) = omega_a0 +
(delta_omega_a/2) sin(omega_b t + phase).  While omega_a sits inside a
reservoir's band the optical mode thermalizes toward that bath at rate
Gamma; between the bands the photon number rides the sweep unchanged.
Per-cycle energy flow follows from the time-averaged frequencies and
the steady-state occupation contrast between the two dwell windows.

The hot band lies above omega_a0 and the cold band below; cold-side
window geometry is obtained by reflecting frequencies about omega_a0,
which lands the cold dwell half a mechanical period after the hot one.
Each reservoir is assigned at most its half-lobe of the sinusoid, so
tau never exceeds half the mechanical period.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from .core import STEP, ConfigError
from .spectra import bose_einstein


@dataclass(frozen=True)
class InteractionWindow:
    """Dwell interval of the frequency sweep inside one reservoir band.

    t_in/t_out bound the dwell; the primed pair marks an overshoot
    excursion through the far band edge and is None when the sweep
    turns around inside the band.  tau is the net in-band time per
    mechanical cycle: (t_out - t_in) - (t_in_prime - t_out_prime).
    Times are NaN when the sweep never reaches the band.
    """

    tau: float
    t_in: float
    t_out: float
    t_out_prime: float | None = None
    t_in_prime: float | None = None

    @property
    def has_overshoot(self):
        return self.t_out_prime is not None


def interaction_window(params, drive, reservoir):
    """Crossing times of the frequency sweep through a step band.

    Works in the reflected frame for a band below omega_a0 and shifts
    the resulting times by half a mechanical period.  A band edge the
    sweep only grazes gives tau = 0 with t_in = t_out at the sweep
    extremum (a quarter period for zero drive phase).
    """
    reservoir.require_kind(STEP)
    wa0 = params.omega_a0
    wb = params.omega_b
    half = drive.delta_omega_a / 2.0
    period = 2.0 * math.pi / wb

    hot_side = reservoir.omega_center >= wa0
    wr = reservoir.omega_center if hot_side else 2.0 * wa0 - reservoir.omega_center
    shift = 0.0 if hot_side else period / 2.0

    empty = InteractionWindow(tau=0.0, t_in=math.nan, t_out=math.nan)
    if half == 0.0:
        return empty
    s_lo = (wr - reservoir.width / 2.0 - wa0) / half
    s_hi = (wr + reservoir.width / 2.0 - wa0) / half
    if s_lo > 1.0:
        return empty
    if s_lo == 1.0:
        t_graze = (math.pi / 2.0 - drive.phase) / wb + shift
        return InteractionWindow(tau=0.0, t_in=t_graze, t_out=t_graze)

    # confine the window to this reservoir's half-lobe of the sinusoid
    th_in = math.asin(max(s_lo, 0.0))
    th_out = math.pi - th_in
    t_in = (th_in - drive.phase) / wb + shift
    t_out = (th_out - drive.phase) / wb + shift
    if s_hi < 1.0:
        th_outp = math.asin(s_hi)
        th_inp = math.pi - th_outp
        tau = ((th_out - th_in) - (th_inp - th_outp)) / wb
        return InteractionWindow(
            tau=tau, t_in=t_in, t_out=t_out,
            t_out_prime=(th_outp - drive.phase) / wb + shift,
            t_in_prime=(th_inp - drive.phase) / wb + shift)
    return InteractionWindow(tau=(th_out - th_in) / wb, t_in=t_in, t_out=t_out)


def average_frequency(params, drive, reservoir, window):
    """Time average of the swept frequency over a dwell window.

    Evaluates (1/tau) * integral of omega_a(t) over the window in
    closed form via cosines, with any overshoot interval masked out.
    """
    reservoir.require_kind(STEP)
    if not window.tau > 0.0:
        raise ValueError("average frequency undefined for tau = 0")
    wb = params.omega_b
    half = drive.delta_omega_a / 2.0

    def cos_at(t):
        return math.cos(wb * t + drive.phase)

    int_sin = cos_at(window.t_in) - cos_at(window.t_out)
    if window.has_overshoot:
        int_sin -= cos_at(window.t_out_prime) - cos_at(window.t_in_prime)
    return params.omega_a0 + half * int_sin / (wb * window.tau)


def steady_state_occupations(omega_bar_h, omega_bar_c, hot, cold, tau,
                             tau_c=None):
    """Steady per-cycle photon occupations at the two dwell windows.

    Alternating exponential relaxation toward the hot and cold thermal
    occupations, solved for the cycle fixed point.  ``tau`` is the hot
    dwell time and also the cold one unless ``tau_c`` is given.
    Depends on the couplings only through the products Gamma*tau.
    """
    hot.require_kind(STEP)
    cold.require_kind(STEP)
    if tau < 0 or (tau_c is not None and tau_c < 0):
        raise ValueError("dwell times must be nonnegative")
    if tau_c is None:
        tau_c = tau
    n_th_h = bose_einstein(omega_bar_h, hot.temperature)
    n_th_c = bose_einstein(omega_bar_c, cold.temperature)
    e_h = math.exp(-hot.coupling * tau)
    e_c = math.exp(-cold.coupling * tau_c)
    den = 1.0 - e_h * e_c
    if den == 0.0:
        raise ConfigError(
            "steady state indeterminate: no thermal contact on either dwell")
    n_h = (n_th_h * (1.0 - e_h) + n_th_c * (1.0 - e_c) * e_h) / den
    n_c = (n_th_c * (1.0 - e_c) + n_th_h * (1.0 - e_h) * e_c) / den
    return n_h, n_c


def cycle_energy_power(delta_omega_bar, delta_n, omega_b):
    """Energy extracted per cycle and the corresponding average power."""
    e_cyc = delta_omega_bar * delta_n
    return e_cyc, omega_b / (2.0 * math.pi) * e_cyc


@dataclass(frozen=True)
class EfficiencyReport:
    eta_eff: float
    eta_max: float
    eta_carnot: float
    kappa: float


def efficiencies(omega_bar_h, omega_bar_c, params, drive, t_h, t_c):
    """Effective, compression-limit, and Carnot efficiencies.

    kappa is the peak-to-peak compression ratio of the sweep; the
    effective efficiency uses the dwell-averaged frequencies.
    """
    if omega_bar_h <= 0:
        raise ValueError("omega_bar_h must be positive")
    if drive.delta_omega_a >= 2.0 * params.omega_a0:
        raise ValueError("sweep reaches zero frequency: compression undefined")
    kappa = (params.omega_a0 + drive.delta_omega_a / 2.0) / (
        params.omega_a0 - drive.delta_omega_a / 2.0)
    return EfficiencyReport(
        eta_eff=1.0 - omega_bar_c / omega_bar_h,
        eta_max=1.0 - 1.0 / kappa,
        eta_carnot=1.0 - t_c / t_h,
        kappa=kappa,
    )


def required_mech_damping(delta_omega_bar, delta_n, g0, delta_omega_a,
                          omega_b):
    """Mechanical damping that balances the engine's pumping of the drive.

    Returns (gamma_b, q_b); an engine extracting nothing needs no
    damping, reported as (0, inf).
    """
    if delta_omega_a <= 0:
        raise ValueError("delta_omega_a must be positive")
    gamma_b = 2.0 * delta_omega_bar * delta_n * g0**2 / (
        math.pi * delta_omega_a**2)
    if gamma_b == 0.0:
        return 0.0, math.inf
    return gamma_b, omega_b / (2.0 * gamma_b)


@dataclass(frozen=True)
class AnalyticalReport:
    """Full closed-form characterization of one operating point."""

    window_h: InteractionWindow
    window_c: InteractionWindow
    omega_bar_h: float
    omega_bar_c: float
    delta_omega_bar: float
    n_h: float
    n_c: float
    delta_n: float
    e_cyc: float
    power: float
    eta_eff: float
    eta_max: float
    eta_carnot: float
    kappa: float
    gamma_b_required: float
    q_b_required: float
    operating: bool

    def scalar_fields(self):
        """Flatten to an ordered (name, value) list for tabular output."""
        out = [("tau_h", self.window_h.tau), ("tau_c", self.window_c.tau)]
        for name in ("omega_bar_h", "omega_bar_c", "delta_omega_bar",
                     "n_h", "n_c", "delta_n", "e_cyc", "power", "eta_eff",
                     "eta_max", "eta_carnot", "kappa", "gamma_b_required",
                     "q_b_required"):
            out.append((name, getattr(self, name)))
        out.append(("operating", int(self.operating)))
        return out


def analytical_report(params, drive, hot, cold):
    """Run the complete closed-form chain for one configuration.

    Sub-threshold geometries (either dwell time zero) come back as
    non-operating reports with zero power rather than raising, so
    sweeps can cross the threshold continuously.
    """
    hot.require_kind(STEP)
    cold.require_kind(STEP)
    if not cold.omega_center < params.omega_a0 < hot.omega_center:
        raise ConfigError("need omega_c < omega_a0 < omega_h")
    w_h = interaction_window(params, drive, hot)
    w_c = interaction_window(params, drive, cold)
    eff0 = efficiencies(params.omega_a0, params.omega_a0, params, drive,
                        hot.temperature, cold.temperature)

    if not (w_h.tau > 0.0 and w_c.tau > 0.0):
        return AnalyticalReport(
            window_h=w_h, window_c=w_c,
            omega_bar_h=math.nan, omega_bar_c=math.nan,
            delta_omega_bar=math.nan,
            n_h=math.nan, n_c=math.nan, delta_n=0.0,
            e_cyc=0.0, power=0.0,
            eta_eff=math.nan, eta_max=eff0.eta_max,
            eta_carnot=eff0.eta_carnot, kappa=eff0.kappa,
            gamma_b_required=0.0, q_b_required=math.inf,
            operating=False)

    omega_bar_h = average_frequency(params, drive, hot, w_h)
    omega_bar_c = average_frequency(params, drive, cold, w_c)
    n_h, n_c = steady_state_occupations(
        omega_bar_h, omega_bar_c, hot, cold, w_h.tau, tau_c=w_c.tau)
    delta_n = n_h - n_c
    delta_omega_bar = omega_bar_h - omega_bar_c
    e_cyc, power = cycle_energy_power(delta_omega_bar, delta_n,
                                      params.omega_b)
    eff = efficiencies(omega_bar_h, omega_bar_c, params, drive,
                       hot.temperature, cold.temperature)
    gamma_b_req, q_b_req = required_mech_damping(
        delta_omega_bar, delta_n, params.g0, drive.delta_omega_a,
        params.omega_b)
    operating = delta_n > 0.0
    return AnalyticalReport(
        window_h=w_h, window_c=w_c,
        omega_bar_h=omega_bar_h, omega_bar_c=omega_bar_c,
        delta_omega_bar=delta_omega_bar,
        n_h=n_h, n_c=n_c, delta_n=delta_n,
        e_cyc=e_cyc, power=power,
        eta_eff=eff.eta_eff if operating else math.nan,
        eta_max=eff.eta_max, eta_carnot=eff.eta_carnot, kappa=eff.kappa,
        gamma_b_required=gamma_b_req, q_b_required=q_b_req,
        operating=operating)


SWEEP_AXES = ("omega_b", "delta_omega_a", "reservoir_separation", "T_h",
              "Gamma")


def analytical_sweep(params, drive, hot, cold, axis, values):
    """Evaluate the closed-form chain along one named parameter axis.

    ``reservoir_separation`` moves both band centers symmetrically
    about omega_a0; ``Gamma`` sets both thermalization rates.
    Returns a list of (value, AnalyticalReport) rows in input order.
    """
    rows = []
    for value in values:
        v = float(value)
        p, d, h, c = apply_axis(params, drive, hot, cold, axis, v)
        rows.append((v, analytical_report(p, d, h, c)))
    return rows


def apply_axis(params, drive, hot, cold, axis, value):
    """Return (params, drive, hot, cold) with one named axis set to value."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; "
                          f"choose from {', '.join(SWEEP_AXES)}")
    v = float(value)
    p, d, h, c = params, drive, hot, cold
    if axis == "omega_b":
        p = dataclasses.replace(params, omega_b=v)
    elif axis == "delta_omega_a":
        d = dataclasses.replace(drive, delta_omega_a=v)
    elif axis == "reservoir_separation":
        h = dataclasses.replace(hot, omega_center=params.omega_a0 + v / 2.0)
        c = dataclasses.replace(cold, omega_center=params.omega_a0 - v / 2.0)
    elif axis == "T_h":
        h = dataclasses.replace(hot, temperature=v)
    elif axis == "Gamma":
        h = dataclasses.replace(hot, coupling=v)
        c = dataclasses.replace(cold, coupling=v)
    return p, d, h, c
