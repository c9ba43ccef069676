"""Shared parameter types, unit conventions, validation, and configuration I/O.

Units are natural throughout: hbar = k_B = 1 and the bare optical frequency
omega_a0 is the base unit. All frequencies and rates are multiples of
omega_a0, energies are multiples of hbar*omega_a0, power is in
hbar*omega_a0**2, and time is in 1/omega_a0.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

ENV_PREFIX = "OTTOMECH_"

STEP = "step"
LORENTZIAN = "lorentzian"


class OttoError(Exception):
    """Base class for package errors."""


class ConfigError(OttoError):
    """Invalid, inconsistent, or wrong-kind configuration input."""


class NumericsError(OttoError):
    """Numerical failure: blow-up, non-convergent quadrature or fit."""


@dataclass(frozen=True)
class ModelParams:
    """Optomechanical system constants.

    Parameters
    ----------
    omega_b : float
        Mechanical angular frequency.
    g0 : float
        Optomechanical coupling constant (angular frequency units).
    omega_a0 : float, optional
        Bare optical mode frequency; the unit system fixes this to 1.
    gamma_b : float, optional
        Excess mechanical energy damping rate. Zero means undamped.
    """

    omega_b: float
    g0: float
    omega_a0: float = 1.0
    gamma_b: float = 0.0

    def __post_init__(self):
        if self.omega_a0 <= 0:
            raise ConfigError("omega_a0 must be positive")
        if self.omega_b <= 0:
            raise ConfigError("omega_b must be positive")
        if self.g0 < 0:
            raise ConfigError("g0 must be nonnegative")
        if self.gamma_b < 0:
            raise ConfigError("gamma_b must be nonnegative")

    @property
    def q_b(self):
        """Mechanical quality factor omega_b / (2 gamma_b); inf when undamped."""
        if self.gamma_b == 0:
            return math.inf
        return self.omega_b / (2.0 * self.gamma_b)


def gamma_from_q(omega_b, q_b):
    """Convert a mechanical quality factor to the damping rate omega_b/(2 Q)."""
    if q_b <= 0:
        raise ConfigError("q_b must be positive")
    return omega_b / (2.0 * q_b)


@dataclass(frozen=True)
class ReservoirSpec:
    """One heat bath, in step-band or Lorentzian spectral form.

    ``width`` is the full band width l for a step reservoir and the
    full width at half maximum gamma for a Lorentzian one.  ``coupling``
    is the thermalization rate Gamma for a step reservoir and the
    dimensionless spectral scale g for a Lorentzian one.
    """

    kind: str
    omega_center: float
    temperature: float
    width: float
    coupling: float

    def __post_init__(self):
        if self.kind not in (STEP, LORENTZIAN):
            raise ConfigError(f"unknown reservoir kind {self.kind!r}")
        if self.omega_center <= 0:
            raise ConfigError("omega_center must be positive")
        if self.temperature <= 0:
            raise ConfigError("temperature must be positive")
        if self.width <= 0:
            raise ConfigError("width must be positive")
        if self.coupling < 0:
            raise ConfigError("coupling must be nonnegative")

    @classmethod
    def step(cls, omega_center, temperature, width, coupling):
        return cls(STEP, omega_center, temperature, width, coupling)

    @classmethod
    def lorentzian(cls, omega_center, temperature, width, coupling):
        return cls(LORENTZIAN, omega_center, temperature, width, coupling)

    def require_kind(self, kind):
        if self.kind != kind:
            raise ConfigError(
                f"operation requires a {kind} reservoir, got {self.kind}")


@dataclass(frozen=True)
class DriveSpec:
    """Sinusoidal optical-frequency drive of the analytical model.

    The drive law is omega_a(t) = omega_a0 + (delta_omega_a/2) sin(omega_b t),
    so ``delta_omega_a`` is the peak-to-peak modulation.
    """

    delta_omega_a: float
    phase: float = 0.0

    def __post_init__(self):
        if self.delta_omega_a < 0:
            raise ConfigError("delta_omega_a must be nonnegative")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid with n_steps samples spaced dt apart."""

    dt: float
    n_steps: int
    t0: float = 0.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.n_steps < 2:
            raise ConfigError("n_steps must be at least 2")

    @property
    def t_total(self):
        return (self.n_steps - 1) * self.dt

    def times(self):
        return self.t0 + self.dt * np.arange(self.n_steps)


@dataclass(frozen=True)
class InitialState:
    """Coherent-state initial conditions alpha0 = sqrt(n_a0) e^{i phase}."""

    n_a0: float = 0.5
    n_b0: float = 39.0
    alpha_phase: float = 0.0
    beta_phase: float = 0.0

    def __post_init__(self):
        if self.n_a0 < 0 or self.n_b0 < 0:
            raise ConfigError("initial occupations must be nonnegative")

    def alpha0(self):
        return math.sqrt(self.n_a0) * complex(
            math.cos(self.alpha_phase), math.sin(self.alpha_phase))

    def beta0(self):
        return math.sqrt(self.n_b0) * complex(
            math.cos(self.beta_phase), math.sin(self.beta_phase))


@dataclass(frozen=True)
class EnsembleSpec:
    """Trajectory count, seeding, and scheduling granularity.

    ``batch_size`` is the deterministic unit of work: results are
    reproducible for a fixed (n_trajectories, base_seed, batch_size)
    triple regardless of worker count.
    """

    n_trajectories: int = 8
    base_seed: int = 0
    batch_size: int = 64
    workers: int = 1

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ConfigError("n_trajectories must be at least 1")
        if self.base_seed < 0:
            raise ConfigError("base_seed must be nonnegative")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")


@dataclass(frozen=True)
class NumericsSpec:
    """Solver tuning knobs; defaults reproduce the documented scheme."""

    eps_tail: float = 1e-4
    window_steps: int | None = None
    fast_path: bool = True
    conv_block: int = 1024
    noise_dtype: str = "float64"

    def __post_init__(self):
        if not 0 < self.eps_tail < 1:
            raise ConfigError("eps_tail must be in (0, 1)")
        if self.window_steps is not None and self.window_steps < 1:
            raise ConfigError("window_steps must be positive")
        if self.conv_block < 8:
            raise ConfigError("conv_block must be at least 8")
        if self.noise_dtype not in ("float32", "float64"):
            raise ConfigError("noise_dtype must be float32 or float64")


@dataclass(frozen=True)
class Trajectory:
    """Time series of complex amplitudes for one noise realization."""

    grid: TimeGrid
    alpha: np.ndarray
    beta: np.ndarray
    seed: int

    def occupations(self):
        """Return (|alpha|^2, |beta|^2) series."""
        # same arithmetic as the streaming accumulator, so single-trajectory
        # ensemble means match these series bit for bit
        n_a = self.alpha.real**2 + self.alpha.imag**2
        n_b = self.beta.real**2 + self.beta.imag**2
        return n_a, n_b


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations


def validate_config(params, reservoirs, grid, drive=None):
    """Check cross-cutting invariants of a full model configuration.

    Returns a ValidationReport; an empty violation list means the
    configuration is usable.  Violations cover the reservoir ordering
    omega_c < omega_a0 < omega_h; warnings cover soft numerical limits
    such as a time step that under-resolves the optical period.
    """
    report = ValidationReport()
    hot, cold = reservoirs
    if not cold.omega_center < params.omega_a0 < hot.omega_center:
        report.violations.append(
            "reservoir ordering violated: need omega_c < omega_a0 < omega_h")
    if hot.kind != cold.kind:
        report.violations.append("mixed reservoir kinds in one configuration")
    excursion = drive.delta_omega_a / 2.0 if drive is not None else 0.0
    fastest = max(params.omega_a0 + excursion,
                  hot.omega_center, cold.omega_center)
    if grid.dt > 2.0 * math.pi / (20.0 * fastest):
        report.warnings.append(
            "time step under-resolves the optical period "
            f"(dt = {grid.dt:g}, fastest scale {fastest:g})")
    return report


@dataclass(frozen=True)
class EngineConfig:
    """Bundle of every section needed by the CLI verbs."""

    params: ModelParams
    hot: ReservoirSpec
    cold: ReservoirSpec
    grid: TimeGrid
    initial: InitialState = InitialState()
    drive: DriveSpec | None = None
    ensemble: EnsembleSpec = EnsembleSpec()
    numerics: NumericsSpec = NumericsSpec()


def _section(raw, name, required=True):
    sec = raw.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing config section {name!r}")
        return None
    if not isinstance(sec, dict):
        raise ConfigError(f"config section {name!r} must be a mapping")
    return dict(sec)


def _build_reservoir(sec, name):
    needed = ("kind", "omega_center", "temperature", "width", "coupling")
    missing = [k for k in needed if k not in sec]
    if missing:
        raise ConfigError(f"{name}: missing key {missing[0]!r}")
    extra = set(sec) - set(needed)
    if extra:
        raise ConfigError(f"{name}: unknown keys {', '.join(sorted(extra))}")
    return ReservoirSpec(
        kind=sec["kind"],
        omega_center=float(sec["omega_center"]),
        temperature=float(sec["temperature"]),
        width=float(sec["width"]),
        coupling=float(sec["coupling"]),
    )


def config_from_dict(raw):
    """Build an EngineConfig from a parsed configuration mapping."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a mapping")
    raw = {k: v for k, v in raw.items()}

    system = _section(raw, "system")
    for key in ("omega_b", "g0"):
        if key not in system:
            raise ConfigError(f"system: missing key {key!r}")
    gamma_b = system.pop("gamma_b", None)
    q_b = system.pop("q_b", None)
    omega_b = float(system.pop("omega_b"))
    if gamma_b is not None and q_b is not None:
        raise ConfigError("specify gamma_b or q_b, not both")
    if q_b is not None:
        gamma_b = gamma_from_q(omega_b, float(q_b))
    params = ModelParams(
        omega_b=omega_b,
        g0=float(system.pop("g0")),
        omega_a0=float(system.pop("omega_a0", 1.0)),
        gamma_b=float(gamma_b) if gamma_b is not None else 0.0,
    )
    initial = InitialState(
        n_a0=float(system.pop("n_a0", 0.5)),
        n_b0=float(system.pop("n_b0", 39.0)),
        alpha_phase=float(system.pop("alpha_phase", 0.0)),
        beta_phase=float(system.pop("beta_phase", 0.0)),
    )
    if system:
        raise ConfigError(f"system: unknown keys {', '.join(sorted(system))}")

    hot = _build_reservoir(_section(raw, "hot_reservoir"), "hot_reservoir")
    cold = _build_reservoir(_section(raw, "cold_reservoir"), "cold_reservoir")

    gsec = _section(raw, "grid")
    if "dt" not in gsec:
        raise ConfigError("grid: missing key 'dt'")
    dt = float(gsec.pop("dt"))
    if "n_steps" in gsec and "t_total" in gsec:
        raise ConfigError("grid: specify n_steps or t_total, not both")
    if "n_steps" in gsec:
        n_steps = int(gsec.pop("n_steps"))
    elif "t_total" in gsec:
        n_steps = int(round(float(gsec.pop("t_total")) / dt)) + 1
    else:
        raise ConfigError("grid: need n_steps or t_total")
    grid = TimeGrid(dt=dt, n_steps=n_steps, t0=float(gsec.pop("t0", 0.0)))
    if gsec:
        raise ConfigError(f"grid: unknown keys {', '.join(sorted(gsec))}")

    dsec = _section(raw, "drive", required=False)
    drive = None
    if dsec is not None:
        if "delta_omega_a" not in dsec:
            raise ConfigError("drive: missing key 'delta_omega_a'")
        drive = DriveSpec(
            delta_omega_a=float(dsec.pop("delta_omega_a")),
            phase=float(dsec.pop("phase", 0.0)),
        )
        if dsec:
            raise ConfigError(f"drive: unknown keys {', '.join(sorted(dsec))}")

    esec = _section(raw, "ensemble", required=False) or {}
    ensemble = EnsembleSpec(
        n_trajectories=int(esec.pop("n_trajectories", 8)),
        base_seed=int(esec.pop("base_seed", 0)),
        batch_size=int(esec.pop("batch_size", 64)),
        workers=int(esec.pop("workers", 1)),
    )
    if esec:
        raise ConfigError(f"ensemble: unknown keys {', '.join(sorted(esec))}")

    nsec = _section(raw, "numerics", required=False) or {}
    wsteps = nsec.pop("window_steps", None)
    numerics = NumericsSpec(
        eps_tail=float(nsec.pop("eps_tail", 1e-4)),
        window_steps=int(wsteps) if wsteps is not None else None,
        fast_path=bool(nsec.pop("fast_path", True)),
        conv_block=int(nsec.pop("conv_block", 1024)),
        noise_dtype=str(nsec.pop("noise_dtype", "float64")),
    )
    if nsec:
        raise ConfigError(f"numerics: unknown keys {', '.join(sorted(nsec))}")

    known = {"system", "hot_reservoir", "cold_reservoir", "grid",
             "drive", "ensemble", "numerics"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown config sections: {', '.join(sorted(extra))}")

    return EngineConfig(params=params, hot=hot, cold=cold, grid=grid,
                        initial=initial, drive=drive, ensemble=ensemble,
                        numerics=numerics)


def config_to_dict(cfg):
    """Serialize an EngineConfig back to the external mapping form."""
    out = {
        "system": {
            "omega_a0": cfg.params.omega_a0,
            "omega_b": cfg.params.omega_b,
            "g0": cfg.params.g0,
            "gamma_b": cfg.params.gamma_b,
            "n_a0": cfg.initial.n_a0,
            "n_b0": cfg.initial.n_b0,
            "alpha_phase": cfg.initial.alpha_phase,
            "beta_phase": cfg.initial.beta_phase,
        },
        "hot_reservoir": dataclasses.asdict(cfg.hot),
        "cold_reservoir": dataclasses.asdict(cfg.cold),
        "grid": {"dt": cfg.grid.dt, "n_steps": cfg.grid.n_steps,
                 "t0": cfg.grid.t0},
        "ensemble": dataclasses.asdict(cfg.ensemble),
        "numerics": dataclasses.asdict(cfg.numerics),
    }
    if cfg.drive is not None:
        out["drive"] = dataclasses.asdict(cfg.drive)
    return out


def apply_env_overrides(raw, environ=None):
    """Overlay OTTOMECH_<SECTION>__<KEY>=value onto a raw config mapping.

    Values are parsed as YAML scalars so numbers and booleans come
    through typed.  Returns the mapping it was given.
    """
    environ = os.environ if environ is None else environ
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        path = name[len(ENV_PREFIX):].lower().split("__")
        if len(path) != 2:
            raise ConfigError(
                f"cannot parse override {name}: expected "
                f"{ENV_PREFIX}SECTION__KEY")
        section, key = path
        raw.setdefault(section, {})
        if not isinstance(raw[section], dict):
            raise ConfigError(f"override {name} targets a non-mapping section")
        raw[section][key] = yaml.safe_load(value)
    return raw


def load_config(path, env_overrides=True):
    """Load a YAML configuration file into an EngineConfig."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if raw is None:
        raise ConfigError(f"config file is empty: {path}")
    if env_overrides:
        raw = apply_env_overrides(raw)
    return config_from_dict(raw)


def save_config(cfg, path):
    with open(path, "w") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=False)
