"""Reservoir spectral functions and occupation helpers.

The Lorentzian-family coupling density used here is

    J(w) = g w**3 / (w**2 + gamma**-2 (w**2 - w_r**2)**2)

which peaks near the resonance w_r with full width at half maximum
close to gamma, and the matching thermal noise power spectrum is
S(w) = J(w) coth(w / 2T).
"""

from __future__ import annotations

import numpy as np

from .core import LORENTZIAN, ConfigError


def _check_freq(w):
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ValueError("frequency must be nonnegative")
    return w


def spectral_density(w, reservoir):
    """Coupling density J(w) of a Lorentzian reservoir.

    Parameters
    ----------
    w : array_like
        Nonnegative angular frequency.
    reservoir : ReservoirSpec
        Must have kind ``lorentzian``; its width is the FWHM-like scale
        gamma and its coupling the dimensionless strength g.

    Returns
    -------
    ndarray or float
        J(w), exactly ``g * omega_center`` at w = omega_center.
    """
    reservoir.require_kind(LORENTZIAN)
    w = _check_freq(w)
    g = reservoir.coupling
    gam = reservoir.width
    wr = reservoir.omega_center
    out = g * w**3 / (w**2 + (w**2 - wr**2) ** 2 / gam**2)
    if out.ndim == 0:
        return float(out)
    return out


def bose_einstein(w, temperature):
    """Thermal occupation 1 / (exp(w/T) - 1).

    Underflows to 0 for large w/T; w and T must be positive.
    """
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise ValueError("frequency must be positive")
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    with np.errstate(over="ignore"):
        out = 1.0 / np.expm1(w / temperature)
    if out.ndim == 0:
        return float(out)
    return out


def noise_psd(w, reservoir):
    """Thermal noise power spectrum S(w) = J(w) coth(w / 2T).

    S(0) = 0 is taken by continuity: J falls off as w**3 while the
    coth diverges only as 1/w.
    """
    reservoir.require_kind(LORENTZIAN)
    w = _check_freq(w)
    j = np.asarray(spectral_density(w, reservoir))
    x = w / (2.0 * reservoir.temperature)
    out = np.zeros_like(j)
    nz = x > 0
    out[nz] = j[nz] / np.tanh(x[nz])
    if out.ndim == 0:
        return float(out)
    return out


def weighted_mech_thermal_occupation(omega_b, hot, cold):
    """Coupling-weighted thermal occupation of the mechanical mode.

    Both reservoirs see the mechanical frequency in their spectral
    tails; the effective thermal occupation is the coupling-weighted
    mean of the two Bose-Einstein factors at omega_b.
    """
    hot.require_kind(LORENTZIAN)
    cold.require_kind(LORENTZIAN)
    g_h, g_c = hot.coupling, cold.coupling
    if g_h + g_c <= 0:
        raise ConfigError("weighted occupation needs a nonzero coupling")
    n_h = bose_einstein(omega_b, hot.temperature)
    n_c = bose_einstein(omega_b, cold.temperature)
    return (g_h * n_h + g_c * n_c) / (g_h + g_c)
