"""Reservoir spectral functions and thermal factors."""

import numpy as np
import pytest
from scipy.optimize import brentq

from ottomech.core import ConfigError, ReservoirSpec
from ottomech.spectra import (
    bose_einstein,
    noise_psd,
    spectral_density,
    weighted_mech_thermal_occupation,
)


HOT = ReservoirSpec.lorentzian(omega_center=1.04, temperature=0.56,
                               width=0.031, coupling=0.007)
COLD = ReservoirSpec.lorentzian(omega_center=0.964, temperature=0.11,
                                width=0.025, coupling=0.0082)


def test_peak_value_is_coupling_times_center():
    # at the resonance the detuned term vanishes and J reduces to g * omega
    assert spectral_density(HOT.omega_center, HOT) == pytest.approx(
        HOT.coupling * HOT.omega_center, rel=1e-15)
    assert spectral_density(COLD.omega_center, COLD) == pytest.approx(
        COLD.coupling * COLD.omega_center, rel=1e-15)


def test_spectral_density_tail_decays_like_inverse_frequency():
    w = np.array([50.0, 100.0, 200.0])
    j = spectral_density(w, HOT)
    expected = HOT.coupling * HOT.width**2 / w
    assert np.allclose(j, expected, rtol=0.01)


def test_spectral_density_rejects_negative_frequency_and_step_kind():
    with pytest.raises(ValueError):
        spectral_density(-0.5, HOT)
    step = ReservoirSpec.step(omega_center=1.03, temperature=0.56,
                              width=0.04, coupling=0.022)
    with pytest.raises(ConfigError):
        spectral_density(1.0, step)


def test_bose_einstein_reference_points():
    # occupation is exactly 1 where the exponent equals ln 2
    t = 0.56
    assert bose_einstein(t * np.log(2.0), t) == pytest.approx(1.0, rel=1e-14)
    w = np.linspace(0.1, 3.0, 50)
    n = bose_einstein(w, t)
    assert np.all(np.diff(n) < 0)
    with pytest.raises(ValueError):
        bose_einstein(0.0, t)
    with pytest.raises(ValueError):
        bose_einstein(1.0, 0.0)


def test_noise_psd_exceeds_spectral_density():
    """coth(w/2T) >= 1, so the thermal spectrum sits above the bare one."""
    w = np.linspace(0.05, 3.0, 400)
    s = noise_psd(w, HOT)
    j = spectral_density(w, HOT)
    assert np.all(s >= j)
    assert np.all(np.isfinite(s))


def test_noise_psd_has_single_interior_peak_near_center():
    w = np.linspace(0.5, 1.5, 20001)
    s = noise_psd(w, HOT)
    peak = w[np.argmax(s)]
    assert abs(peak - HOT.omega_center) < HOT.width


def test_noise_psd_width_tracks_width_parameter():
    """Full width at half maximum of the peak is the width parameter,
    up to the slow frequency prefactor."""
    w_pk = HOT.omega_center
    s_pk = noise_psd(w_pk, HOT)
    half = lambda w: noise_psd(w, HOT) - 0.5 * s_pk
    lo = brentq(half, w_pk - 5 * HOT.width, w_pk)
    hi = brentq(half, w_pk, w_pk + 5 * HOT.width)
    assert (hi - lo) == pytest.approx(HOT.width, rel=0.15)


def test_weighted_mech_thermal_occupation_formula():
    omega_b = 0.048
    n_h = bose_einstein(omega_b, HOT.temperature)
    n_c = bose_einstein(omega_b, COLD.temperature)
    expected = (HOT.coupling * n_h + COLD.coupling * n_c) / (
        HOT.coupling + COLD.coupling)
    got = weighted_mech_thermal_occupation(omega_b, HOT, COLD)
    assert got == pytest.approx(expected, rel=1e-12)
    # frozen value for the canonical operating point
    assert got == pytest.approx(6.131945197629422, rel=1e-12)


def test_weighted_occupation_needs_some_coupling():
    dead_h = ReservoirSpec.lorentzian(omega_center=1.04, temperature=0.56,
                                      width=0.031, coupling=0.0)
    dead_c = ReservoirSpec.lorentzian(omega_center=0.964, temperature=0.11,
                                      width=0.025, coupling=0.0)
    with pytest.raises(ConfigError):
        weighted_mech_thermal_occupation(0.048, dead_h, dead_c)
