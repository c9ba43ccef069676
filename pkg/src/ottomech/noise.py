"""Colored Gaussian noise synthesis by spectral filtering of white noise.

A real stationary series is generated per realization: white standard
normals are transformed, multiplied by the filter magnitude
|FRF(w)| = sqrt(S(w)), and transformed back.  Synthesis runs on a
power-of-two grid at least twice the requested length and the middle
section is returned, which keeps the circular-correlation seam out of
the delivered window.

Normalization: the ensemble variance of the delivered series equals
the one-sided integral of S over positive frequencies,

    Var xi = integral_0^inf S(w) dw,

and the lag autocovariance is the matching cosine transform
integral_0^inf S(w) cos(w tau) dw.  This scaling makes a linearly
damped mode driven by the noise settle at the thermal occupation of
the bath (fluctuation-dissipation consistency); see the periodogram
estimator in welch_psd for the inverse convention.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import LORENTZIAN, TimeGrid
from .spectra import noise_psd

# elements per FFT workspace chunk; keeps transient memory near 0.5 GB
_FFT_BUDGET = 1 << 24


def _synth_length(n_samples):
    return 1 << max(1, int(math.ceil(math.log2(2 * n_samples))))


@dataclass(frozen=True)
class NoiseProcess:
    """Spectral filter for one reservoir on one time grid.

    ``frf_magnitude`` holds |FRF| = sqrt(S) on the nonnegative FFT
    bins of the internal synthesis grid; realness of the output is
    structural (inverse real transform).
    """

    reservoir: object
    grid: TimeGrid
    frf_magnitude: np.ndarray
    n_synth: int

    def frequencies(self):
        """Angular frequencies of the retained filter bins."""
        return 2.0 * math.pi * np.fft.rfftfreq(self.n_synth, self.grid.dt)


def build_filter(reservoir, grid):
    """Tabulate the synthesis filter for a Lorentzian reservoir.

    Warns when the grid Nyquist frequency pi/dt does not clear the
    spectral peak by five widths, since the spectrum is then visibly
    truncated.
    """
    reservoir.require_kind(LORENTZIAN)
    nyquist = math.pi / grid.dt
    if nyquist < reservoir.omega_center + 5.0 * reservoir.width:
        warnings.warn(
            "Nyquist frequency %g truncates the noise spectrum (peak %g, "
            "width %g)" % (nyquist, reservoir.omega_center, reservoir.width),
            stacklevel=2)
    n_synth = _synth_length(grid.n_steps)
    w = 2.0 * math.pi * np.fft.rfftfreq(n_synth, grid.dt)
    frf = np.sqrt(noise_psd(w, reservoir))
    return NoiseProcess(reservoir=reservoir, grid=grid,
                        frf_magnitude=frf, n_synth=n_synth)


def _generator(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def sample_noise(process, seed):
    """Draw one real noise realization of length grid.n_steps."""
    rng = _generator(seed)
    n = process.grid.n_steps
    nsyn = process.n_synth
    scale = math.sqrt(math.pi / process.grid.dt)
    white = rng.standard_normal(nsyn)
    spectrum = np.fft.rfft(white)
    spectrum *= process.frf_magnitude
    series = np.fft.irfft(spectrum, n=nsyn)
    start = nsyn // 2
    return scale * series[start:start + n]


def sample_noise_sum(processes, seeds, out=None, dtype=np.float64):
    """Synthesize and sum one realization per process into one series.

    The reservoirs' noises are statistically independent (one seed per
    process) but enter the equation of motion only as a sum, so the
    sum is all that needs storing.  ``out`` may be a preallocated
    (n_steps,) array.
    """
    n = processes[0].grid.n_steps
    if out is None:
        out = np.zeros(n, dtype=dtype)
    else:
        out[:] = 0.0
    for process, seed in zip(processes, seeds):
        if process.grid.n_steps != n:
            raise ValueError("processes share one grid")
        out += sample_noise(process, seed).astype(dtype, copy=False)
    return out


def noise_streams(base_seed, trajectory_index):
    """Independent hot/cold seed pair for one globally indexed trajectory.

    Derivation is positional, not sequential: trajectory i always gets
    the same two streams no matter how work is batched or scheduled.
    """
    hot = np.random.SeedSequence(entropy=base_seed,
                                 spawn_key=(trajectory_index, 0))
    cold = np.random.SeedSequence(entropy=base_seed,
                                  spawn_key=(trajectory_index, 1))
    return hot, cold


def fft_chunk_rows(n_synth):
    """Rows per FFT batch that keep workspace memory within budget."""
    return max(1, _FFT_BUDGET // int(n_synth))


def welch_psd(series, dt, n_segments=1):
    """Averaged-periodogram spectral estimate matching the synthesis scaling.

    ``series`` is (n,) or (m, n); each row is split into n_segments
    equal nonoverlapping segments whose periodograms are averaged.
    Returns (w, estimate) on the segment frequency grid.  For noise
    produced by sample_noise the estimate converges to S(w).
    """
    series = np.atleast_2d(np.asarray(series, dtype=float))
    n = series.shape[1]
    seg = n // n_segments
    if seg < 2:
        raise ValueError("segments too short")
    blocks = series[:, :n_segments * seg].reshape(-1, seg)
    spectra = np.fft.rfft(blocks, axis=1)
    power = np.mean(np.abs(spectra) ** 2, axis=0)
    estimate = power * dt / (math.pi * seg)
    w = 2.0 * math.pi * np.fft.rfftfreq(seg, dt)
    return w, estimate
