"""Quasiclassical Heisenberg-Langevin integration of the coupled modes.

State per trajectory is (alpha, beta), the complex optical and
mechanical amplitudes.  The drift is

    d(alpha)/dt = -i omega_a0 alpha + i g0 alpha (beta* + beta)
                  - xi_h - xi_c + F_mem(t)
    d(beta)/dt  = -i omega_b beta + i g0 |alpha|^2 - gamma_b beta

where xi_h/c are the colored reservoir noises and F_mem is the
retarded kernel convolution of (alpha* + alpha).  Time stepping is
Heun's predictor-corrector (order 2, Stratonovich-consistent for this
smooth colored noise) with noise sampled at the interval endpoints.

The trapezoid memory force at the corrector endpoint nominally
includes the predicted new sample, but that sample multiplies
kappa(0) = 0, so the corrector force equals the force carried into the
next step; each step therefore needs exactly one history contraction.
The contraction runs either directly against the truncated kernel
window, or (fast path) split into an in-block part summed directly and
a far-field part evaluated for a whole block of steps at once by FFT
convolution with the stored history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (InitialState, NumericsError, NumericsSpec, Trajectory)
from .kernel import sum_kernels, tabulate_kernel
from .noise import build_filter, noise_streams, sample_noise

_BLOWUP_OCC = 1e6
_CHECK_EVERY = 4096


def drift(alpha, beta, xi_hot, xi_cold, mem, params):
    """Instantaneous drift of the coupled amplitudes.

    ``mem`` is the precomputed retarded memory force on alpha and the
    xi values are the real reservoir noises at the current time.
    """
    dalpha = (-1j * params.omega_a0 * alpha
              + 1j * params.g0 * alpha * (np.conj(beta) + beta)
              - xi_hot - xi_cold + mem)
    dbeta = (-1j * params.omega_b * beta
             + 1j * params.g0 * abs(alpha) ** 2
             - params.gamma_b * beta)
    return dalpha, dbeta


@dataclass(frozen=True)
class SolverSetup:
    """Shared, noise-independent machinery for one configuration."""

    params: object
    grid: object
    initial: InitialState
    ktable: object
    noise_hot: object
    noise_cold: object
    numerics: NumericsSpec


def build_setup(params, hot, cold, grid, initial=None, numerics=None):
    """Tabulate kernels and noise filters once for a run."""
    initial = InitialState() if initial is None else initial
    numerics = NumericsSpec() if numerics is None else numerics
    table_h = tabulate_kernel(hot, grid, eps_tail=numerics.eps_tail,
                              window_steps=numerics.window_steps)
    table_c = tabulate_kernel(cold, grid, eps_tail=numerics.eps_tail,
                              window_steps=numerics.window_steps)
    return SolverSetup(
        params=params, grid=grid, initial=initial,
        ktable=sum_kernels(table_h, table_c),
        noise_hot=build_filter(hot, grid),
        noise_cold=build_filter(cold, grid),
        numerics=numerics)


@dataclass
class BatchOutput:
    """Per-step trajectory sums and terminal states for one batch."""

    indices: tuple
    n_steps: int
    sum_n_a: np.ndarray
    sum_n_b: np.ndarray
    sum_n_b_sq: np.ndarray
    terminal_alpha: np.ndarray
    terminal_beta: np.ndarray
    trajectories: list | None = None

    @property
    def n_trajectories(self):
        return len(self.indices)


def _combined_noise(setup, base_seed, indices, dtype):
    n = setup.grid.n_steps
    out = np.empty((len(indices), n), dtype=dtype)
    for row, index in enumerate(indices):
        seed_h, seed_c = noise_streams(base_seed, index)
        xi = sample_noise(setup.noise_hot, seed_h)
        xi += sample_noise(setup.noise_cold, seed_c)
        out[row] = xi
    return out


def run_batch(setup, base_seed, indices, store_series=False, noise=True):
    """Integrate one batch of trajectories with shared stepping.

    ``indices`` are global trajectory numbers; each one deterministically
    selects its own hot and cold noise streams from ``base_seed``, so
    the result is independent of how trajectories are grouped.
    ``noise=False`` zeroes the stochastic drive while keeping the
    memory kernel active (deterministic damping studies).
    """
    params = setup.params
    grid = setup.grid
    n = grid.n_steps
    dt = grid.dt
    m = len(indices)
    table = setup.ktable
    window = table.window
    kappa = table.kappa

    dtype = np.dtype(setup.numerics.noise_dtype)
    if noise:
        xi = _combined_noise(setup, base_seed, indices, dtype)
    else:
        xi = np.zeros((m, n), dtype=dtype)

    alpha = np.full(m, setup.initial.alpha0(), dtype=np.complex128)
    beta = np.full(m, setup.initial.beta0(), dtype=np.complex128)
    s = np.empty((m, n))
    sum_n_a = np.empty(n)
    sum_n_b = np.empty(n)
    sum_n_b_sq = np.empty(n)
    if store_series:
        series_a = np.empty((m, n), dtype=np.complex128)
        series_b = np.empty((m, n), dtype=np.complex128)

    block = setup.numerics.conv_block
    fast = setup.numerics.fast_path and window > block and n > block
    if fast:
        nfft = 1 << int(math.ceil(math.log2(2 * window + block + 2)))
        kpad = np.zeros(nfft)
        kpad[:window + 1] = kappa
        kernel_spectrum = np.fft.rfft(kpad)
        kaprev_block = np.ascontiguousarray(kappa[1:block + 1][::-1])
        far = np.zeros((m, block))
        t_block = 0
    else:
        kaprev = np.ascontiguousarray(kappa[1:window + 1][::-1])

    i_wa = -1j * params.omega_a0
    i_wb = -1j * params.omega_b
    i_g0 = 1j * params.g0
    gamma_b = params.gamma_b
    force = np.zeros(m, dtype=np.complex128)

    for k in range(n - 1):
        n_a = alpha.real**2 + alpha.imag**2
        n_b = beta.real**2 + beta.imag**2
        s[:, k] = 2.0 * alpha.real
        sum_n_a[k] = n_a.sum()
        sum_n_b[k] = n_b.sum()
        sum_n_b_sq[k] = np.dot(n_b, n_b)
        if store_series:
            series_a[:, k] = alpha
            series_b[:, k] = beta

        # preview force at step k+1; the new endpoint carries kappa(0)=0
        j1 = max(0, k + 1 - window)
        lags = k + 1 - j1
        if fast:
            if k % block == 0:
                t_block = k
                depth = min(t_block, window - 1)
                if depth > 0:
                    seg = np.fft.rfft(s[:, t_block - depth:t_block], nfft)
                    seg *= kernel_spectrum
                    conv = np.fft.irfft(seg, nfft)
                    far = conv[:, depth + 1:depth + block + 1]
                else:
                    far = np.zeros((m, block))
            r = k + 1 - t_block
            acc = s[:, t_block:k + 1] @ kaprev_block[block - r:]
            acc += far[:, r - 1]
        else:
            acc = s[:, j1:k + 1] @ kaprev[window - lags:]
        acc = acc - 0.5 * kappa[lags] * s[:, j1]
        force_next = (2.0j * dt) * acc

        s_b = 2.0 * beta.real
        f_a = i_wa * alpha + i_g0 * alpha * s_b - xi[:, k] + force
        f_b = i_wb * beta + i_g0 * n_a - gamma_b * beta
        alpha_p = alpha + dt * f_a
        beta_p = beta + dt * f_b
        n_a_p = alpha_p.real**2 + alpha_p.imag**2
        f_a2 = (i_wa * alpha_p + i_g0 * alpha_p * (2.0 * beta_p.real)
                - xi[:, k + 1] + force_next)
        f_b2 = i_wb * beta_p + i_g0 * n_a_p - gamma_b * beta_p
        alpha += (0.5 * dt) * (f_a + f_a2)
        beta += (0.5 * dt) * (f_b + f_b2)
        force = force_next

        if (k + 1) % _CHECK_EVERY == 0:
            _check_finite(alpha, beta, k + 1, base_seed, indices)

    n_a = alpha.real**2 + alpha.imag**2
    n_b = beta.real**2 + beta.imag**2
    s[:, n - 1] = 2.0 * alpha.real
    sum_n_a[n - 1] = n_a.sum()
    sum_n_b[n - 1] = n_b.sum()
    sum_n_b_sq[n - 1] = np.dot(n_b, n_b)
    _check_finite(alpha, beta, n - 1, base_seed, indices)

    trajectories = None
    if store_series:
        series_a[:, n - 1] = alpha
        series_b[:, n - 1] = beta
        trajectories = [
            Trajectory(grid=grid, alpha=series_a[row].copy(),
                       beta=series_b[row].copy(), seed=base_seed)
            for row in range(m)]

    return BatchOutput(
        indices=tuple(indices), n_steps=n,
        sum_n_a=sum_n_a, sum_n_b=sum_n_b, sum_n_b_sq=sum_n_b_sq,
        terminal_alpha=alpha.copy(), terminal_beta=beta.copy(),
        trajectories=trajectories)


def _check_finite(alpha, beta, step, base_seed, indices):
    n_a = alpha.real**2 + alpha.imag**2
    n_b = beta.real**2 + beta.imag**2
    bad = ~np.isfinite(n_a) | ~np.isfinite(n_b) | (n_a > _BLOWUP_OCC) | (
        n_b > _BLOWUP_OCC)
    if bad.any():
        row = int(np.argmax(bad))
        raise NumericsError(
            f"trajectory {indices[row]} (base seed {base_seed}) diverged "
            f"by step {step}: n_a={n_a[row]:.3e}, n_b={n_b[row]:.3e}")


def simulate_trajectory(params, hot, cold, grid, initial=None, seed=0,
                        numerics=None, trajectory_index=0, setup=None,
                        noise=True):
    """Integrate a single noise realization and return the full series.

    ``seed`` plays the role of the ensemble base seed and
    ``trajectory_index`` selects the same noise streams the trajectory
    would receive inside an ensemble run.
    """
    if setup is None:
        setup = build_setup(params, hot, cold, grid, initial=initial,
                            numerics=numerics)
    out = run_batch(setup, seed, [trajectory_index], store_series=True,
                    noise=noise)
    trajectory = out.trajectories[0]
    return Trajectory(grid=trajectory.grid, alpha=trajectory.alpha,
                      beta=trajectory.beta, seed=seed)
