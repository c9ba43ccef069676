"""Trajectory ensembles with deterministic, order-independent statistics.

Trajectories are grouped into batches whose boundaries sit at fixed global
multiples of ``batch_size``.  Each batch produces streaming partial sums, and
partials are folded in batch-index order, so the final statistics are
bit-identical no matter how many workers ran the batches or in what order
they finished.  Splitting an ensemble is exact only at batch boundaries;
``batch_size`` is therefore part of the reproducibility contract alongside
the base seed.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses

import numpy as np

from .core import EngineConfig, TimeGrid
from .solver import BatchOutput, SolverSetup, build_setup, run_batch


@dataclasses.dataclass(frozen=True)
class EnsembleStats:
    """Time-resolved ensemble moments of the optical and mechanical occupations.

    ``mean_n_a`` and ``mean_n_b`` are ensemble means of |alpha|^2 and |beta|^2
    on the shared grid, ``var_n_b`` the unbiased ensemble variance of |beta|^2,
    and ``terminal_n_b`` the per-trajectory final mechanical occupations.
    """

    grid: TimeGrid
    mean_n_a: np.ndarray
    mean_n_b: np.ndarray
    var_n_b: np.ndarray
    terminal_n_b: np.ndarray
    n_trajectories: int
    base_seed: int

    def __post_init__(self):
        n = self.grid.n_steps
        if len(self.mean_n_a) != n or len(self.mean_n_b) != n or len(self.var_n_b) != n:
            raise ValueError("statistics arrays must share the time grid")
        if len(self.terminal_n_b) != self.n_trajectories:
            raise ValueError("terminal samples must cover every trajectory")
        if self.var_n_b.min() < 0.0:
            raise ValueError("variance must be nonnegative")


def batch_slices(start, stop, batch_size):
    """Index ranges covering [start, stop), cut at global multiples of batch_size."""
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    if stop < start:
        raise ValueError("empty or inverted trajectory range")
    out = []
    lo = start
    while lo < stop:
        hi = min(((lo // batch_size) + 1) * batch_size, stop)
        out.append((lo, hi))
        lo = hi
    return out


_WORKER_SETUP = None
_WORKER_SEED = None


def _worker_init(setup, base_seed):
    global _WORKER_SETUP, _WORKER_SEED
    _WORKER_SETUP = setup
    _WORKER_SEED = base_seed


def _worker_run(lo, hi):
    indices = np.arange(lo, hi)
    return run_batch(_WORKER_SETUP, _WORKER_SEED, indices)


def run_partials(setup, base_seed, start, stop, batch_size, workers=1):
    """Simulate trajectories [start, stop) and return per-batch partial sums.

    The returned list is ordered by batch index regardless of worker count.
    A diverging trajectory aborts the whole run with its seed in the message.
    """
    slices = batch_slices(start, stop, batch_size)
    if workers <= 1 or len(slices) <= 1:
        return [run_batch(setup, base_seed, np.arange(lo, hi)) for lo, hi in slices]
    partials = [None] * len(slices)
    with concurrent.futures.ProcessPoolExecutor(
        max_workers=min(workers, len(slices)),
        initializer=_worker_init,
        initargs=(setup, base_seed),
    ) as pool:
        futures = {pool.submit(_worker_run, lo, hi): j for j, (lo, hi) in enumerate(slices)}
        try:
            for fut in concurrent.futures.as_completed(futures):
                partials[futures[fut]] = fut.result()
        except Exception:
            pool.shutdown(wait=False, cancel_futures=True)
            raise
    return partials


def finalize(grid, partials, base_seed):
    """Fold batch partials (in batch-index order) into ensemble statistics."""
    if not partials:
        raise ValueError("no partials to finalize")
    n = grid.n_steps
    sum_a = np.zeros(n)
    sum_b = np.zeros(n)
    sum_b_sq = np.zeros(n)
    terminal = []
    total = 0
    for part in partials:
        sum_a += part.sum_n_a
        sum_b += part.sum_n_b
        sum_b_sq += part.sum_n_b_sq
        tb = part.terminal_beta
        terminal.append(tb.real**2 + tb.imag**2)
        total += part.n_trajectories
    mean_a = sum_a / total
    mean_b = sum_b / total
    if total > 1:
        # unbiased variance from streaming first and second moments
        var_b = (sum_b_sq - total * mean_b**2) / (total - 1)
        np.maximum(var_b, 0.0, out=var_b)
    else:
        var_b = np.zeros(n)
    return EnsembleStats(
        grid=grid,
        mean_n_a=mean_a,
        mean_n_b=mean_b,
        var_n_b=var_b,
        terminal_n_b=np.concatenate(terminal),
        n_trajectories=total,
        base_seed=base_seed,
    )


def run_ensemble(config: EngineConfig, n_traj=None, base_seed=None, workers=None,
                 batch_size=None, setup=None):
    """Run an ensemble described by ``config`` and return its statistics.

    Trajectory i draws its noise from substreams derived from
    (base_seed, i), so results do not depend on scheduling.  Pass a prebuilt
    ``setup`` to amortize kernel tabulation across related runs.
    """
    ens = config.ensemble
    if n_traj is None:
        n_traj = ens.n_trajectories
    if base_seed is None:
        base_seed = ens.base_seed
    if workers is None:
        workers = ens.workers
    if batch_size is None:
        batch_size = ens.batch_size
    if n_traj < 1:
        raise ValueError("need at least one trajectory")
    if setup is None:
        setup = build_setup(config.params, config.hot, config.cold, config.grid,
                            config.initial, config.numerics)
    partials = run_partials(setup, base_seed, 0, n_traj, batch_size, workers)
    return finalize(config.grid, partials, base_seed)


def trajectory_traces(setup: SolverSetup, base_seed, indices):
    """Re-simulate selected trajectories with full series retained.

    Used for per-trajectory output; the ensemble statistics themselves never
    retain series.
    """
    out = run_batch(setup, base_seed, np.asarray(indices, dtype=np.intp),
                    store_series=True)
    return out.trajectories
