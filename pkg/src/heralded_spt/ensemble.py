"""Deterministic trajectory ensembles.

Trajectories are grouped into fixed-size chunks of consecutive stream ids.
Chunks run on a thread pool (the compiled kernels release the GIL) and
their partial sums are merged in chunk order, so results depend only on the
parameters, the seed range and the chunk size, never on the worker count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import chiral as _chiral
from .kernel import _TABLES, EventTable, _final_chunk, _run_chunk
from .observables import l_grid, periodic_names
from .params import Boundary, Semantics, SimParams
from .rng import stream_states
from .state import INITIAL_CODES

log = logging.getLogger(__name__)

DEFAULT_CHUNK = 32


def geometric_schedule(t_max_sweeps: int, per_decade: int = 20, include_zero: bool = False):
    """Sweep indices spaced evenly in ``log t`` from 1 to ``t_max_sweeps``."""
    if t_max_sweeps < 1:
        return np.array([0] if include_zero else [], dtype=np.int64)
    n = max(2, int(np.ceil(per_decade * np.log10(max(t_max_sweeps, 10)))) + 1)
    s = np.unique(np.round(np.geomspace(1, t_max_sweeps, n)).astype(np.int64))
    return np.concatenate([[0], s]) if include_zero else s


def linear_schedule(t_max_sweeps: int, stride: int = 1, include_zero: bool = False):
    start = 0 if include_zero else stride
    return np.arange(start, t_max_sweeps + 1, stride, dtype=np.int64)


@dataclass
class EnsembleStats:
    """Trajectory-averaged observables with mergeable raw moments."""

    params: SimParams
    sweeps: np.ndarray
    times: np.ndarray
    names: list
    count: int
    total: np.ndarray    # (n_samples, n_obs) sum over trajectories
    total_sq: np.ndarray
    stream_range: tuple
    per_traj: dict = field(default_factory=dict)   # name -> (n_traj, n_samples)

    @property
    def n_traj(self) -> int:
        return self.count

    @property
    def mean(self) -> np.ndarray:
        return self.total / self.count

    @property
    def stderr(self) -> np.ndarray:
        if self.count < 2:
            return np.full_like(self.total, np.nan)
        var = (self.total_sq - self.total**2 / self.count) / (self.count - 1)
        return np.sqrt(np.maximum(var, 0.0) / self.count)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no observable {name!r}; have {self.names[:6]}...") from None

    def series(self, name: str):
        """``(t, mean, stderr)`` arrays for one observable."""
        k = self.index(name)
        return self.times, self.mean[:, k], self.stderr[:, k]

    def merge(self, other: "EnsembleStats") -> "EnsembleStats":
        """Combine two ensembles over adjacent stream ranges (self first)."""
        if self.params.replace(n_traj=1) != other.params.replace(n_traj=1):
            raise ValueError("cannot merge ensembles with different parameters")
        if not np.array_equal(self.sweeps, other.sweeps) or self.names != other.names:
            raise ValueError("cannot merge ensembles with different schedules")
        if self.stream_range[1] != other.stream_range[0]:
            raise ValueError("stream ranges must be adjacent")
        per = {k: np.concatenate([v, other.per_traj[k]])
               for k, v in self.per_traj.items() if k in other.per_traj}
        return EnsembleStats(self.params.replace(n_traj=self.count + other.count),
                             self.sweeps, self.times, self.names, self.count + other.count,
                             self.total + other.total, self.total_sq + other.total_sq,
                             (self.stream_range[0], other.stream_range[1]), per)

    def steady_state(self, name: str, t_min: float):
        """Time average over samples with ``t >= t_min``.

        With per-trajectory data the error is the standard error of the
        per-trajectory time averages. Without it, the mean of the per-sample
        standard errors is returned, an upper bound that assumes full
        temporal correlation.
        """
        sel = self.times >= t_min
        if not sel.any():
            raise ValueError("no samples after t_min")
        if name in self.per_traj:
            avg = self.per_traj[name][:, sel].mean(axis=1)
            return float(avg.mean()), float(avg.std(ddof=1) / np.sqrt(avg.size))
        _, m, s = self.series(name)
        return float(m[sel].mean()), float(s[sel].mean())


def _chunks(start, stop, size):
    return [(a, min(a + size, stop)) for a in range(start, stop, size)]


def _periodic_job(params, sched, ls, want_zeta):
    table = EventTable.from_params(params)
    thr = table.thresholds
    T = _TABLES[params.semantics is Semantics.FULL_CHANNEL]
    kind = INITIAL_CODES[params.initial]
    n_obs = len(periodic_names(ls))

    def job(a, b):
        seeds = stream_states(params.master_seed, range(a, b))
        out = np.empty((b - a, sched.size, n_obs))
        _run_chunk(params.L, kind, thr, T, sched, ls, want_zeta, seeds, out)
        return out

    return job, periodic_names(ls), table.dt_sweep


def _chiral_job(params, sched):
    tl, tr = _chiral.chiral_thresholds(params)
    kind = INITIAL_CODES[params.initial]
    names = _chiral.chiral_names(params.L)

    def job(a, b):
        seeds = stream_states(params.master_seed, range(a, b))
        out = np.empty((b - a, sched.size, len(names)))
        _chiral._chiral_chunk(params.L, kind, tl, tr, sched, seeds, out)
        return out

    return job, names, _chiral.chiral_dt(params)


def run_ensemble(params: SimParams, schedule=None, *, ls=None, want_zeta: bool = False,
                 workers: int = 1, chunk_size: int = DEFAULT_CHUNK, keep=(),
                 stream_range=None) -> EnsembleStats:
    """Run ``params.n_traj`` trajectories (or the stream ids in ``stream_range``).

    ``keep`` names observables whose per-trajectory series are retained,
    e.g. for bootstrap errors or per-trajectory time averages.
    """
    sched = (geometric_schedule(params.t_max_sweeps) if schedule is None
             else np.asarray(schedule, dtype=np.int64))
    if params.boundary is Boundary.PERIODIC:
        ls = l_grid(params.L) if ls is None else np.asarray(ls, dtype=np.int64)
        job, names, dt = _periodic_job(params, sched, ls, want_zeta)
    else:
        _chiral._check(params)
        job, names, dt = _chiral_job(params, sched)
    a0, b0 = (0, params.n_traj) if stream_range is None else map(int, stream_range)
    keep_idx = {name: names.index(name) for name in keep}
    chunks = _chunks(a0, b0, chunk_size)

    total = np.zeros((sched.size, len(names)))
    total_sq = np.zeros_like(total)
    kept = {name: [] for name in keep_idx}

    def reduce(out):
        total[...] += out.sum(axis=0)
        total_sq[...] += (out * out).sum(axis=0)
        for name, k in keep_idx.items():
            kept[name].append(out[:, :, k].copy())

    if workers <= 1:
        for a, b in chunks:
            reduce(job(a, b))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for out in pool.map(lambda ab: job(*ab), chunks):
                reduce(out)
    per = {name: np.concatenate(v) for name, v in kept.items()}
    log.debug("ensemble L=%d eta=%g f_e=%g: %d trajectories", params.L, params.eta,
              params.f_e, b0 - a0)
    return EnsembleStats(params.replace(n_traj=b0 - a0), sched, sched * dt, names,
                         b0 - a0, total, total_sq, (a0, b0), per)


def sample_configs(params: SimParams, sweeps, *, workers: int = 1,
                   chunk_size: int = 4096, stream_range=None) -> np.ndarray:
    """Encoded configurations of every trajectory at the given sweep counts.

    Returns an ``(n_traj, len(sweeps))`` integer array using the index
    convention of :mod:`heralded_spt.exact`.
    """
    sweeps = np.asarray(sweeps, dtype=np.int64)
    if sweeps.size and np.any(np.diff(sweeps) < 0):
        raise ValueError("sweeps must be non-decreasing")
    kind = INITIAL_CODES[params.initial]
    if params.boundary is Boundary.PERIODIC:
        thr = EventTable.from_params(params).thresholds
        T = _TABLES[params.semantics is Semantics.FULL_CHANNEL]

        def job(a, b):
            out = np.empty((b - a, sweeps.size), dtype=np.int64)
            _final_chunk(params.L, kind, thr, T, sweeps,
                         stream_states(params.master_seed, range(a, b)), out)
            return out
    else:
        _chiral._check(params)
        tl, tr = _chiral.chiral_thresholds(params)

        def job(a, b):
            out = np.empty((b - a, sweeps.size), dtype=np.int64)
            _chiral._chiral_final_chunk(params.L, kind, tl, tr, sweeps,
                                        stream_states(params.master_seed, range(a, b)), out)
            return out

    a0, b0 = (0, params.n_traj) if stream_range is None else map(int, stream_range)
    chunks = _chunks(a0, b0, chunk_size)
    if workers <= 1:
        parts = [job(a, b) for a, b in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ab: job(*ab), chunks))
    return np.concatenate(parts) if parts else np.empty((0, sweeps.size), dtype=np.int64)
