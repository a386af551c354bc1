"""Random-sequential Monte Carlo kernel for the periodic chain.

One elementary step picks a cell uniformly and one event from
:class:`EventTable`; a sweep is ``L`` steps and advances time by
``1/(eta + 4 gamma)``. Flags and defects evolve under biased erasure
noise, unheralded ``Z`` noise and the flag-guided correction moves.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numba as nb
import numpy as np

from .observables import (_erasure_correlator, _string_order, _unheralded_density,
                          _zeta, l_grid, periodic_names)
from .params import Boundary, ParameterError, Semantics, SimParams
from .rng import RngStream, next_u64
from .state import INITIAL_CODES, SublatticeState, _init_arrays


class EventKind(enum.IntEnum):
    NOISE_SYNDROME = 0
    NOISE_SILENT = 1
    CORR_LEFT = 2
    CORR_RIGHT = 3
    FLAGDROP_LEFT = 4
    FLAGDROP_RIGHT = 5
    UNHERALDED = 6
    IDLE = 7


N_EVENTS = 8


def event_rates(params: SimParams) -> np.ndarray:
    """Continuous-time rate of each event kind at one cell."""
    eta, gamma, fe = params.eta, params.gamma, params.f_e
    return np.array([eta * fe / 2, eta * fe / 2, gamma, gamma, gamma, gamma,
                     eta * (1 - fe), 0.0])


@dataclass(frozen=True)
class EventTable:
    probs: np.ndarray
    dt_sweep: float

    @classmethod
    def from_params(cls, params: SimParams) -> "EventTable":
        total = params.eta + 4 * params.gamma
        c0 = 1.0 / total
        # divide rather than multiply by c0, which overflows for subnormal rates
        p = event_rates(params) / total
        p[EventKind.IDLE] = 1.0 - p[:EventKind.IDLE].sum()
        if p[EventKind.IDLE] < 0:
            if p[EventKind.IDLE] < -1e-12:
                raise ParameterError("event probabilities exceed one")
            p[EventKind.IDLE] = 0.0
        return cls(p, c0)

    @property
    def thresholds(self) -> np.ndarray:
        return integer_thresholds(self.probs)


@nb.njit(nogil=True, cache=True)
def _apply_event(d, e, m, ev, full):
    L = d.size
    ml = m - 1 if m > 0 else L - 1
    mr = m + 1 if m + 1 < L else 0
    if ev == 0:
        if e[m] == 0:
            e[m] = 1
            d[ml] ^= 1
            d[m] ^= 1
        elif full:
            d[ml] ^= 1
            d[m] ^= 1
    elif ev == 1:
        e[m] = 1
    elif ev == 2:
        if e[m] == 1 and d[m] == 1 and e[mr] == 0:
            e[m] = 0
            d[ml] ^= 1
            d[m] ^= 1
    elif ev == 3:
        if e[mr] == 1 and d[m] == 1 and e[m] == 0:
            e[mr] = 0
            d[m] ^= 1
            d[mr] ^= 1
    elif ev == 4:
        if e[m] == 1 and d[m] == 0 and e[mr] == 0:
            e[m] = 0
    elif ev == 5:
        if e[mr] == 1 and d[m] == 0 and e[m] == 0:
            e[mr] = 0
    elif ev == 6:
        d[ml] ^= 1
        d[m] ^= 1


def transition_table(full: bool) -> np.ndarray:
    """Lookup table ``T[event, local] -> local'`` derived from :func:`_apply_event`.

    ``local`` packs the five bits an event can read or write at cell ``m``:
    ``d[m-1] | d[m] << 1 | d[m+1] << 2 | e[m] << 3 | e[m+1] << 4``.
    """
    T = np.zeros((N_EVENTS, 32), dtype=np.uint8)
    d = np.zeros(3, dtype=np.uint8)
    e = np.zeros(3, dtype=np.uint8)
    for ev in range(N_EVENTS):
        for c in range(32):
            d[:] = (c & 1, (c >> 1) & 1, (c >> 2) & 1)
            e[:] = (0, (c >> 3) & 1, (c >> 4) & 1)
            _apply_event(d, e, 1, ev, full)
            T[ev, c] = d[0] | d[1] << 1 | d[2] << 2 | e[1] << 3 | e[2] << 4
    return T


_TABLES = {False: transition_table(False), True: transition_table(True)}


def integer_thresholds(probs) -> np.ndarray:
    """Cumulative event thresholds on the 32-bit integer scale.

    The event index for a uniform 32-bit word ``u`` is the number of
    thresholds ``<= u``; probabilities are thus resolved to ``2**-32``.
    """
    cum = np.cumsum(np.asarray(probs, dtype=np.float64))[:-1]
    return np.minimum(np.round(cum * 2.0**32), 2.0**32).astype(np.uint64)


@nb.njit(nogil=True, cache=True)
def _sweep(d, e, thr, T, rng):
    L = d.size
    for _ in range(L):
        x = next_u64(rng)
        m = np.int64(((x >> np.uint64(32)) * np.uint64(L)) >> np.uint64(32))
        u = x & np.uint64(0xFFFFFFFF)
        ev = 0
        for j in range(N_EVENTS - 1):
            ev += u >= thr[j]
        ml = m - 1 if m > 0 else L - 1
        mr = m + 1 if m + 1 < L else 0
        c = d[ml] | (d[m] << 1) | (d[mr] << 2) | (e[m] << 3) | (e[mr] << 4)
        c2 = T[ev, c]
        d[ml] = c2 & 1
        d[m] = (c2 >> 1) & 1
        d[mr] = (c2 >> 2) & 1
        e[m] = (c2 >> 3) & 1
        e[mr] = (c2 >> 4) & 1


@nb.njit(nogil=True, cache=True)
def _measure(d, e, ls, want_zeta, row):
    L = d.size
    ne = 0
    nd = 0
    for m in range(L):
        ne += e[m]
        nd += d[m]
    row[0] = ne / L
    row[1] = nd / L
    row[2] = _unheralded_density(d, e)
    row[3] = _zeta(d) if want_zeta else 0.0
    nl = ls.size
    for k in range(nl):
        row[4 + k] = _string_order(d, ls[k])
        row[4 + nl + k] = _erasure_correlator(e, ls[k] % L)


@nb.njit(nogil=True, cache=True)
def _run(d, e, thr, T, sample_sweeps, ls, want_zeta, rng, out):
    sweep = 0
    for s in range(sample_sweeps.size):
        target = sample_sweeps[s]
        while sweep < target:
            _sweep(d, e, thr, T, rng)
            sweep += 1
        _measure(d, e, ls, want_zeta, out[s])
    return sweep


@nb.njit(nogil=True, cache=True)
def _run_chunk(L, init_kind, thr, T, sample_sweeps, ls, want_zeta, seeds, out):
    d = np.zeros(L, dtype=np.uint8)
    e = np.zeros(L, dtype=np.uint8)
    rng = np.empty(4, dtype=np.uint64)
    for k in range(seeds.shape[0]):
        rng[:] = seeds[k]
        _init_arrays(d, e, init_kind, False, rng)
        _run(d, e, thr, T, sample_sweeps, ls, want_zeta, rng, out[k])


def _check_periodic(params):
    if params.boundary is not Boundary.PERIODIC:
        raise ParameterError("the periodic kernel needs boundary=periodic")


def mc_event(state: SublatticeState, cell: int, event: EventKind,
             semantics: Semantics = Semantics.AS_PUBLISHED) -> SublatticeState:
    """Apply one event at ``cell`` and return the new state (input untouched)."""
    new = state.copy()
    _apply_event(new.d, new.e, int(cell) % state.L, int(event),
                 Semantics(semantics) is Semantics.FULL_CHANNEL)
    return new


def mc_sweep(state: SublatticeState, table: EventTable, rng: RngStream,
             semantics: Semantics = Semantics.AS_PUBLISHED) -> SublatticeState:
    """One sweep of ``L`` random-sequential steps; the input is left untouched."""
    new = state.copy()
    _sweep(new.d, new.e, table.thresholds,
           _TABLES[Semantics(semantics) is Semantics.FULL_CHANNEL], rng.state)
    new.time += table.dt_sweep
    return new


@dataclass
class TimeSeries:
    """Observables sampled along one trajectory (or an ensemble mean)."""

    sweeps: np.ndarray
    times: np.ndarray
    names: list
    values: np.ndarray  # (n_samples, n_obs)

    def __getitem__(self, name):
        return self.values[:, self.names.index(name)]


def run_trajectory(params: SimParams, rng: RngStream, schedule, ls=None,
                   want_zeta: bool = True) -> TimeSeries:
    """Simulate one trajectory, sampling observables at the sweep indices in ``schedule``."""
    _check_periodic(params)
    sched = np.asarray(schedule, dtype=np.int64)
    if sched.size and np.any(np.diff(sched) < 0):
        raise ValueError("schedule must be non-decreasing")
    ls = l_grid(params.L) if ls is None else np.asarray(ls, dtype=np.int64)
    table = EventTable.from_params(params)
    d = np.zeros(params.L, dtype=np.uint8)
    e = np.zeros(params.L, dtype=np.uint8)
    _init_arrays(d, e, INITIAL_CODES[params.initial], False, rng.state)
    names = periodic_names(ls)
    out = np.empty((sched.size, len(names)))
    _run(d, e, table.thresholds, _TABLES[params.semantics is Semantics.FULL_CHANNEL],
         sched, ls, want_zeta, rng.state, out)
    return TimeSeries(sched, sched * table.dt_sweep, names, out)


@nb.njit(nogil=True, cache=True)
def _encode(d, e):
    L = d.size
    c = 0
    for j in range(L):
        c |= np.int64(d[j]) << j
        c |= np.int64(e[j]) << (L + j)
    return c


@nb.njit(nogil=True, cache=True)
def _final_chunk(L, init_kind, thr, T, n_sweeps, seeds, out):
    d = np.zeros(L, dtype=np.uint8)
    e = np.zeros(L, dtype=np.uint8)
    rng = np.empty(4, dtype=np.uint64)
    for k in range(seeds.shape[0]):
        rng[:] = seeds[k]
        _init_arrays(d, e, init_kind, False, rng)
        for s in range(n_sweeps.size):
            for _ in range(n_sweeps[s] - (n_sweeps[s - 1] if s else 0)):
                _sweep(d, e, thr, T, rng)
            out[k, s] = _encode(d, e)
