"""Open-chain protocol with centre-biased defect hopping (no erasure flags).

The simulated sublattice has cells ``0 .. L-1``. Cell 0 (physical site
``0 == 2L``) is the noiseless boundary stabilizer and never changes;
defects live on the active cells ``1 .. L-1``. Bond ``b``
(``1 <= b <= L-2``, physical qubit ``2b+1``) joins cells ``b`` and ``b+1``
and carries three processes:

* noise: toggle both cells, rate ``eta``;
* hop left: if cell ``b+1`` holds a defect, toggle both cells;
* hop right: if cell ``b`` holds a defect, toggle both cells.

A hop onto an occupied cell therefore annihilates the pair. Hops towards
the chain centre run at ``gamma (1 + mu) / 2`` and away from it at
``gamma (1 - mu) / 2``. Bond ``b`` counts as left half when its qubit
index satisfies ``2b + 1 <= L``. For even ``L`` the chain is then mirror
symmetric about cell ``L/2`` (cell ``i`` <-> ``L - i``).

A sweep is ``L - 2`` random-sequential steps and advances time by
``1 / (eta + 2 gamma)``; the remaining probability per step is idle.
"""

from __future__ import annotations

import numba as nb
import numpy as np

from .kernel import TimeSeries, integer_thresholds
from .observables import _centered_string_orders
from .params import Boundary, ParameterError, SimParams
from .rng import RngStream, next_u64
from .state import INITIAL_CODES, SublatticeState, _init_arrays

NOISE, HOP_LEFT, HOP_RIGHT, IDLE = 0, 1, 2, 3


def _check(params):
    if params.boundary is not Boundary.CHIRAL_OPEN:
        raise ParameterError("the chiral kernel needs boundary=chiral-open")
    if params.L < 4:
        raise ParameterError("the chiral chain needs L >= 4")
    if params.f_e != 1.0:
        raise ParameterError("the chiral protocol has no heralding; leave f_e at 1")


def n_bonds(L: int) -> int:
    return L - 2


def is_left_half(b: int, L: int) -> bool:
    return 2 * b + 1 <= L


def bond_rates(params: SimParams, left: bool) -> np.ndarray:
    """Rates (noise, hop left, hop right, idle) on a bond in the given half."""
    slow = params.gamma * (1 - params.mu) / 2
    fast = params.gamma * (1 + params.mu) / 2
    if left:
        return np.array([params.eta, slow, fast, 0.0])
    return np.array([params.eta, fast, slow, 0.0])


def chiral_dt(params: SimParams) -> float:
    return 1.0 / (params.eta + 2 * params.gamma)


def chiral_probs(params: SimParams, left: bool) -> np.ndarray:
    p = bond_rates(params, left) / (params.eta + 2 * params.gamma)
    p[IDLE] = 1.0 - p[:IDLE].sum()
    return p


@nb.njit(nogil=True, cache=True, inline="always")
def _apply_chiral_event(d, b, ev):
    if ev == 0 or (ev == 1 and d[b + 1] == 1) or (ev == 2 and d[b] == 1):
        d[b] ^= 1
        d[b + 1] ^= 1


@nb.njit(nogil=True, cache=True)
def _chiral_sweep(d, thr_left, thr_right, rng):
    L = d.size
    nb_ = L - 2
    for _ in range(nb_):
        x = next_u64(rng)
        b = 1 + np.int64(((x >> np.uint64(32)) * np.uint64(nb_)) >> np.uint64(32))
        u = x & np.uint64(0xFFFFFFFF)
        thr = thr_left if 2 * b + 1 <= L else thr_right
        ev = 0
        for j in range(3):
            ev += u >= thr[j]
        _apply_chiral_event(d, b, ev)


@nb.njit(nogil=True, cache=True)
def _chiral_measure(d, row, kmax):
    L = d.size
    nd = 0
    for i in range(1, L):
        nd += d[i]
    row[0] = nd / (L - 1)
    _centered_string_orders(d, row[1:1 + kmax])
    for i in range(L):
        row[1 + kmax + i] = d[i]


@nb.njit(nogil=True, cache=True)
def _chiral_run(d, thr_left, thr_right, sample_sweeps, rng, out):
    kmax = (out.shape[1] - 1 - d.size)
    sweep = 0
    for s in range(sample_sweeps.size):
        while sweep < sample_sweeps[s]:
            _chiral_sweep(d, thr_left, thr_right, rng)
            sweep += 1
        _chiral_measure(d, out[s], kmax)


@nb.njit(nogil=True, cache=True)
def _chiral_chunk(L, init_kind, thr_left, thr_right, sample_sweeps, seeds, out):
    d = np.zeros(L, dtype=np.uint8)
    e = np.zeros(L, dtype=np.uint8)
    rng = np.empty(4, dtype=np.uint64)
    for k in range(seeds.shape[0]):
        rng[:] = seeds[k]
        _init_arrays(d, e, init_kind, True, rng)
        _chiral_run(d, thr_left, thr_right, sample_sweeps, rng, out[k])


def chiral_names(L: int) -> list[str]:
    return (["n_d"] + [f"omega_c_{k}" for k in range(1, L // 2 + 1)]
            + [f"profile_{i}" for i in range(L)])


def chiral_thresholds(params: SimParams):
    return (integer_thresholds(chiral_probs(params, True)),
            integer_thresholds(chiral_probs(params, False)))


def qubit_to_bond(j: int) -> int:
    """Bond index of physical qubit ``j`` (odd, ``3 <= j <= 2L-3``) on the simulated sublattice."""
    if j % 2 == 0:
        raise ValueError("qubits acting on the simulated sublattice have odd index")
    return (j - 1) // 2


def chiral_event(state: SublatticeState, bond: int, event: int) -> SublatticeState:
    """Apply one event on bond ``bond`` (joining cells ``bond`` and ``bond+1``).

    ``event`` is one of ``NOISE``, ``HOP_LEFT``, ``HOP_RIGHT``, ``IDLE``.
    """
    if state.boundary is not Boundary.CHIRAL_OPEN:
        raise ValueError("state is not on the chiral-open chain")
    if not 1 <= bond <= state.L - 2:
        raise ValueError(f"bond must lie in [1, L-2], got {bond}")
    new = state.copy()
    _apply_chiral_event(new.d, int(bond), int(event))
    return new


def chiral_sweep(state: SublatticeState, params: SimParams, rng: RngStream) -> SublatticeState:
    _check(params)
    new = state.copy()
    tl, tr = chiral_thresholds(params)
    _chiral_sweep(new.d, tl, tr, rng.state)
    new.time += chiral_dt(params)
    return new


def run_chiral(params: SimParams, rng: RngStream, schedule) -> TimeSeries:
    """One chiral-chain trajectory with density, centred string orders and the defect profile."""
    _check(params)
    sched = np.asarray(schedule, dtype=np.int64)
    L = params.L
    d = np.zeros(L, dtype=np.uint8)
    e = np.zeros(L, dtype=np.uint8)
    _init_arrays(d, e, INITIAL_CODES[params.initial], True, rng.state)
    names = chiral_names(L)
    out = np.empty((sched.size, len(names)))
    tl, tr = chiral_thresholds(params)
    _chiral_run(d, tl, tr, sched, rng.state, out)
    return TimeSeries(sched, sched * chiral_dt(params), names, out)


@nb.njit(nogil=True, cache=True)
def _chiral_final_chunk(L, init_kind, thr_left, thr_right, n_sweeps, seeds, out):
    d = np.zeros(L, dtype=np.uint8)
    e = np.zeros(L, dtype=np.uint8)
    rng = np.empty(4, dtype=np.uint64)
    for k in range(seeds.shape[0]):
        rng[:] = seeds[k]
        _init_arrays(d, e, init_kind, True, rng)
        for s in range(n_sweeps.size):
            for _ in range(n_sweeps[s] - (n_sweeps[s - 1] if s else 0)):
                _chiral_sweep(d, thr_left, thr_right, rng)
            c = 0
            for i in range(1, L):
                c |= np.int64(d[i]) << (i - 1)
            out[k, s] = c
