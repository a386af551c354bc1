"""Observables measured on a sublattice configuration.

The compiled helpers (leading underscore) take raw ``uint8`` arrays and
are called from inside the Monte Carlo kernels; the public functions wrap
them for :class:`~heralded_spt.state.SublatticeState` objects.
"""

from __future__ import annotations

import numba as nb
import numpy as np

from .params import Boundary
from .state import SublatticeState


@nb.njit(nogil=True, cache=True)
def _string_order(d, l):
    """Spatial average over all ``L`` windows of length ``l`` of the defect parity."""
    L = d.size
    par = 0
    for k in range(l):
        par ^= d[k % L]
    acc = 0
    for i in range(L):
        acc += 1 - 2 * par
        par ^= d[i] ^ d[(i + l) % L]
    return acc / L


@nb.njit(nogil=True, cache=True)
def _erasure_correlator(e, l):
    L = e.size
    acc = 0
    for i in range(L):
        acc += (1 - e[i]) * (1 - e[(i + l) % L])
    return acc / L


@nb.njit(nogil=True, cache=True)
def _unheralded_density(d, e):
    L = d.size
    acc = 0
    for m in range(L):
        mr = m + 1 if m + 1 < L else 0
        acc += d[m] * (1 - e[m]) * (1 - e[mr])
    return acc / L


@nb.njit(nogil=True, cache=True)
def _ring_dist(a, b, L):
    x = abs(a - b)
    return min(x, L - x)


@nb.njit(nogil=True, cache=True)
def _zeta(d):
    """Largest pair separation in the minimum-weight matching of defects on the ring.

    For points on a ring with geodesic distance the optimal perfect matching
    is one of the two that pair cyclically consecutive defects. On a cost tie
    the pairing (p0,p1),(p2,p3),... wins, being lexicographically smaller.
    Returns -1 for an odd number of defects.
    """
    L = d.size
    n = 0
    for m in range(L):
        n += d[m]
    if n == 0:
        return 0
    if n % 2:
        return -1
    pos = np.empty(n, dtype=np.int64)
    k = 0
    for m in range(L):
        if d[m]:
            pos[k] = m
            k += 1
    cost_a = 0
    max_a = 0
    cost_b = 0
    max_b = 0
    for k in range(0, n, 2):
        da = _ring_dist(pos[k], pos[k + 1], L)
        db = _ring_dist(pos[k + 1], pos[(k + 2) % n], L)
        cost_a += da
        cost_b += db
        max_a = max(max_a, da)
        max_b = max(max_b, db)
    return max_a if cost_a <= cost_b else max_b


@nb.njit(nogil=True, cache=True)
def _centered_string_orders(d, out):
    """``out[k-1] = prod_{i=k}^{L-k} (1 - 2 d[i])`` for ``k = 1 .. len(out)``.

    Built from the outside in: shrinking the window by one cell per side.
    """
    L = d.size
    par = 0
    for i in range(1, L):
        par ^= d[i]
    for k in range(1, out.size + 1):
        out[k - 1] = 1 - 2 * par
        # drop cells k and L-k before moving to k+1
        if k <= L - k:
            par ^= d[k]
            if L - k != k:
                par ^= d[L - k]


def _require_periodic(state):
    if state.boundary is not Boundary.PERIODIC:
        raise ValueError("observable is defined for the periodic kernel only")


def string_order(state: SublatticeState, l: int) -> float:
    """Window-averaged string order of length ``l`` (periodic chain)."""
    _require_periodic(state)
    if not 1 <= l <= state.L:
        raise ValueError(f"need 1 <= l <= L, got {l}")
    return float(_string_order(state.d, l))


def erasure_correlator(state: SublatticeState, l: int) -> float:
    """``(1/L) sum_i (1 - e[i]) (1 - e[i+l])``: flag-free probability at both ends of a window."""
    _require_periodic(state)
    return float(_erasure_correlator(state.e, l % state.L))


def unheralded_density(state: SublatticeState) -> float:
    """Density of defects with no flag on either neighbouring qubit."""
    _require_periodic(state)
    return float(_unheralded_density(state.d, state.e))


def zeta(state: SublatticeState) -> int:
    """Largest matched-pair separation under minimum-weight pairing of the defects."""
    _require_periodic(state)
    z = int(_zeta(state.d))
    if z < 0:
        raise ValueError("odd number of defects: the strong-symmetry sector is violated")
    return z


def centered_string_orders(state: SublatticeState, kmax: int | None = None) -> np.ndarray:
    """Chiral-chain string orders ``Omega_{k,L-k}`` for ``k = 1 .. kmax``."""
    kmax = state.L // 2 if kmax is None else kmax
    out = np.empty(kmax, dtype=np.float64)
    _centered_string_orders(state.d, out)
    return out


def l_grid(L: int) -> np.ndarray:
    """Window lengths 1, 2, 4, ... below L/2, then L/2 and L."""
    ls = []
    l = 1
    while l < L // 2:
        ls.append(l)
        l *= 2
    ls += [L // 2, L]
    return np.array(sorted(set(ls)), dtype=np.int64)


def periodic_names(ls) -> list[str]:
    return (["n_e", "n_d", "h", "zeta"] + [f"omega_{l}" for l in ls]
            + [f"corr_e_{l}" for l in ls])
