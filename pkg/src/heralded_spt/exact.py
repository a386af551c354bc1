"""Exact Markov generator over all configurations of a small chain.

Periodic chain: configuration index ``c`` holds ``d[m]`` at bit ``m`` and
``e[m]`` at bit ``L + m``. Chiral chain: only the active cells ``1 .. L-1``
are encoded, cell ``i`` at bit ``i - 1`` (the frozen cell 0 is zero). The
``"even"`` sector keeps configurations with an even number of defects,
which the dynamics never leaves.

The generator acts on column vectors, ``dp/dt = M p``, and is assembled
from the same transition functions the Monte Carlo kernels use.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numba as nb
import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import expm_multiply

from .chiral import _apply_chiral_event, bond_rates, chiral_dt
from .kernel import N_EVENTS, _apply_event, event_rates
from .params import Boundary, NumericalError, ParameterError, Semantics, SimParams

log = logging.getLogger(__name__)

MAX_L_PERIODIC = 8
MAX_L_CHIRAL = 17
MAX_DENSE = 4096
SECTORS = ("even", "full")


@nb.njit(cache=True)
def _periodic_targets(L, configs, full):
    """``out[k, m, ev]`` = configuration reached from ``configs[k]`` by event ``ev`` at cell ``m``."""
    n = configs.size
    out = np.empty((n, L, N_EVENTS), dtype=np.int64)
    d = np.empty(L, dtype=np.uint8)
    e = np.empty(L, dtype=np.uint8)
    for k in range(n):
        for m in range(L):
            for ev in range(N_EVENTS):
                c = configs[k]
                for j in range(L):
                    d[j] = (c >> j) & 1
                    e[j] = (c >> (L + j)) & 1
                _apply_event(d, e, m, ev, full)
                c2 = 0
                for j in range(L):
                    c2 |= np.int64(d[j]) << j
                    c2 |= np.int64(e[j]) << (L + j)
                out[k, m, ev] = c2
    return out


@nb.njit(cache=True)
def _chiral_targets(L, configs):
    """``out[k, b-1, ev]`` for bond ``b`` and events noise / hop left / hop right."""
    n = configs.size
    out = np.empty((n, L - 2, 3), dtype=np.int64)
    d = np.zeros(L, dtype=np.uint8)
    for k in range(n):
        for b in range(1, L - 1):
            for ev in range(3):
                c = configs[k]
                for i in range(1, L):
                    d[i] = (c >> (i - 1)) & 1
                _apply_chiral_event(d, b, ev)
                c2 = 0
                for i in range(1, L):
                    c2 |= np.int64(d[i]) << (i - 1)
                out[k, b - 1, ev] = c2
    return out


def _popcount_parity(values, nbits):
    par = np.zeros(values.shape, dtype=np.int64)
    for j in range(nbits):
        par ^= (values >> j) & 1
    return par


@dataclass
class RateMatrix:
    """Sparse generator plus the index map between configurations and matrix rows.

    ``step_matrix`` is the one-step transition matrix of the random-sequential
    Monte Carlo chain, ``I + (dt_step / n_sites) M``, and one sweep applies it
    ``steps_per_sweep`` times.
    """

    M: sp.csc_matrix
    configs: np.ndarray   # configuration integer of each row
    L: int
    boundary: Boundary
    sector: str
    params: SimParams
    dt_step: float
    steps_per_sweep: int

    @property
    def dim(self) -> int:
        return self.configs.size

    @property
    def n_bits(self) -> int:
        return 2 * self.L if self.boundary is Boundary.PERIODIC else self.L - 1

    def index(self, config: int) -> int:
        k = np.searchsorted(self.configs, config)
        if k >= self.dim or self.configs[k] != config:
            raise KeyError(f"configuration {config:#x} is not in the {self.sector} sector")
        return int(k)

    def indices(self, configs) -> np.ndarray:
        configs = np.asarray(configs, dtype=np.int64)
        k = np.searchsorted(self.configs, configs)
        k = np.minimum(k, self.dim - 1)
        if np.any(self.configs[k] != configs):
            raise KeyError("some configurations are outside the sector")
        return k

    def bits(self) -> tuple[np.ndarray, np.ndarray]:
        """``(d, e)`` arrays of shape ``(dim, L)`` (``e`` is zero on the chiral chain)."""
        c = self.configs[:, None]
        L = self.L
        if self.boundary is Boundary.PERIODIC:
            j = np.arange(L)
            return ((c >> j) & 1).astype(np.uint8), ((c >> (L + j)) & 1).astype(np.uint8)
        d = np.zeros((self.dim, L), dtype=np.uint8)
        d[:, 1:L] = (c >> np.arange(L - 1)) & 1
        return d, np.zeros_like(d)

    def dense(self) -> np.ndarray:
        return self.M.toarray()

    def column_sums(self) -> np.ndarray:
        return np.asarray(self.M.sum(axis=0)).ravel()

    def step_matrix(self) -> sp.csc_matrix:
        n_sites = self.L if self.boundary is Boundary.PERIODIC else self.L - 2
        return (sp.identity(self.dim, format="csc")
                + (self.dt_step / n_sites) * self.M).tocsc()

    def delta(self, config: int = 0) -> np.ndarray:
        p = np.zeros(self.dim)
        p[self.index(config)] = 1.0
        return p

    def uniform_even_defects(self) -> np.ndarray:
        """Uniform distribution over even-parity defect patterns with no flags."""
        d, e = self.bits()
        mask = (e.sum(axis=1) == 0) & (d.sum(axis=1) % 2 == 0)
        return mask / mask.sum()

    def expect(self, p, fn) -> float:
        """``sum_c p(c) fn(d_c, e_c)`` with ``fn`` vectorized over rows."""
        d, e = self.bits()
        return float(np.dot(p, fn(d, e)))


def build_generator(params: SimParams, sector: str = "even") -> RateMatrix:
    """Assemble the generator for ``params`` in the ``"even"`` or ``"full"`` sector."""
    if sector not in SECTORS:
        raise ParameterError(f"sector must be one of {SECTORS}, got {sector!r}")
    L = params.L
    if params.boundary is Boundary.PERIODIC:
        if L > MAX_L_PERIODIC:
            raise ParameterError(f"exact generator supports L <= {MAX_L_PERIODIC}")
        nbits = 2 * L
        allc = np.arange(1 << nbits, dtype=np.int64)
        if sector == "even":
            allc = allc[_popcount_parity(allc & ((1 << L) - 1), L) == 0]
        full = params.semantics is Semantics.FULL_CHANNEL
        tgt = _periodic_targets(L, allc, full)
        rates = event_rates(params)
        rate = np.broadcast_to(rates[None, None, :], tgt.shape)
        dt_step = 1.0 / (params.eta + 4 * params.gamma)
        steps = L
    else:
        if L > MAX_L_CHIRAL or L < 4:
            raise ParameterError(f"chiral exact generator supports 4 <= L <= {MAX_L_CHIRAL}")
        nbits = L - 1
        allc = np.arange(1 << nbits, dtype=np.int64)
        if sector == "even":
            allc = allc[_popcount_parity(allc, nbits) == 0]
        tgt = _chiral_targets(L, allc)
        left = np.array([2 * b + 1 <= L for b in range(1, L - 1)])
        rl = bond_rates(params, True)[:3]
        rr = bond_rates(params, False)[:3]
        per_bond = np.where(left[:, None], rl[None, :], rr[None, :])
        rate = np.broadcast_to(per_bond[None, :, :], tgt.shape)
        dt_step = chiral_dt(params)
        steps = L - 2
    n = allc.size
    src = np.broadcast_to(np.arange(n)[:, None, None], tgt.shape).ravel()
    dst_conf = tgt.ravel()
    w = np.ascontiguousarray(rate).ravel()
    move = (dst_conf != allc[src]) & (w > 0)
    dst = np.searchsorted(allc, dst_conf[move])
    if np.any(allc[np.minimum(dst, n - 1)] != dst_conf[move]):
        raise NumericalError("generator leaves the configuration sector")
    off = sp.coo_matrix((w[move], (dst, src[move])), shape=(n, n)).tocsc()
    out_rate = np.asarray(off.sum(axis=0)).ravel()
    M = (off - sp.diags(out_rate)).tocsc()
    return RateMatrix(M, allc, L, params.boundary, sector, params, dt_step, steps)


@dataclass
class Spectrum:
    values: np.ndarray    # sorted by descending real part
    right: np.ndarray     # columns
    left: np.ndarray      # columns, M^T l = conj(lambda) l
    residuals: np.ndarray

    def gap(self, n_zero: int = 1) -> complex:
        """First eigenvalue after the ``n_zero`` stationary modes."""
        return self.values[n_zero]


def spectrum(rm: RateMatrix, k: int | None = None, tol: float = 1e-8) -> Spectrum:
    """Dense eigendecomposition; the ``k`` eigenvalues with largest real part.

    Raises :class:`NumericalError` when the leading eigenvalue is not zero
    within ``1e-10``, an eigenvalue has positive real part beyond ``1e-10``,
    or a residual ``|M r - lambda r|`` exceeds ``tol`` times ``|M|``.
    """
    if rm.dim > MAX_DENSE:
        raise ParameterError(f"dense spectrum limited to dim <= {MAX_DENSE}, got {rm.dim}")
    A = rm.dense()
    vals, left, right = scipy.linalg.eig(A, left=True, right=True)
    order = np.lexsort((np.abs(vals.imag), -vals.real))
    vals, left, right = vals[order], left[:, order], right[:, order]
    if k is not None:
        vals, left, right = vals[:k], left[:, :k], right[:, :k]
    norm = np.abs(A).sum(axis=0).max()
    res = np.linalg.norm(A @ right - right * vals, axis=0)
    if vals.real.max() > 1e-10 or abs(vals[0]) > 1e-10:
        raise NumericalError(f"leading eigenvalue {vals[0]:.3g} is not zero; residuals {res[:3]}")
    if np.any(res > tol * max(norm, 1.0)):
        raise NumericalError(f"eigensolver residuals too large: max {res.max():.3g}")
    return Spectrum(vals, right, left, res)


def closed_classes(rm: RateMatrix) -> list[np.ndarray]:
    """Recurrent classes: strongly connected sets with no outgoing rate."""
    A = rm.M.copy()
    A.setdiag(0)
    A.eliminate_zeros()
    # edge j -> i when M[i, j] > 0, so use the transpose as adjacency
    adj = A.T.tocsr()
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    leaves = np.ones(n_comp, dtype=bool)
    rows, cols = adj.nonzero()
    leaves[labels[rows][labels[rows] != labels[cols]]] = False
    return [np.flatnonzero(labels == c) for c in np.flatnonzero(leaves)]


def steady_states(rm: RateMatrix, tol: float = 1e-9) -> list[np.ndarray]:
    """Extremal stationary distributions, one per recurrent class.

    Each is the normalized kernel vector of ``M`` restricted to its class.
    The count is cross-checked against the number of eigenvalues with
    ``|lambda| < tol`` when the matrix is small enough for a dense solve;
    a larger numerical kernel means ``tol`` is too loose and raises.
    """
    out = []
    for cls in closed_classes(rm):
        if cls.size == 1:
            p = np.zeros(rm.dim)
            p[cls[0]] = 1.0
            out.append(p)
            continue
        sub = rm.M[cls][:, cls].toarray()
        ns = scipy.linalg.null_space(sub, rcond=1e-10)
        if ns.shape[1] != 1:
            raise NumericalError(f"recurrent class of size {cls.size} has kernel {ns.shape[1]}")
        v = np.abs(ns[:, 0])
        p = np.zeros(rm.dim)
        p[cls] = v / v.sum()
        out.append(p)
    if rm.dim <= MAX_DENSE:
        vals = scipy.linalg.eigvals(rm.dense())
        n_num = int(np.sum(np.abs(vals) < tol))
        if n_num > len(out):
            raise NumericalError(f"{n_num} eigenvalues below tol={tol:g} but {len(out)} "
                                 "recurrent classes; tol is too loose")
    return out


def _check_distribution(p, what):
    if p.min() < -1e-12 or abs(p.sum() - 1) > 1e-10:
        raise NumericalError(f"{what}: not a probability vector "
                             f"(min {p.min():.3g}, sum - 1 = {p.sum() - 1:.3g})")


def evolve_exact(rm: RateMatrix, p0, t: float) -> np.ndarray:
    """Continuous-time evolution ``exp(M t) p0`` (scipy's ``expm_multiply``)."""
    if t < 0:
        raise ParameterError("t must be non-negative")
    p0 = np.asarray(p0, dtype=np.float64)
    if t == 0:
        return p0.copy()
    p = expm_multiply(rm.M * t, p0)
    _check_distribution(p, "evolve_exact")
    return p


def evolve_sweeps(rm: RateMatrix, p0, n_sweeps: int, step_matrix=None) -> np.ndarray:
    """Distribution after ``n_sweeps`` sweeps of the discrete Monte Carlo chain."""
    T = rm.step_matrix() if step_matrix is None else step_matrix
    p = np.asarray(p0, dtype=np.float64).copy()
    for _ in range(n_sweeps * rm.steps_per_sweep):
        p = T @ p
    _check_distribution(p, "evolve_sweeps")
    return p


def spectrum_rows(params_list, k: int = 6, sector: str = "even") -> list[dict]:
    """Spectrum export rows, real parts.

    Columns: ``eta, f_e, L, n_zero`` (number of stationary states),
    ``gap`` (first eigenvalue after them) and ``lambda_0 .. lambda_{k-1}``.
    """
    rows = []
    for params in params_list:
        rm = build_generator(params, sector)
        spec = spectrum(rm)
        n_zero = len(closed_classes(rm))
        row = {"eta": params.eta, "f_e": params.f_e, "L": params.L, "n_zero": n_zero,
               "gap": float(spec.gap(n_zero).real) if n_zero < rm.dim else float("nan")}
        for j, v in enumerate(spec.values[:k]):
            row[f"lambda_{j}"] = float(v.real)
        rows.append(row)
    return rows
