"""Mean-field rate equations for flag, defect and unheralded-defect densities.

The state is ``(n_e, n_d, h, b)``: flag density, defect density, density of
defects with no flag on either side, and the density of the five-site
pattern (flag with a defect at one end only) whose correction spawns
unheralded defects. ``b`` is slaved to ``(n_e, h)`` by default.

The closed-form defect density returned by :func:`mf_steady` is
``(1 - f_e)/2 + eta f_e^2 / 4 gamma``. For ``f_e < 1`` it is not the fixed point of the ``n_d``
rate equation in :func:`mf_rhs`; :func:`mf_ode_fixed_point` gives the
latter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .params import NumericalError, ParameterError

BOUND_TOL = 1e-9


@dataclass(frozen=True)
class RateParams:
    """Rates needed by the mean-field equations (any object with these attributes works)."""

    eta: float
    gamma: float = 1.0
    f_e: float = 1.0
    mu: float = 0.0


@dataclass(frozen=True)
class MeanFieldState:
    n_e: float
    n_d: float
    h: float
    b: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.n_e, self.n_d, self.h, self.b])

    @classmethod
    def from_array(cls, y) -> "MeanFieldState":
        return cls(*map(float, y[:4]))


@nb.njit(cache=True)
def _b_adiabatic(ne, h, eta, gamma, fe):
    return (eta * fe / (2 * gamma) * h * (1 - h)
            + eta * (1 - fe) / (2 * gamma) * ne * (1 - ne) ** 2)


@nb.njit(cache=True)
def _rhs(y, eta, gamma, fe, dynamic, out):
    ne, nd, h, b = y[0], y[1], y[2], y[3]
    out[0] = (eta * fe - 2 * gamma * ne) * (1 - ne)
    out[1] = eta * (2 - fe) * (1 - 2 * nd) - 2 * gamma * ne * (1 - ne)
    out[2] = (2 * eta * (1 - fe) * (1 + ne) * (1 - ne) ** 2
              - 4 * eta * (1 - fe) * h - 2 * eta * fe * h * h)
    if dynamic:
        out[3] = (eta * fe * (h * (1 - h) - 2 * b)
                  + eta * (1 - fe) * (ne * (1 - ne) ** 2 - 2 * b) - 2 * gamma * b)
    else:
        # chain rule through the slaved expression
        out[3] = (eta * fe / (2 * gamma) * (1 - 2 * h) * out[2]
                  + eta * (1 - fe) / (2 * gamma) * (1 - ne) * (1 - 3 * ne) * out[0])


@nb.njit(cache=True)
def _rk4(y, eta, gamma, fe, dynamic, dt, n_steps, stride, out):
    """Fixed-step RK4; writes every ``stride``-th state to ``out``.

    Returns -1 on success or the step index at which a density left [0, 1].
    """
    k1 = np.empty(4)
    k2 = np.empty(4)
    k3 = np.empty(4)
    k4 = np.empty(4)
    tmp = np.empty(4)
    out[0] = y
    row = 1
    for step in range(1, n_steps + 1):
        _rhs(y, eta, gamma, fe, dynamic, k1)
        tmp[:] = y + 0.5 * dt * k1
        _rhs(tmp, eta, gamma, fe, dynamic, k2)
        tmp[:] = y + 0.5 * dt * k2
        _rhs(tmp, eta, gamma, fe, dynamic, k3)
        tmp[:] = y + dt * k3
        _rhs(tmp, eta, gamma, fe, dynamic, k4)
        y += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        for j in range(4):
            if y[j] < -BOUND_TOL or y[j] > 1 + BOUND_TOL:
                return step
            y[j] = min(max(y[j], 0.0), 1.0)
        if not dynamic:
            y[3] = _b_adiabatic(y[0], y[2], eta, gamma, fe)
        if step % stride == 0:
            out[row] = y
            row += 1
    return -1


def _check(params, b_mode="adiabatic"):
    if b_mode not in ("adiabatic", "dynamic"):
        raise ParameterError(f"b_mode must be 'adiabatic' or 'dynamic', got {b_mode!r}")
    if b_mode == "adiabatic" and params.gamma <= 0:
        raise ParameterError("the slaved b density needs gamma > 0")
    return params.eta, params.gamma, params.f_e


def mf_rhs(state: MeanFieldState, params, b_mode: str = "adiabatic") -> MeanFieldState:
    """Time derivatives of ``(n_e, n_d, h, b)``.

    ``dn_e/dt = (eta f_e - 2 gamma n_e)(1 - n_e)``,
    ``dn_d/dt = eta (2 - f_e)(1 - 2 n_d) - 2 gamma n_e (1 - n_e)`` and
    ``dh/dt = 2 eta (1-f_e)(1+n_e)(1-n_e)^2 - 4 eta (1-f_e) h - 2 eta f_e h^2``.
    With ``b_mode="adiabatic"`` the ``b`` entry is the derivative of its
    slaved value; with ``"dynamic"`` it is the full gain/loss balance.
    """
    eta, gamma, fe = _check(params, b_mode)
    out = np.empty(4)
    _rhs(state.as_array(), eta, gamma, fe, b_mode == "dynamic", out)
    return MeanFieldState.from_array(out)


def is_active(params) -> bool:
    """Mean-field active phase: ``eta f_e < 2 gamma``."""
    return params.eta * params.f_e < 2 * params.gamma


def h_small_noise(f_e: float) -> float:
    """Unheralded density for ``n_e -> 0``: ``(f_e - 1 + sqrt(1 - f_e)) / f_e``."""
    s = np.sqrt(1.0 - f_e)
    return float(s / (1.0 + s))  # same expression, finite at f_e = 0


def _h_root(ne, fe):
    # positive root of fe h^2 + 2 (1-fe) h - c = 0, written without cancellation
    c = (1 - fe) * (1 + ne) * (1 - ne) ** 2
    if c == 0:
        return 0.0
    return float(c / ((1 - fe) + np.sqrt((1 - fe) ** 2 + fe * c)))


def mf_steady(params) -> MeanFieldState:
    """Closed-form steady state on the active or absorbing branch.

    Active (``eta f_e < 2 gamma``): ``n_e = eta f_e / 2 gamma`` and
    ``n_d = (1 - f_e)/2 + eta f_e^2 / 4 gamma``. Absorbing: ``n_e = 1``,
    ``n_d = 1/2``. ``h`` is the stable root of the ``dh/dt`` balance at this
    ``n_e`` (it reduces to :func:`h_small_noise` as ``n_e -> 0``) and ``b``
    its slaved value.
    """
    eta, gamma, fe = params.eta, params.gamma, params.f_e
    if is_active(params):
        ne = eta * fe / (2 * gamma)
        nd = (1 - fe) / 2 + eta * fe**2 / (4 * gamma)
    else:
        ne, nd = 1.0, 0.5
    h = _h_root(ne, fe)
    b = float(_b_adiabatic(ne, h, eta, gamma, fe)) if gamma > 0 else 0.0
    return MeanFieldState(ne, nd, h, b)


def mf_ode_fixed_point(params) -> MeanFieldState:
    """Stable fixed point of :func:`mf_rhs` (differs from :func:`mf_steady` in ``n_d`` when ``f_e < 1``)."""
    st = mf_steady(params)
    eta, gamma, fe = params.eta, params.gamma, params.f_e
    if eta == 0:
        return st
    nd = 0.5 - gamma * st.n_e * (1 - st.n_e) / (eta * (2 - fe))
    return MeanFieldState(st.n_e, nd, st.h, st.b)


def default_dt(params) -> float:
    return 0.01 / max(params.eta, params.gamma)


@dataclass
class MeanFieldTrajectory:
    times: np.ndarray
    states: np.ndarray   # (n, 4) columns n_e, n_d, h, b

    @property
    def final(self) -> MeanFieldState:
        return MeanFieldState.from_array(self.states[-1])

    def __getitem__(self, name):
        return self.states[:, ("n_e", "n_d", "h", "b").index(name)]


def mf_integrate(params, t_max: float, dt: float | None = None,
                 y0: MeanFieldState | None = None, b_mode: str = "adiabatic",
                 n_out: int = 201) -> MeanFieldTrajectory:
    """Integrate the rate equations with fixed-step RK4.

    Starts from the empty lattice ``(0, 0, 0, 0)`` unless ``y0`` is given.
    Raises :class:`NumericalError` if a density leaves ``[0, 1]``, the usual
    sign of a step size that is too large.
    """
    eta, gamma, fe = _check(params, b_mode)
    dt = default_dt(params) if dt is None else float(dt)
    if dt <= 0 or t_max < 0:
        raise ParameterError("need dt > 0 and t_max >= 0")
    n_steps = int(np.ceil(t_max / dt))
    stride = max(1, n_steps // max(n_out - 1, 1))
    n_steps = stride * max(1, int(np.ceil(n_steps / stride)))
    y = (np.zeros(4) if y0 is None else y0.as_array()).astype(np.float64)
    dynamic = b_mode == "dynamic"
    if not dynamic:
        y[3] = _b_adiabatic(y[0], y[2], eta, gamma, fe)
    out = np.empty((n_steps // stride + 1, 4))
    bad = _rk4(y, eta, gamma, fe, dynamic, dt, n_steps, stride, out)
    if bad >= 0:
        raise NumericalError(f"density left [0, 1] at t = {bad * dt:.4g}; reduce dt")
    return MeanFieldTrajectory(np.arange(out.shape[0]) * stride * dt, out)


def mf_chiral(params) -> dict:
    """Bulk and edge defect densities and the string-order length on the open chain.

    ``n_d_bulk = -r + sqrt(r (1 + r))`` with ``r = eta/gamma``;
    ``xi = 1 / [2 (sqrt(4 r + mu^2) - mu)]``; the edge density at ``mu = 1``
    is the continuous limit ``eta / (2 eta + gamma)``.
    """
    eta, gamma, mu = params.eta, params.gamma, params.mu
    if gamma <= 0:
        raise ParameterError("the chiral mean field needs gamma > 0")
    r = eta / gamma
    bulk = -r + np.sqrt(r * (1 + r))
    root = np.sqrt(4 * gamma * eta + 4 * eta**2 + gamma**2 * mu**2)
    if abs(mu - 1) < 1e-9:
        edge = eta / (2 * eta + gamma)
    else:
        edge = (2 * eta + gamma * mu - root) / (2 * gamma * (mu - 1))
    denom = 2 * (np.sqrt(4 * r + mu**2) - mu)
    xi = np.inf if denom == 0 else 1 / denom
    return {"n_d_bulk": float(bulk), "n_d_edge": float(edge), "xi": float(xi)}


def phase_diagram(etas, f_es, gamma: float = 1.0) -> dict:
    """Closed-form steady state on a rectangular ``(eta, f_e)`` grid, long format."""
    rows = {k: [] for k in ("eta", "f_e", "n_e", "n_d", "h")}
    for fe in f_es:
        for eta in etas:
            st = mf_steady(RateParams(float(eta), gamma, float(fe)))
            for k, v in (("eta", eta), ("f_e", fe), ("n_e", st.n_e), ("n_d", st.n_d),
                         ("h", st.h)):
                rows[k].append(float(v))
    return {k: np.array(v) for k, v in rows.items()}
