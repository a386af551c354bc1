"""Critical-point location, running exponents, data collapse and decay fits.

All curves are handled in log-log space: ``log O`` is interpolated
linearly in ``log t``. Collapse quality is the mean squared difference of
``log(O t^delta)`` between curve pairs on a shared grid of rescaled log
time; it is invariant under a global rescaling of time.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import curve_fit

GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass
class EnsembleSeries:
    """One observable's trajectory-averaged time series at fixed parameters.

    ``per_traj`` optionally holds the individual trajectories
    ``(n_traj, n_t)`` so that statistics can be bootstrapped.
    """

    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    meta: dict = field(default_factory=dict)
    per_traj: np.ndarray | None = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.mean = np.asarray(self.mean, dtype=float)
        self.stderr = np.asarray(self.stderr, dtype=float)
        if self.t.ndim != 1 or self.mean.shape != self.t.shape or self.stderr.shape != self.t.shape:
            raise ValueError("t, mean and stderr must be 1-d arrays of equal length")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("t must be strictly increasing")

    @classmethod
    def from_stats(cls, stats, name: str, transform=None, **meta) -> "EnsembleSeries":
        """Series ``transform(name)`` from an ensemble; ``transform`` is ``(scale, offset)``.

        The observable becomes ``offset + scale * value``, so ``(-1, 1)`` gives
        ``1 - n_e`` and ``(-1, 0.5)`` gives ``0.5 - n_d``. Samples at ``t = 0``
        are dropped.
        """
        scale, offset = (1.0, 0.0) if transform is None else transform
        t, m, s = stats.series(name)
        keep = t > 0
        per = stats.per_traj.get(name)
        if per is not None:
            per = offset + scale * per[:, keep]
        info = {"eta": stats.params.eta, "L": stats.params.L, "f_e": stats.params.f_e,
                "observable": name, "n_traj": stats.n_traj}
        info.update(meta)
        return cls(t[keep], offset + scale * m[keep], abs(scale) * s[keep], info, per)

    def resample(self, idx) -> "EnsembleSeries":
        if self.per_traj is None:
            raise ValueError("no per-trajectory data to resample")
        sub = self.per_traj[idx]
        return EnsembleSeries(self.t, sub.mean(axis=0),
                              sub.std(axis=0, ddof=1) / np.sqrt(len(idx)), self.meta, None)


@dataclass
class Estimate:
    value: float
    stderr: float
    info: dict = field(default_factory=dict)


@dataclass
class ScalingFit:
    """Container for the quantities extracted from one analysis run."""

    eta_c: Estimate | None = None
    delta: Estimate | None = None
    nu_t: Estimate | None = None
    z: Estimate | None = None
    tau: Estimate | None = None
    xi: Estimate | None = None
    amplitudes: dict = field(default_factory=dict)

    def to_json(self) -> str:
        def clean(x):
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, (list, tuple, np.ndarray)):
                return [clean(v) for v in x]
            if isinstance(x, (np.floating, float)):
                return float(x) if np.isfinite(x) else None
            if isinstance(x, np.integer):
                return int(x)
            return x
        return json.dumps(clean(asdict(self)), indent=2, sort_keys=True)


def _positive(t, y, what="series"):
    ok = y > 0
    if not ok.all():
        warnings.warn(f"{what}: {int((~ok).sum())} non-positive values excluded", RuntimeWarning,
                      stacklevel=3)
    return t[ok], y[ok]


def running_exponent(series: EnsembleSeries, b: float = 10.0):
    """``(1/t, delta(t))`` with ``delta(t) = log(O(t)/O(bt)) / log b``.

    ``O(bt)`` is interpolated linearly in ``(log t, log O)``; only times with
    ``bt`` inside the series are returned.
    """
    if b <= 1:
        raise ValueError("b must exceed 1")
    t, y = _positive(series.t, series.mean)
    if t.size < 2:
        return np.empty(0), np.empty(0)
    lt, ly = np.log(t), np.log(y)
    sel = lt + np.log(b) <= lt[-1] + 1e-12
    ly_b = np.interp(lt[sel] + np.log(b), lt, ly)
    return 1.0 / t[sel], (ly[sel] - ly_b) / np.log(b)


def _late_window(inv_t, delta, decades):
    t = 1.0 / inv_t
    sel = t >= t.max() / 10**decades
    return inv_t[sel], delta[sel]


@dataclass
class CriticalEstimate:
    eta_c: float
    eta_err: float
    delta: float
    delta_err: float
    slopes: dict
    eta_c_interp: float
    delta_intercept: float


def find_critical(family, b: float = 10.0, decades: float = 1.0) -> CriticalEstimate:
    """Pick the control value whose running exponent is flattest at late times.

    For each series the slope of ``delta`` against ``1/t`` over the last
    ``decades`` of ``t`` is fitted by least squares. Active curves have
    positive slope (``delta -> 0``), absorbing ones negative. Deep in the
    active phase ``delta`` also flattens (at zero), so only the two series
    bracketing the first positive-to-negative sign change are candidates; the
    one with the smaller ``|slope|`` is returned, with half the local grid
    spacing as the control-parameter error and the window spread of ``delta``
    as its error. ``eta_c_interp`` is the linear zero crossing of the slope.
    """
    family = sorted(family, key=lambda s: s.meta["eta"])
    if len(family) < 3:
        raise ValueError("need at least 3 control values")
    etas, slopes, plateaus, spreads, intercepts = [], [], [], [], []
    for s in family:
        x, y = _late_window(*running_exponent(s, b), decades)
        if x.size < 3:
            raise ValueError(f"series at eta={s.meta['eta']} is too short for a {decades}-decade window")
        A = np.vstack([x, np.ones_like(x)]).T
        (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
        etas.append(s.meta["eta"])
        slopes.append(slope)
        plateaus.append(y.mean())
        spreads.append(y.std(ddof=1))
        intercepts.append(icpt)
    slopes = np.array(slopes)
    etas = np.array(etas)
    if np.all(slopes > 0) or np.all(slopes < 0):
        raise ValueError("no bracketing: late-time slopes all have the same sign")
    bracket = [j for j in range(etas.size - 1) if slopes[j] > 0 >= slopes[j + 1]]
    if not bracket:
        raise ValueError("no bracketing: slopes never change from positive to negative")
    j = bracket[0]
    cross = etas[j] + slopes[j] / (slopes[j] - slopes[j + 1]) * (etas[j + 1] - etas[j])
    k = j if abs(slopes[j]) <= abs(slopes[j + 1]) else j + 1
    spacing = np.diff(etas)
    local = spacing[min(k, spacing.size - 1)] if k == 0 or k == etas.size - 1 else \
        0.5 * (spacing[k - 1] + spacing[k])
    return CriticalEstimate(float(etas[k]), float(local / 2), float(plateaus[k]),
                            float(spreads[k]), dict(zip(map(float, etas), map(float, slopes))),
                            float(cross), float(intercepts[k]))


def _log_curve(series, delta, shift):
    t, y = _positive(series.t, series.mean, f"eta={series.meta.get('eta')}")
    return np.log(t) + shift, np.log(y) + delta * np.log(t)


def _pair_costs(curves, pairs, n_grid):
    total, used = 0.0, 0
    for i, j in pairs:
        xa, ya = curves[i]
        xb, yb = curves[j]
        lo, hi = max(xa[0], xb[0]), min(xa[-1], xb[-1])
        if hi <= lo:
            continue
        g = np.linspace(lo, hi, n_grid)
        total += np.mean((np.interp(g, xa, ya) - np.interp(g, xb, yb)) ** 2)
        used += 1
    return total, used


def collapse_cost(family, delta: float, nu_t: float, eta_c: float, n_grid: int = 40) -> float:
    """Summed pairwise mismatch of ``log(O t^delta)`` versus ``log(t |eta - eta_c|^nu_t)``.

    Only pairs on the same side of ``eta_c`` are compared; pairs whose
    rescaled domains do not overlap are skipped.
    """
    curves, sides = [], []
    for s in family:
        eps = s.meta["eta"] - eta_c
        if eps == 0:
            continue
        curves.append(_log_curve(s, delta, nu_t * np.log(abs(eps))))
        sides.append(np.sign(eps))
    pairs = [(i, j) for i in range(len(curves)) for j in range(i + 1, len(curves))
             if sides[i] == sides[j]]
    if not pairs:
        raise ValueError("collapse needs at least two curves on the same side of eta_c")
    total, used = _pair_costs(curves, pairs, n_grid)
    if used == 0:
        raise ValueError("rescaled curves do not overlap")
    return total


def fss_cost(family, delta: float, z: float, n_grid: int = 40) -> float:
    """Mismatch of ``log(O t^delta)`` versus ``log(t / L^z)`` across system sizes."""
    curves = [_log_curve(s, delta, -z * np.log(s.meta["L"])) for s in family]
    pairs = [(i, j) for i in range(len(curves)) for j in range(i + 1, len(curves))]
    if not pairs:
        raise ValueError("finite-size collapse needs at least two sizes")
    total, used = _pair_costs(curves, pairs, n_grid)
    if used == 0:
        raise ValueError("rescaled curves do not overlap")
    return total


def golden_section(f, lo: float, hi: float, tol: float = 1e-4, n_scan: int = 31):
    """Minimize ``f`` on ``[lo, hi]``: coarse scan, then golden-section refinement.

    The scan guards against local minima; the refinement runs on the two
    scan cells around the best point. Deterministic for a given ``f``.
    """
    grid = np.linspace(lo, hi, n_scan)
    vals = np.array([f(x) for x in grid])
    k = int(np.argmin(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, n_scan - 1)]
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x), (grid, vals)


def optimize_collapse(family, delta: float, eta_c: float, bounds=(1.0, 2.5), **kw) -> Estimate:
    x, cost, scan = golden_section(lambda nu: collapse_cost(family, delta, nu, eta_c, **kw), *bounds)
    return Estimate(float(x), float("nan"), {"cost": cost, "bounds": bounds,
                                             "scan": [scan[0].tolist(), scan[1].tolist()]})


def optimize_fss(family, delta: float, bounds=(1.0, 2.5), **kw) -> Estimate:
    if len(family) < 3:
        raise ValueError("finite-size scaling needs at least 3 system sizes")
    x, cost, scan = golden_section(lambda z: fss_cost(family, delta, z, **kw), *bounds)
    return Estimate(float(x), float("nan"), {"cost": cost, "bounds": bounds,
                                             "scan": [scan[0].tolist(), scan[1].tolist()]})


# decay models ---------------------------------------------------------------

def _exp(t, a, tau):
    return a * np.exp(-t / tau)


def _exp_plateau(x, a, xi, c):
    return a * np.exp(-(x - 1) / xi) + c


MODELS = ("exp", "exp_plateau", "power_exp")


@dataclass
class DecayFit:
    model: str
    params: dict
    stderr: dict
    cov: np.ndarray
    residual_norm: float
    window: tuple


def _initial_guess(model, x, y, delta):
    if model == "exp":
        ok = y > 0
        slope, icpt = np.polyfit(x[ok], np.log(y[ok]), 1) if ok.sum() >= 2 else (-1.0, 0.0)
        return [math.exp(icpt), -1.0 / slope if slope < 0 else (x.max() - x.min() + 1.0)]
    if model == "exp_plateau":
        c = y[-1]
        r = y - c
        ok = r > 0
        if ok.sum() >= 2:
            slope, icpt = np.polyfit(x[ok] - 1, np.log(r[ok]), 1)
            xi = -1.0 / slope if slope < 0 else 1.0
            return [math.exp(icpt), xi, c]
        return [y[0] - c, 1.0, c]
    # power_exp: log(y) + delta log t = log a - b t
    ok = y > 0
    slope, icpt = np.polyfit(x[ok], np.log(y[ok]) + delta * np.log(x[ok]), 1)
    return [math.exp(icpt), max(-slope, 0.0)]


def fit_decay(x, y, model: str, sigma=None, delta: float | None = None, window=None,
              max_restarts: int = 4) -> DecayFit:
    """Nonlinear least-squares fit of one of the decay models.

    ``exp``: ``a exp(-t/tau)``; ``exp_plateau``: ``a exp(-(l-1)/xi) + c``;
    ``power_exp``: ``a t^(-delta) exp(-b t)`` with ``delta`` held fixed.
    Starting values come from a log-linear fit; on failure the fit restarts
    with the scale parameter halved and doubled alternately.
    """
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sig = None if sigma is None else np.asarray(sigma, dtype=float)
    if window is not None:
        sel = (x >= window[0]) & (x <= window[1])
        x, y = x[sel], y[sel]
        sig = None if sig is None else sig[sel]
    if sig is not None:
        sig = np.where(sig > 0, sig, sig[sig > 0].min() if np.any(sig > 0) else 1.0)
    if model == "power_exp":
        if delta is None:
            raise ValueError("power_exp needs a fixed delta")
        f = lambda t, a, b: a * t ** (-delta) * np.exp(-b * t)  # noqa: E731
        names = ("a", "b")
    elif model == "exp":
        f, names = _exp, ("a", "tau")
    else:
        f, names = _exp_plateau, ("a", "xi", "c")
    p0 = _initial_guess(model, x, y, delta)
    last = None
    factors = [1.0] + [f for k in range(1, max_restarts) for f in (0.5**k, 2.0**k)]
    for factor in factors[:max_restarts + 1]:
        guess = list(p0)
        guess[1] *= factor
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                popt, pcov = curve_fit(f, x, y, p0=guess, sigma=sig, absolute_sigma=sig is not None,
                                       maxfev=20000)
            if np.all(np.isfinite(popt)):
                break
        except RuntimeError as exc:
            last = exc
    else:
        raise RuntimeError(f"{model} fit did not converge after {max_restarts} restarts") from last
    res = y - f(x, *popt)
    if sig is not None:
        res = res / sig
    err = np.sqrt(np.clip(np.diag(pcov), 0, None))
    return DecayFit(model, dict(zip(names, map(float, popt))), dict(zip(names, map(float, err))),
                    pcov, float(np.linalg.norm(res)), (float(x.min()), float(x.max())))


def loglog_slope(x, y, yerr=None):
    """Weighted least-squares slope of ``log y`` against ``log x`` with its standard error."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    w = None if yerr is None else np.asarray(y, float) / np.asarray(yerr, float)
    coef, cov = np.polyfit(lx, ly, 1, w=w, cov="unscaled" if w is not None else True)
    return float(coef[0]), float(np.sqrt(cov[0, 0])), float(coef[1])


def bootstrap(series_list, statistic, n_resamples: int = 200, seed: int = 0):
    """Resample trajectories (independently per series) and re-evaluate ``statistic``.

    ``statistic`` maps a list of :class:`EnsembleSeries` to a float. Returns
    ``(point_estimate, stderr, samples)``; failed resamples are dropped.
    """
    rng = np.random.default_rng(seed)
    point = statistic(series_list)
    samples = []
    for _ in range(n_resamples):
        res = [s.resample(rng.integers(0, s.per_traj.shape[0], s.per_traj.shape[0]))
               for s in series_list]
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                samples.append(statistic(res))
        except (ValueError, RuntimeError):
            continue
    samples = np.array(samples)
    if samples.size < 2:
        raise RuntimeError("bootstrap produced fewer than two valid resamples")
    return float(point), float(samples.std(ddof=1)), samples
