import numpy as np
import pytest
from hypothesis import given, strategies as st

from heralded_spt.scaling import (EnsembleSeries, ScalingFit, Estimate, bootstrap, collapse_cost,
                                  find_critical, fit_decay, fss_cost, golden_section, loglog_slope,
                                  optimize_collapse, optimize_fss, running_exponent)

T = np.geomspace(1, 1e4, 81)


def series(y, t=T, **meta):
    return EnsembleSeries(t, y, np.full_like(t, 1e-3), meta)


def offcritical_family(delta, nu_t, eta_c, etas, t=T):
    fam = []
    for eta in etas:
        x = t * abs(eta - eta_c) ** nu_t
        shape = np.exp(-x) if eta > eta_c else (1 + x) ** delta
        fam.append(series(t ** -delta * shape, t, eta=eta))
    return fam


def fss_family(delta, z, Ls):
    fam = []
    for L in Ls:
        t = np.geomspace(1, 5 * L ** z, 81)
        fam.append(series(t ** -delta * np.exp(-t / L ** z), t, L=L, eta=0.0))
    return fam


# running exponent -----------------------------------------------------------------

@given(st.floats(0.01, 2.0))
def test_running_exponent_of_power_law(delta):
    inv_t, d = running_exponent(series(3.0 * T ** -delta))
    assert d.size > 10 and np.allclose(d, delta, atol=1e-10)
    assert np.allclose(1 / inv_t, T[: inv_t.size])


def test_running_exponent_of_constant():
    _, d = running_exponent(series(np.full_like(T, 0.7)))
    assert np.allclose(d, 0.0, atol=1e-14)


def test_running_exponent_rejects_bad_ratio():
    with pytest.raises(ValueError):
        running_exponent(series(T ** -0.2), b=1.0)


# critical point -----------------------------------------------------------------

def test_find_critical_on_synthetic_family():
    etas = np.round(np.arange(0.56, 0.651, 0.01), 3)
    fam = offcritical_family(0.16, 1.73, 0.61, etas)
    fam.append(series(T ** -0.16, eta=0.61))
    fam.sort(key=lambda s: s.meta["eta"])
    ce = find_critical(fam)
    assert ce.eta_c == pytest.approx(0.61)
    assert ce.delta == pytest.approx(0.16, abs=1e-9)
    assert ce.eta_err == pytest.approx(0.005 / 2)  # half the grid spacing


def test_find_critical_needs_bracketing():
    fam = offcritical_family(0.16, 1.73, 0.5, [0.55, 0.6, 0.65])
    with pytest.raises(ValueError, match="bracket"):
        find_critical(fam)
    with pytest.raises(ValueError):
        find_critical(fam[:2])


# collapse --------------------------------------------------------------------------

@pytest.mark.parametrize("nu_t", [1.3, 1.73, 2.1])
def test_collapse_recovers_planted_nu(nu_t):
    etas = [0.50, 0.54, 0.57, 0.59, 0.63, 0.65, 0.68, 0.72]
    fam = offcritical_family(0.16, nu_t, 0.6065, etas)
    est = optimize_collapse(fam, 0.16, 0.6065)
    assert est.value == pytest.approx(nu_t, rel=0.02)


@pytest.mark.parametrize("z", [1.4, 1.58, 2.0])
def test_fss_recovers_planted_z(z):
    est = optimize_fss(fss_family(0.16, z, [32, 64, 128, 256]), 0.16)
    assert est.value == pytest.approx(z, rel=0.02)


def test_collapse_cost_invariant_under_time_rescaling():
    fam = offcritical_family(0.16, 1.7, 0.6, [0.5, 0.55, 0.65, 0.7])
    rng = np.random.default_rng(0)
    for s in fam:
        s.mean *= 1 + 0.05 * rng.standard_normal(s.mean.size)
    scaled = [EnsembleSeries(7.3 * s.t, s.mean, s.stderr, s.meta) for s in fam]
    for nu in (1.2, 1.7, 2.2):
        assert collapse_cost(scaled, 0.16, nu, 0.6) == pytest.approx(collapse_cost(fam, 0.16, nu, 0.6), rel=1e-9)
    ffam = fss_family(0.16, 1.58, [16, 32, 64])
    fscaled = [EnsembleSeries(0.2 * s.t, s.mean, s.stderr, s.meta) for s in ffam]
    assert fss_cost(fscaled, 0.16, 1.5) == pytest.approx(fss_cost(ffam, 0.16, 1.5), rel=1e-9)


def test_collapse_needs_pairs():
    fam = offcritical_family(0.16, 1.7, 0.6, [0.5, 0.7])
    with pytest.raises(ValueError, match="same side"):
        collapse_cost(fam, 0.16, 1.7, 0.6)
    with pytest.raises(ValueError):
        collapse_cost(offcritical_family(0.16, 1.7, 0.6, [0.5]), 0.16, 1.7, 0.6)
    with pytest.raises(ValueError):
        optimize_fss(fss_family(0.16, 1.5, [16, 32]), 0.16)


def test_optimizers_deterministic():
    fam = offcritical_family(0.16, 1.73, 0.6065, [0.5, 0.55, 0.65, 0.7])
    a = optimize_collapse(fam, 0.16, 0.6065)
    b = optimize_collapse(fam, 0.16, 0.6065)
    assert a.value == b.value and a.info == b.info


def test_golden_section_on_parabola():
    x, fx, _ = golden_section(lambda v: (v - 1.234) ** 2, 0.0, 3.0, tol=1e-8)
    assert x == pytest.approx(1.234, abs=1e-7) and fx < 1e-13


# decay fits -----------------------------------------------------------------------

def test_exponential_fit_exact():
    t = np.linspace(0, 40, 200)
    f = fit_decay(t, 0.7 * np.exp(-t / 8.5), "exp")
    assert f.params["a"] == pytest.approx(0.7, rel=1e-6) and f.params["tau"] == pytest.approx(8.5, rel=1e-6)


def test_plateau_fit_exact():
    l = np.arange(1, 30)
    f = fit_decay(l, 0.4 * np.exp(-(l - 1) / 2.3) + 0.05, "exp_plateau")
    for k, v in (("a", 0.4), ("xi", 2.3), ("c", 0.05)):
        assert f.params[k] == pytest.approx(v, rel=1e-6)


def test_power_exponential_fit_exact():
    t = np.geomspace(1, 500, 120)
    f = fit_decay(t, 0.55 * t ** -0.32 * np.exp(-0.03 * t), "power_exp", delta=0.32)
    assert f.params["a"] == pytest.approx(0.55, rel=1e-6) and f.params["b"] == pytest.approx(0.03, rel=1e-6)


def test_decay_fit_arguments():
    t = np.linspace(0, 10, 20)
    with pytest.raises(ValueError):
        fit_decay(t, np.exp(-t), "gaussian")
    with pytest.raises(ValueError):
        fit_decay(t, np.exp(-t), "power_exp")
    f = fit_decay(t, np.exp(-t / 2), "exp", window=(2, 8))
    assert 2 <= f.window[0] < f.window[1] <= 8 and f.params["tau"] == pytest.approx(2.0, rel=1e-6)


def test_loglog_slope():
    x = np.array([0.01, 0.02, 0.05, 0.1])
    slope, err, icpt = loglog_slope(x, 3 * x ** -0.5)
    assert slope == pytest.approx(-0.5, abs=1e-12) and icpt == pytest.approx(np.log(3))


def test_bootstrap_over_trajectories():
    rng = np.random.default_rng(2)
    per = 0.5 + 0.1 * rng.standard_normal((400, T.size))
    s = EnsembleSeries(T, per.mean(axis=0), per.std(axis=0, ddof=1) / 20, {}, per)
    point, err, samples = bootstrap([s], lambda ss: ss[0].mean[0], n_resamples=300)
    assert point == pytest.approx(per[:, 0].mean())
    assert err == pytest.approx(0.1 / 20, rel=0.2) and samples.size == 300
    with pytest.raises(ValueError):
        series(T ** -0.1).resample([0, 1])


def test_series_validation_and_report():
    with pytest.raises(ValueError):
        EnsembleSeries([1, 1, 2], [1, 1, 1], [0, 0, 0])
    fit = ScalingFit(delta=Estimate(0.16, 0.01))
    assert '"delta"' in fit.to_json()
