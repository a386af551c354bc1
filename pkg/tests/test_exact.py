import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from heralded_spt.chiral import HOP_LEFT, HOP_RIGHT, NOISE, bond_rates, chiral_dt
from heralded_spt.ensemble import geometric_schedule, run_ensemble
from heralded_spt.exact import (MAX_L_PERIODIC, build_generator, closed_classes, evolve_exact,
                                evolve_sweeps, spectrum, spectrum_rows, steady_states)
from heralded_spt.kernel import EventKind, event_rates
from heralded_spt.params import ParameterError, SimParams

from oracles import oracle_event


def encode(d, e):
    L = len(d)
    return sum(int(c) << j for j, c in enumerate(d)) + sum(int(c) << (L + j) for j, c in enumerate(e))


def decode(c, L):
    return ("".join(str((c >> j) & 1) for j in range(L)),
            "".join(str((c >> (L + j)) & 1) for j in range(L)))


params_st = st.builds(
    lambda L, eta, gamma, f_e, full: SimParams(L=L, eta=eta, gamma=gamma, f_e=f_e,
                                               semantics="full-channel" if full else "as-published"),
    st.integers(3, 4), st.floats(0, 3), st.floats(0.05, 3), st.floats(0, 1), st.booleans())


@given(params_st, st.sampled_from(["even", "full"]))
def test_generator_structure(p, sector):
    rm = build_generator(p, sector)
    assert np.abs(rm.column_sums()).max() < 1e-12
    A = rm.dense()
    off = A - np.diag(np.diag(A))
    assert off.min() >= 0


def test_even_sector_never_reaches_odd_parity():
    rm = build_generator(SimParams(L=4, eta=0.7, f_e=0.6, semantics="full-channel"), "full")
    par = np.array([bin(c & 0xF).count("1") % 2 for c in rm.configs])
    A = rm.dense()
    assert np.all(A[np.ix_(par == 1, par == 0)] == 0)
    assert np.all(A[np.ix_(par == 0, par == 1)] == 0)
    even = build_generator(SimParams(L=4, eta=0.7, f_e=0.6, semantics="full-channel"), "even")
    assert even.dim == (par == 0).sum() == 2 ** 7
    assert np.allclose(A[np.ix_(par == 0, par == 0)], even.dense())


def test_noiseless_vacuum_is_fixed():
    rm = build_generator(SimParams(L=4, eta=0.0, gamma=1.0))
    assert np.all(rm.dense()[:, rm.index(0)] == 0)


def test_saturated_flags_absorbing_without_correction():
    rm = build_generator(SimParams(L=3, eta=1.0, gamma=0.0))
    A = rm.dense()
    sat = ((rm.configs >> 3) & 0b111) == 0b111
    assert sat.sum() == 4
    assert np.all(A[:, sat] == 0)
    assert np.all(A[:, ~sat].any(axis=0))


@pytest.mark.parametrize("full", [False, True])
def test_euler_step_matches_event_enumeration(full):
    p = SimParams(L=4, eta=0.9, gamma=0.7, f_e=0.6,
                  semantics="full-channel" if full else "as-published")
    rm = build_generator(p, "full")
    rates = event_rates(p)
    h = 1e-3
    for c in rm.configs[::7]:
        d, e = decode(int(c), 4)
        expect = np.zeros(rm.dim)
        expect[rm.index(int(c))] = 1.0
        for m in range(4):
            for ev in EventKind:
                if rates[ev] == 0:
                    continue
                d2, e2 = oracle_event(d, e, m, ev, full)
                expect[rm.index(encode(d2, e2))] += h * rates[ev]
                expect[rm.index(int(c))] -= h * rates[ev]
        got = rm.delta(int(c)) + h * (rm.M @ rm.delta(int(c)))
        assert np.allclose(got, expect, atol=1e-15)


def test_chiral_generator_matches_hop_rules():
    p = SimParams(L=6, eta=0.3, mu=0.4, boundary="chiral-open")
    rm = build_generator(p, "full")
    assert np.abs(rm.column_sums()).max() < 1e-12
    for c in rm.configs:
        d = "0" + "".join(str((int(c) >> (i - 1)) & 1) for i in range(1, 6))
        expect = np.zeros(rm.dim)
        for b in range(1, 5):
            r = bond_rates(p, 2 * b + 1 <= 6)
            for ev in (NOISE, HOP_LEFT, HOP_RIGHT):
                dd = [int(x) for x in d]
                if ev == NOISE or (ev == HOP_LEFT and dd[b + 1]) or (ev == HOP_RIGHT and dd[b]):
                    dd[b] ^= 1
                    dd[b + 1] ^= 1
                c2 = sum(dd[i] << (i - 1) for i in range(1, 6))
                if c2 != c:
                    expect[rm.index(c2)] += r[ev]
                    expect[rm.index(int(c))] -= r[ev]
        assert np.allclose(rm.M @ rm.delta(int(c)), expect)
    assert rm.dt_step == chiral_dt(p) and rm.steps_per_sweep == 4


def test_index_conventions():
    rm = build_generator(SimParams(L=3, eta=0.4))
    d, e = rm.bits()
    for k in range(rm.dim):
        assert encode("".join(map(str, d[k])), "".join(map(str, e[k]))) == rm.configs[k]
    with pytest.raises(KeyError):
        rm.index(0b000001)   # one defect: odd sector


def test_size_limits():
    with pytest.raises(ParameterError):
        build_generator(SimParams(L=MAX_L_PERIODIC + 1, eta=0.1))
    with pytest.raises(ParameterError):
        spectrum(build_generator(SimParams(L=7, eta=0.1)))
    with pytest.raises(ParameterError):
        build_generator(SimParams(L=4, eta=0.1), "odd")


@pytest.mark.parametrize("sem", ["as-published", "full-channel"])
@pytest.mark.parametrize("eta", [0.2, 0.6065, 2.0])
def test_leading_eigenvalue_is_zero(sem, eta):
    spec = spectrum(build_generator(SimParams(L=4, eta=eta, semantics=sem)))
    assert abs(spec.values[0]) < 1e-10
    assert spec.values.real.max() <= 1e-10
    assert np.all(np.diff(spec.values.real) <= 1e-12)


def test_full_channel_strong_noise_unique_steady_state():
    rm = build_generator(SimParams(L=4, eta=5.0, semantics="full-channel"))
    spec = spectrum(rm)
    assert len(closed_classes(rm)) == 1
    assert spec.gap(1).real < -0.1
    ss = steady_states(rm)
    assert len(ss) == 1
    d, e = rm.bits()
    target = e.all(axis=1) / e.all(axis=1).sum()
    assert np.allclose(ss[0], target, atol=1e-12)


def test_as_published_saturated_states_each_stationary():
    rm = build_generator(SimParams(L=4, eta=0.5))
    assert len(closed_classes(rm)) == 2 ** 3
    assert len(steady_states(rm)) == 2 ** 3


def test_noiseless_kernel_contains_vacuum():
    rm = build_generator(SimParams(L=4, eta=0.0))
    ss = steady_states(rm)
    assert any(np.isclose(p[rm.index(0)], 1.0) for p in ss)


def test_steady_states_flags_loose_tolerance():
    rm = build_generator(SimParams(L=3, eta=0.01, semantics="full-channel"))
    with pytest.raises(Exception, match="tol"):
        steady_states(rm, tol=1.0)


def test_evolve_exact_basic_properties():
    rm = build_generator(SimParams(L=4, eta=0.8, f_e=0.7, semantics="full-channel"))
    p0 = rm.uniform_even_defects()
    assert np.array_equal(evolve_exact(rm, p0, 0.0), p0)
    for t in (0.1, 1.0, 10.0, 100.0):
        p = evolve_exact(rm, p0, t)
        assert abs(p.sum() - 1) < 1e-10 and p.min() > -1e-12
    with pytest.raises(ParameterError):
        evolve_exact(rm, p0, -1.0)


def test_full_channel_converges_to_maximally_mixed_saturated_state():
    rm = build_generator(SimParams(L=4, eta=1.2, semantics="full-channel"))
    p = evolve_exact(rm, rm.delta(0), 2000.0)
    d, e = rm.bits()
    target = e.all(axis=1) / e.all(axis=1).sum()
    assert np.abs(p - target).max() < 1e-8


@pytest.mark.parametrize("sem", ["as-published", "full-channel"])
def test_late_state_forgets_initial_defects(sem):
    rm = build_generator(SimParams(L=4, eta=0.3, semantics=sem))
    pa = evolve_exact(rm, rm.delta(0), 200.0)
    pb = evolve_exact(rm, rm.uniform_even_defects(), 200.0)
    assert 0.5 * np.abs(pa - pb).sum() < 1e-6


def test_evolve_sweeps_is_the_discrete_chain():
    rm = build_generator(SimParams(L=3, eta=0.5, f_e=0.8))
    T = rm.step_matrix().toarray()
    p = evolve_sweeps(rm, rm.delta(0), 2)
    assert np.allclose(p, np.linalg.matrix_power(T, 6) @ rm.delta(0), atol=1e-14)


def test_ensemble_marginals_match_exact_chain():
    p = SimParams(L=4, eta=0.9, f_e=0.8, n_traj=20000, master_seed=3, t_max_sweeps=40)
    sweeps = np.array([1, 3, 8, 20, 40])
    st_ = run_ensemble(p, sweeps, ls=[1, 2])
    rm = build_generator(p)
    T = rm.step_matrix()
    prob, done = rm.delta(0), 0
    for k, s in enumerate(sweeps):
        prob = evolve_sweeps(rm, prob, int(s - done), T)
        done = s
        for name, fn in (("n_e", lambda d, e: e.mean(axis=1)), ("n_d", lambda d, e: d.mean(axis=1))):
            exact = rm.expect(prob, fn)
            _, m, se = st_.series(name)
            assert abs(m[k] - exact) < 3 * se[k] + 1e-12, (name, s)


def test_spectrum_rows_report_stationary_count():
    rows = spectrum_rows([SimParams(L=4, eta=0.6065), SimParams(L=4, eta=0.6065, semantics="full-channel")])
    assert rows[0]["n_zero"] == 8 and rows[1]["n_zero"] == 1
    for r in rows:
        assert abs(r["lambda_0"]) < 1e-10 and r["gap"] < 0
