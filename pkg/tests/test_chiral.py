import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from heralded_spt.chiral import (HOP_LEFT, HOP_RIGHT, IDLE, NOISE, bond_rates, chiral_event,
                                 chiral_probs, chiral_sweep, is_left_half, n_bonds, qubit_to_bond,
                                 run_chiral)
from heralded_spt.ensemble import linear_schedule, run_ensemble
from heralded_spt.params import Boundary, ParameterError, SimParams
from heralded_spt.rng import RngStream
from heralded_spt.state import SublatticeState


def chain(d):
    return SublatticeState.from_strings(d, boundary=Boundary.CHIRAL_OPEN)


def params(**kw):
    base = dict(L=16, eta=0.1, boundary="chiral-open", mu=0.5)
    base.update(kw)
    return SimParams(**base)


def oracle(d, b, ev):
    d = [int(c) for c in d]
    if ev == NOISE or (ev == HOP_LEFT and d[b + 1]) or (ev == HOP_RIGHT and d[b]):
        d[b] ^= 1
        d[b + 1] ^= 1
    return "".join(map(str, d))


def test_bond_geometry():
    assert n_bonds(16) == 14
    assert [b for b in range(1, 15) if is_left_half(b, 16)] == list(range(1, 8))
    assert qubit_to_bond(3) == 1 and qubit_to_bond(2 * 16 - 3) == 14
    with pytest.raises(ValueError):
        qubit_to_bond(4)


def test_rates_point_towards_centre():
    p = params(mu=0.5, gamma=2.0)
    left, right = bond_rates(p, True), bond_rates(p, False)
    assert left[HOP_RIGHT] == pytest.approx(1.5) and left[HOP_LEFT] == pytest.approx(0.5)
    assert right[HOP_LEFT] == pytest.approx(1.5) and right[HOP_RIGHT] == pytest.approx(0.5)
    for side in (True, False):
        pr = chiral_probs(p, side)
        assert pr.sum() == pytest.approx(1.0, abs=1e-12)
        assert pr[IDLE] == pytest.approx(p.gamma / (p.eta + 2 * p.gamma))


def test_adjacent_pair_annihilates():
    assert chiral_event(chain("000110"), 3, HOP_RIGHT).bitstrings()[0] == "000000"
    assert chiral_event(chain("000110"), 3, HOP_LEFT).bitstrings()[0] == "000000"


def test_event_enumeration_six_cells():
    for bits in itertools.product("01", repeat=5):
        d = "0" + "".join(bits)
        for b in range(1, 5):
            for ev in (NOISE, HOP_LEFT, HOP_RIGHT, IDLE):
                assert chiral_event(chain(d), b, ev).bitstrings()[0] == oracle(d, b, ev)


def test_bond_range_checked():
    with pytest.raises(ValueError):
        chiral_event(chain("000000"), 0, NOISE)
    with pytest.raises(ValueError):
        chiral_event(chain("000000"), 5, NOISE)


def test_kernel_preconditions():
    with pytest.raises(ParameterError):
        run_chiral(SimParams(L=16, eta=0.1), RngStream(0), [1])
    with pytest.raises(ParameterError):
        run_chiral(params(f_e=0.5), RngStream(0), [1])
    with pytest.raises(ParameterError):
        run_chiral(params(L=3), RngStream(0), [1])


@given(seed=st.integers(0, 2**32), L=st.integers(4, 30), mu=st.floats(0, 1), eta=st.floats(0, 2))
def test_boundary_cell_frozen_and_parity_conserved(seed, L, mu, eta):
    p = params(L=L, mu=mu, eta=eta, initial="random-even-parity")
    ts = run_chiral(p, RngStream(seed), np.arange(1, 21))
    prof = np.array([ts[f"profile_{i}"] for i in range(L)])
    assert np.all(prof[0] == 0)
    assert np.all(prof.sum(axis=0) % 2 == 0)
    assert np.all(ts["omega_c_1"] == 1.0)


def test_full_bias_moves_single_defect_towards_centre_only():
    L = 32
    p = params(L=L, eta=0.0, mu=1.0)
    d = np.zeros(L, dtype=np.uint8)
    d[5] = 1
    s = SublatticeState(d, np.zeros_like(d), boundary=Boundary.CHIRAL_OPEN)
    rng = RngStream(8)
    pos = [5]
    for _ in range(200):
        s = chiral_sweep(s, p, rng)
        pos.append(int(np.flatnonzero(s.d)[0]))
    pos = np.array(pos)
    left_phase = pos[: np.argmax(pos >= L // 2)] if (pos >= L // 2).any() else pos
    assert np.all(np.diff(left_phase) >= 0)
    assert pos.max() <= L // 2 + 1 and pos[-1] >= L // 2 - 1


def test_unbiased_walk_has_zero_mean_displacement():
    L = 64
    p = params(L=L, eta=0.0, mu=0.0)
    disp = []
    for k in range(10_000):
        d = np.zeros(L, dtype=np.uint8)
        d[L // 2] = 1
        s = SublatticeState(d, np.zeros_like(d), boundary=Boundary.CHIRAL_OPEN)
        s = chiral_sweep(chiral_sweep(s, p, RngStream(5, k)), p, RngStream(6, k))
        disp.append(int(np.flatnonzero(s.d)[0]) - L // 2)
    disp = np.array(disp)
    assert disp.std() > 0
    assert abs(disp.mean()) < 3 * disp.std(ddof=1) / np.sqrt(disp.size)


def test_profile_mirror_symmetric():
    L = 16
    p = params(L=L, eta=0.2, mu=0.5, n_traj=2000, t_max_sweeps=400)
    names = [f"profile_{i}" for i in range(L)]
    st_ = run_ensemble(p, linear_schedule(400, 10), keep=names)
    prof = np.array([st_.steady_state(n, 40.0) for n in names])
    for i in range(1, L // 2):
        a, b = prof[i], prof[L - i]
        assert abs(a[0] - b[0]) < 4 * np.hypot(a[1], b[1]), i
