import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from heralded_spt import meanfield
from heralded_spt.cli import main
from heralded_spt.ensemble import run_ensemble
from heralded_spt.io import (csv_body, parse_config_text, parse_overrides, read_ensemble,
                             read_table, write_ensemble, write_table)
from heralded_spt.params import ParameterError, SimParams

GOLDEN = Path(__file__).parent / "golden"


def run_cli(*argv):
    return main([str(a) for a in argv])


# config parsing --------------------------------------------------------------------

def test_config_text():
    cfg = parse_config_text("L = 64  # size\neta=0.5\nls = 1, 2, 4\nzeta = no\nsemantics = full-channel\n")
    assert cfg == {"L": 64, "eta": 0.5, "ls": [1, 2, 4], "zeta": False, "semantics": "full-channel"}
    with pytest.raises(ParameterError):
        parse_config_text("L 64")
    with pytest.raises(ParameterError):
        parse_overrides(["L"])


# ensemble files ---------------------------------------------------------------------

def test_ensemble_csv_round_trip(tmp_path):
    p = SimParams(L=16, eta=0.45, f_e=0.9, n_traj=20, master_seed=3, t_max_sweeps=40)
    st = run_ensemble(p, [1, 10, 40], ls=[2, 8])
    csv, man = write_ensemble(st, tmp_path)
    data = read_ensemble(csv)
    assert data["params"] == p
    for k, name in enumerate(st.names):
        t, m, s, n = data["series"][name]
        assert np.array_equal(t, st.times) and np.array_equal(m, st.mean[:, k])
        assert np.array_equal(s, st.stderr[:, k]) and n == 20
    assert json.loads(man.read_text())["run_id"] == data["run_id"]


def test_manifest_is_required_and_checked(tmp_path):
    src = next((GOLDEN / "ensembles").glob("*eta0.5_*.csv"))
    csv = tmp_path / src.name
    shutil.copy(src, csv)
    with pytest.raises(ParameterError, match="no manifest"):
        read_ensemble(csv)
    assert read_ensemble(csv, force=True)["params"].eta == 0.5
    shutil.copy(src.with_name(src.name[:-4] + ".manifest.json"), tmp_path)
    read_ensemble(csv)
    csv.write_text(csv.read_text().replace("n_e,", "n_e,1", 1))
    with pytest.raises(ParameterError, match="digest"):
        read_ensemble(csv)


def test_table_round_trip(tmp_path):
    cols = {"eta": [0.1, 0.25], "name": ["a", "b"], "n": [1, 2]}
    path = write_table(tmp_path / "x.csv", cols, header=["hello"])
    back = read_table(path)
    assert back["eta"].tolist() == [0.1, 0.25] and back["name"].tolist() == ["a", "b"]
    assert path.read_text().startswith("# hello\n")


# exit codes ------------------------------------------------------------------------

def test_exit_codes(tmp_path, capsys):
    assert run_cli("run", "--set", "eta=0.5", "--out", tmp_path) == 2
    assert run_cli("run", "--set", "L=8", "--set", "eta=0.5", "--set", "colour=red", "--out", tmp_path) == 2
    assert run_cli("run", "--set", "L=2", "--set", "eta=0.5", "--out", tmp_path) == 2
    assert run_cli("frobnicate") == 2
    assert run_cli("exact", "--set", "L=20", "--out", tmp_path) == 2
    assert run_cli("sweep", "--set", "L=8", "--set", "eta_grid=0.1,0.2", "--out", tmp_path) == 2
    # a fit that cannot bracket the transition is a numerical failure
    ens = sorted((GOLDEN / "ensembles").glob("*eta0.[67]_*.csv"))
    assert run_cli("analyze", "--set", "inputs=" + ",".join(map(str, ens)), "--out", tmp_path) == 3
    capsys.readouterr()


def test_run_is_reproducible_and_noiseless_run_is_empty(tmp_path):
    argv = ["run", "--set", "L=16", "--set", "eta=0.6", "--traj", "30", "--seed", "5"]
    assert run_cli(*argv, "--out", tmp_path / "a") == 0
    assert run_cli(*argv, "--threads", "4", "--out", tmp_path / "b") == 0
    (a,), (b,) = (list((tmp_path / d).glob("*.csv")) for d in "ab")
    assert a.read_bytes() == b.read_bytes()
    assert run_cli("run", "--set", "L=16", "--set", "eta=0", "--traj", "4", "--out", tmp_path / "z") == 0
    data = read_ensemble(next((tmp_path / "z").glob("*.csv")))
    for name, (_, m, s, _) in data["series"].items():
        assert np.all(s == 0)
        assert np.all(m == (1.0 if name.startswith(("omega", "corr")) else 0.0))


def test_golden_ensembles_regenerate_bytewise(tmp_path):
    for eta in ("0.5", "0.6", "0.7"):
        assert run_cli("run", "--set", "L=32", "--set", f"eta={eta}", "--set", "ls=4,16",
                       "--traj", 200, "--seed", 11, "--out", tmp_path) == 0
    for new in tmp_path.glob("*.csv"):
        assert csv_body(new) == csv_body(GOLDEN / "ensembles" / new.name)


def test_analyze_matches_golden_fit(tmp_path):
    assert run_cli("analyze", "--set", f"inputs={GOLDEN}/ensembles/*.csv", "--out", tmp_path) == 0
    got = json.loads(next(tmp_path.glob("fit_critical_*[0-9a-f].json")).read_text())
    want = json.loads((GOLDEN / "fit_critical.json").read_text())
    assert got == want


def test_meanfield_command_matches_closed_forms(tmp_path):
    assert run_cli("meanfield", "--set", "eta_grid=0.2,0.5,1.5", "--set", "f_e_grid=0.5,1.0",
                   "--out", tmp_path) == 0
    tab = read_table(tmp_path / "meanfield.csv")
    for eta, fe, ne, nd in zip(tab["eta"], tab["f_e"], tab["n_e"], tab["n_d"]):
        ss = meanfield.mf_steady(meanfield.RateParams(eta, 1.0, fe))
        assert ne == ss.n_e and nd == ss.n_d


def test_exact_command_spectrum(tmp_path):
    assert run_cli("exact", "--set", "L=4", "--set", "eta_grid=0.3,0.6065,1.0",
                   "--semantics", "full-channel", "--out", tmp_path) == 0
    tab = read_table(tmp_path / "spectrum.csv")
    assert np.allclose(tab["lambda_0"], 0.0, atol=1e-10)
    assert np.all(tab["gap"] < 0)
