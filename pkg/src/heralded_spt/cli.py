"""Command-line entry point: ``heralded-spt <command> [options]``.

Commands: ``run``, ``sweep``, ``chiral`` (Monte Carlo ensembles),
``meanfield``, ``exact`` and ``analyze``. Configuration is a flat
``key = value`` file (``--config``) plus repeatable ``--set key=value``
overrides; the dedicated flags (``--seed``, ``--traj``, ``--semantics``)
win over both. Unknown keys are errors.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import glob
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import exact, meanfield, scaling
from .ensemble import geometric_schedule, linear_schedule, run_ensemble
from .io import (load_config, parse_overrides, read_ensemble, run_id, write_ensemble,
                 write_manifest, write_table)
from .params import Boundary, NumericalError, ParameterError, SimParams

log = logging.getLogger("heralded_spt")

PRESETS = {
    # expected single-core wall time for one eta at the default schedule
    "quick": {"L": 128, "n_traj": 1000},    # about 1 minute
    "paper": {"L": 512, "n_traj": 20000},   # several hours
}

SIM_KEYS = {f.name for f in dataclasses.fields(SimParams)}
ENSEMBLE_KEYS = {"schedule", "per_decade", "stride", "ls", "zeta", "chunk_size",
                 "stream_start", "stream_stop"}
KEYS = {
    "run": SIM_KEYS | ENSEMBLE_KEYS,
    "chiral": SIM_KEYS | ENSEMBLE_KEYS,
    "sweep": SIM_KEYS | ENSEMBLE_KEYS | {"eta_grid", "f_e_grid", "steady_fraction"},
    "meanfield": {"eta_grid", "f_e_grid", "gamma", "mode", "t_max", "dt"},
    "exact": {"L", "L_grid", "eta", "eta_grid", "gamma", "f_e", "mu", "boundary", "semantics",
              "sector", "k"},
    "analyze": {"inputs", "task", "observable", "transform", "b", "decades", "eta_c", "delta",
                "force", "model", "window", "n_boot"},
}
TRANSFORMS = {"identity": None, "one_minus": (-1.0, 1.0), "half_minus": (-1.0, 0.5)}


def _as_list(value):
    return value if isinstance(value, list) else [value]


def gather_config(args, command: str) -> dict:
    cfg = {}
    if getattr(args, "preset", None) and command in ("run", "chiral", "sweep"):
        cfg.update(PRESETS[args.preset])
    if args.config:
        cfg.update(load_config(args.config))
    cfg.update(parse_overrides(args.set))
    if args.seed is not None:
        cfg["master_seed"] = args.seed
    if args.traj is not None:
        cfg["n_traj"] = args.traj
    if args.semantics is not None:
        cfg["semantics"] = args.semantics
    allowed = KEYS[command]
    unknown = sorted(set(cfg) - allowed - ({"n_traj", "master_seed", "semantics"}
                                           if command in ("meanfield", "analyze") else set()))
    if unknown:
        raise ParameterError(f"unknown key(s) for '{command}': {unknown}")
    return cfg


def build_params(cfg: dict, required=("L", "eta"), **forced) -> SimParams:
    missing = [k for k in required if k not in cfg]
    if missing:
        raise ParameterError(f"missing required parameter(s): {missing}")
    sim = {k: v for k, v in cfg.items() if k in SIM_KEYS}
    sim.update(forced)
    if "t_max_sweeps" not in sim:
        sim["t_max_sweeps"] = int(math.ceil(2 * int(sim["L"]) ** 1.5))
    try:
        return SimParams(**sim)
    except TypeError as exc:
        raise ParameterError(str(exc)) from exc


def build_schedule(cfg: dict, params: SimParams):
    kind = cfg.get("schedule", "geometric")
    if kind == "geometric":
        return geometric_schedule(params.t_max_sweeps, int(cfg.get("per_decade", 20)))
    if kind == "linear":
        return linear_schedule(params.t_max_sweeps, int(cfg.get("stride", params.measure_stride)))
    raise ParameterError(f"schedule must be 'geometric' or 'linear', got {kind!r}")


def _ensemble(cfg, params, workers):
    stream = None
    if "stream_start" in cfg or "stream_stop" in cfg:
        stream = (int(cfg.get("stream_start", 0)), int(cfg.get("stream_stop", params.n_traj)))
    ls = cfg.get("ls")
    return run_ensemble(params, build_schedule(cfg, params),
                        ls=None if ls is None else _as_list(ls),
                        want_zeta=bool(cfg.get("zeta", True)), workers=workers,
                        chunk_size=int(cfg.get("chunk_size", 32)), stream_range=stream)


def cmd_run(args) -> int:
    cfg = gather_config(args, "run")
    params = build_params(cfg)
    if params.boundary is not Boundary.PERIODIC:
        raise ParameterError("use the 'chiral' command for the open chain")
    t0 = time.time()
    stats = _ensemble(cfg, params, args.threads)
    csv_path, man = write_ensemble(stats, args.out, extra={"wall_time_s": time.time() - t0,
                                                           "dt_convention": "1/(eta+4 gamma) per sweep"})
    print(csv_path)
    return 0


def cmd_chiral(args) -> int:
    cfg = gather_config(args, "chiral")
    params = build_params(cfg, boundary=Boundary.CHIRAL_OPEN)
    t0 = time.time()
    stats = _ensemble(cfg, params, args.threads)
    pred = meanfield.mf_chiral(params)
    csv_path, man = write_ensemble(stats, args.out, extra={
        "wall_time_s": time.time() - t0, "dt_convention": "1/(eta+2 gamma) per sweep",
        "mean_field": pred})
    print(csv_path)
    return 0


def _steady(stats, name, frac):
    return stats.steady_state(name, frac * stats.times[-1])


def cmd_sweep(args) -> int:
    cfg = gather_config(args, "sweep")
    etas = _as_list(cfg.pop("eta_grid", cfg.get("eta")))
    fes = _as_list(cfg.pop("f_e_grid", cfg.get("f_e", 1.0)))
    if None in etas:
        raise ParameterError("sweep needs eta_grid (or eta)")
    if len(etas) < 3 and len(fes) < 3:
        raise ParameterError("grid too coarse: need at least 3 points along a swept axis")
    frac = float(cfg.pop("steady_fraction", 0.5))
    cols = {k: [] for k in ("eta", "f_e", "n_e", "n_e_err", "n_d", "n_d_err", "omega_half",
                            "omega_half_err", "zeta", "zeta_err", "h", "h_err")}
    base = dict(cfg)
    t0 = time.time()
    for fe in fes:
        for eta in etas:
            base.update(eta=float(eta), f_e=float(fe))
            params = build_params(base)
            stats = _ensemble(base, params, args.threads)
            cols["eta"].append(float(eta))
            cols["f_e"].append(float(fe))
            for key, name in (("n_e", "n_e"), ("n_d", "n_d"), ("h", "h"), ("zeta", "zeta"),
                              ("omega_half", f"omega_{params.L // 2}")):
                m, s = _steady(stats, name, frac)
                cols[key].append(m)
                cols[key + "_err"].append(s)
    out = Path(args.out)
    path = write_table(out / "phase_diagram.csv", cols,
                       header=["heralded-spt steady-state sweep",
                               f"steady window: t >= {frac:g} t_max"])
    write_manifest(out / "phase_diagram.manifest.json", params, {"phase_diagram": path},
                   {"eta_grid": etas, "f_e_grid": fes, "wall_time_s": time.time() - t0})
    print(path)
    return 0


def cmd_meanfield(args) -> int:
    cfg = gather_config(args, "meanfield")
    etas = _as_list(cfg.get("eta_grid", list(np.round(np.linspace(0.1, 4.0, 40), 6))))
    fes = _as_list(cfg.get("f_e_grid", list(np.round(np.linspace(0.0, 1.0, 21), 6))))
    gamma = float(cfg.get("gamma", 1.0))
    mode = cfg.get("mode", "steady")
    if mode == "steady":
        table = meanfield.phase_diagram(etas, fes, gamma)
    elif mode == "integrate":
        table = {k: [] for k in ("eta", "f_e", "n_e", "n_d", "h")}
        for fe in fes:
            for eta in etas:
                p = meanfield.RateParams(float(eta), gamma, float(fe))
                t_max = float(cfg.get("t_max", 200.0 / min(max(eta, 1e-3), gamma)))
                fin = meanfield.mf_integrate(p, t_max, cfg.get("dt")).final
                for k, v in (("eta", eta), ("f_e", fe), ("n_e", fin.n_e), ("n_d", fin.n_d),
                             ("h", fin.h)):
                    table[k].append(float(v))
    else:
        raise ParameterError(f"mode must be 'steady' or 'integrate', got {mode!r}")
    path = write_table(Path(args.out) / "meanfield.csv", table,
                       header=[f"heralded-spt mean field ({mode})", f"gamma = {gamma:g}"])
    write_manifest(Path(args.out) / "meanfield.manifest.json", None, {"meanfield": path},
                   {"mode": mode, "gamma": gamma})
    print(path)
    return 0


def cmd_exact(args) -> int:
    cfg = gather_config(args, "exact")
    Ls = _as_list(cfg.get("L_grid", cfg.get("L", 4)))
    etas = _as_list(cfg.get("eta_grid", cfg.get("eta", 0.6065)))
    k = int(cfg.get("k", 6))
    sector = cfg.get("sector", "even")
    sim = {key: cfg[key] for key in ("gamma", "f_e", "mu", "boundary", "semantics") if key in cfg}
    plist = [SimParams(L=int(L), eta=float(eta), **sim) for L in Ls for eta in etas]
    rows = exact.spectrum_rows(plist, k, sector)
    table = {name: [r.get(name, float("nan")) for r in rows] for name in rows[0]}
    path = write_table(Path(args.out) / "spectrum.csv", table,
                       header=["heralded-spt generator spectrum (real parts, descending)",
                               f"sector = {sector}"])
    write_manifest(Path(args.out) / "spectrum.manifest.json", None, {"spectrum": path},
                   {"sector": sector, "settings": sim})
    print(path)
    return 0


def _load_family(cfg, force):
    patterns = _as_list(cfg.get("inputs", []))
    paths = sorted({p for pat in patterns for p in glob.glob(str(pat))})
    if not paths:
        raise ParameterError(f"no input files match {patterns}")
    name = cfg.get("observable", "n_e")
    tkey = cfg.get("transform", "one_minus" if name == "n_e" else
                   "half_minus" if name == "n_d" else "identity")
    if tkey not in TRANSFORMS:
        raise ParameterError(f"transform must be one of {sorted(TRANSFORMS)}")
    tr = TRANSFORMS[tkey]
    scale, offset = (1.0, 0.0) if tr is None else tr
    family = []
    for p in paths:
        data = read_ensemble(p, force=force)
        if name not in data["series"]:
            raise ParameterError(f"{p} has no observable {name!r}")
        t, m, s, n = data["series"][name]
        keep = t > 0
        prm = data["params"]
        family.append(scaling.EnsembleSeries(
            t[keep], offset + scale * m[keep], abs(scale) * s[keep],
            {"eta": prm.eta, "L": prm.L, "f_e": prm.f_e, "observable": name, "n_traj": n,
             "file": p}))
    return family, paths


def cmd_analyze(args) -> int:
    cfg = gather_config(args, "analyze")
    task = cfg.get("task", "critical")
    family, paths = _load_family(cfg, bool(cfg.get("force", False)))
    fit = scaling.ScalingFit()
    b = float(cfg.get("b", 10.0))
    if task == "critical":
        ce = scaling.find_critical(family, b, float(cfg.get("decades", 1.0)))
        fit.eta_c = scaling.Estimate(ce.eta_c, ce.eta_err, {"slopes": ce.slopes,
                                                            "interpolated": ce.eta_c_interp})
        fit.delta = scaling.Estimate(ce.delta, ce.delta_err, {"intercept": ce.delta_intercept})
    elif task == "collapse":
        for key in ("eta_c", "delta"):
            if key not in cfg:
                raise ParameterError(f"collapse needs {key}")
        fit.nu_t = scaling.optimize_collapse(family, float(cfg["delta"]), float(cfg["eta_c"]))
    elif task == "fss":
        if "delta" not in cfg:
            raise ParameterError("fss needs delta")
        fit.z = scaling.optimize_fss(family, float(cfg["delta"]))
    elif task == "decay":
        model = cfg.get("model", "exp")
        s = family[0]
        window = cfg.get("window")
        df = scaling.fit_decay(s.t, s.mean, model, sigma=s.stderr,
                               delta=cfg.get("delta"), window=window)
        fit.amplitudes = {"model": model, "params": df.params, "stderr": df.stderr,
                          "residual_norm": df.residual_norm, "window": df.window}
        if "tau" in df.params:
            fit.tau = scaling.Estimate(df.params["tau"], df.stderr["tau"])
    else:
        raise ParameterError("task must be one of critical, collapse, fss, decay")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rid = run_id({"task": task, "inputs": paths, "cfg": cfg})
    path = out / f"fit_{task}_{rid}.json"
    path.write_text(fit.to_json() + "\n")
    write_manifest(out / f"fit_{task}_{rid}.manifest.json", None, {"fit": path},
                   {"inputs": paths, "task": task})
    print(path)
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "chiral": cmd_chiral,
            "meanfield": cmd_meanfield, "exact": cmd_exact, "analyze": cmd_analyze}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value configuration file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", default=[],
                        help="override one configuration key (repeatable)")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--traj", type=int, help="number of trajectories")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("--semantics", choices=["as-published", "full-channel"])
    common.add_argument("--preset", choices=sorted(PRESETS))
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="heralded-spt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=f"{name} command")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ParameterError, FileNotFoundError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
