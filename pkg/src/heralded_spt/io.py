"""Configuration parsing, ensemble CSV files and run manifests.

Ensemble CSV layout (one file per parameter cell)::

    # heralded-spt ensemble v1
    # run_id: <sha256 of the canonical run description>
    # params: {"L": ..., ...}
    # columns: time,observable,mean,stderr,n_traj
    time,observable,mean,stderr,n_traj
    0.2,n_e,0.0123,0.0004,1000
    ...

Floats are written in their shortest round-trip form, so files reproduce
values exactly and identical runs give identical bytes. The manifest next
to each file records the SHA-256 digest of the file.
"""

from __future__ import annotations

import hashlib
import json
import platform
import time
from pathlib import Path

import numpy as np

from . import __version__
from .params import ParameterError, SimParams

CSV_MAGIC = "# heralded-spt ensemble v1"
COLUMNS = ("time", "observable", "mean", "stderr", "n_traj")


def fmt(x) -> str:
    # shortest string that round-trips exactly
    return repr(float(x))


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    return sha256_bytes(Path(path).read_bytes())


def run_id(description: dict) -> str:
    blob = json.dumps(description, sort_keys=True, separators=(",", ":"), default=str)
    return sha256_bytes(blob.encode())[:16]


# config ----------------------------------------------------------------------

def parse_value(text: str):
    """Parse a config value: int, float, bool, comma list of those, or string."""
    text = text.strip()
    if "," in text:
        return [parse_value(part) for part in text.split(",") if part.strip()]
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; later keys override."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{source}:{lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParameterError(f"{source}:{lineno}: empty key")
        out[key] = parse_value(value)
    return out


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParameterError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, str(path))


def parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ParameterError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = parse_value(value)
    return out


# ensemble files --------------------------------------------------------------

def ensemble_csv_text(stats, header_id: str) -> str:
    lines = [CSV_MAGIC, f"# run_id: {header_id}",
             f"# params: {stats.params.canonical_json()}",
             f"# columns: {','.join(COLUMNS)}", ",".join(COLUMNS)]
    mean, err = stats.mean, stats.stderr
    for k, name in enumerate(stats.names):
        for s, t in enumerate(stats.times):
            lines.append(f"{fmt(t)},{name},{fmt(mean[s, k])},{fmt(err[s, k])},{stats.count}")
    return "\n".join(lines) + "\n"


def write_manifest(path, params: SimParams | None, files: dict, extra: dict | None = None):
    """Write ``<path>`` (JSON) describing outputs ``files`` (name -> path)."""
    manifest = {
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "created_unix": time.time(),
        "files": {name: {"path": Path(p).name, "sha256": sha256_file(p)}
                  for name, p in files.items()},
    }
    if params is not None:
        manifest.update({
            "params": params.to_dict(),
            "semantics": params.semantics.value,
            "master_seed": params.master_seed,
            "n_traj": params.n_traj,
        })
    manifest.update(extra or {})
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def write_ensemble(stats, out_dir, stem: str | None = None, extra: dict | None = None):
    """Write the ensemble CSV and its manifest; return ``(csv_path, manifest_path)``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    desc = {"params": stats.params.to_dict(), "sweeps": stats.sweeps.tolist(),
            "stream_range": list(stats.stream_range), "observables": stats.names}
    rid = run_id(desc)
    stem = stem or f"ensemble_L{stats.params.L}_eta{stats.params.eta:g}_{rid}"
    csv_path = out_dir / f"{stem}.csv"
    csv_path.write_text(ensemble_csv_text(stats, rid))
    man_path = out_dir / f"{stem}.manifest.json"
    info = {"run_id": rid, "stream_range": list(stats.stream_range),
            "dt_per_sweep": float(stats.times[1] / stats.sweeps[1]) if stats.sweeps.size > 1
            and stats.sweeps[1] else None}
    info.update(extra or {})
    write_manifest(man_path, stats.params, {"ensemble": csv_path}, info)
    return csv_path, man_path


def csv_body(path) -> str:
    """File content after the ``#`` header lines (what determinism checks compare)."""
    return "".join(line for line in Path(path).read_text().splitlines(keepends=True)
                   if not line.startswith("#"))


def manifest_for(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.name[:-4] + ".manifest.json") if p.name.endswith(".csv") else \
        p.with_suffix(".manifest.json")


def read_ensemble(path, force: bool = False) -> dict:
    """Load an ensemble CSV into ``{"params", "run_id", "series": {name: (t, mean, stderr, n)}}``.

    The manifest must exist and its digest must match unless ``force``.
    """
    path = Path(path)
    if not force:
        man = manifest_for(path)
        if not man.exists():
            raise ParameterError(f"{path}: no manifest (pass force to read anyway)")
        digest = json.loads(man.read_text())["files"]["ensemble"]["sha256"]
        if digest != sha256_file(path):
            raise ParameterError(f"{path}: digest does not match its manifest")
    params, rid = None, None
    rows = {}
    with path.open() as fh:
        first = fh.readline().rstrip("\n")
        if first != CSV_MAGIC:
            raise ParameterError(f"{path}: not an ensemble CSV")
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# params: "):
                params = SimParams.from_dict(json.loads(line[len("# params: "):]))
            elif line.startswith("# run_id: "):
                rid = line[len("# run_id: "):]
            elif line.startswith("#") or line == ",".join(COLUMNS) or not line:
                continue
            else:
                t, name, m, s, n = line.split(",")
                rows.setdefault(name, []).append((float(t), float(m), float(s), int(n)))
    series = {}
    for name, vals in rows.items():
        arr = np.array(vals)
        series[name] = (arr[:, 0], arr[:, 1], arr[:, 2], int(arr[0, 3]))
    return {"params": params, "run_id": rid, "series": series}


def write_table(path, columns: dict, header: list[str] | None = None):
    """Write equal-length columns as CSV with optional ``#`` header lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    n = len(next(iter(columns.values()))) if columns else 0
    lines = [f"# {h}" for h in header or []]
    lines.append(",".join(names))
    for i in range(n):
        cells = []
        for name in names:
            v = columns[name][i]
            cells.append(fmt(v) if isinstance(v, (float, np.floating)) else str(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_table(path) -> dict:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    names = lines[0].split(",")
    cols = {n: [] for n in names}
    for ln in lines[1:]:
        for n, v in zip(names, ln.split(",")):
            cols[n].append(parse_value(v))
    return {n: np.array(v) for n, v in cols.items()}
