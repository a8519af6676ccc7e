"""Dataset directories: ``meta.json`` plus one CSV per simulation."""

from __future__ import annotations

import hashlib
import io as _io
import json
from pathlib import Path

import numpy as np

from .core import Simulation, TrajectoryDataset

SCHEMA_VERSION = 1


def blob_sha1(data: bytes) -> str:
    """Git blob hash of ``data``."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def format_csv(header: list[str], rows: np.ndarray) -> bytes:
    """Comma-separated, LF line endings, 17 significant digits."""
    buf = _io.StringIO()
    buf.write(",".join(header) + "\n")
    rows = np.asarray(rows, dtype=np.float64).reshape(-1, len(header))
    if rows.size:
        np.savetxt(buf, rows, fmt="%.17g", delimiter=",", newline="\n")
    return buf.getvalue().encode()


def read_csv(path) -> tuple[list[str], np.ndarray]:
    text = Path(path).read_text()
    header = text.split("\n", 1)[0].split(",")
    body = np.loadtxt(_io.StringIO(text), delimiter=",", skiprows=1, ndmin=2, dtype=np.float64)
    return header, body.reshape(-1, len(header))


def _sim_columns(ds: TrajectoryDataset) -> list[str]:
    return (
        ["t"]
        + [f"mu_{i}" for i in range(ds.n_mu)]
        + [f"u_{i}" for i in range(ds.n_p)]
        + [f"x_{i}" for i in range(ds.N)]
        + [f"xdot_{i}" for i in range(ds.N)]
    )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_dataset(ds: TrajectoryDataset, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    cols = _sim_columns(ds)
    hashes = {}
    for k, s in enumerate(ds.sims):
        rows = np.column_stack([s.t, np.repeat(s.mu[None, :], len(s.t), axis=0), s.U, s.X, s.Xdot])
        data = format_csv(cols, rows)
        name = f"sim_{k:04d}.csv"
        (d / name).write_bytes(data)
        hashes[name] = blob_sha1(data)
    listing = "".join(f"{name} {h}\n" for name, h in sorted(hashes.items())).encode()
    meta = {
        "schema_version": SCHEMA_VERSION,
        "n_sims": ds.n_sims,
        "n_t": ds.n_t,
        "N": ds.N,
        "n_p": ds.n_p,
        "n_mu": ds.n_mu,
        "fields": {k: list(v) for k, v in ds.fields.items()},
        "meta": _jsonable(ds.meta),
        "files": hashes,
        "content_hash": blob_sha1(listing),
    }
    (d / "meta.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    return d


def read_dataset(directory, verify: bool = True) -> TrajectoryDataset:
    d = Path(directory)
    meta = json.loads((d / "meta.json").read_text())
    n_mu, n_p, N = meta["n_mu"], meta["n_p"], meta["N"]
    sims = []
    for k in range(meta["n_sims"]):
        name = f"sim_{k:04d}.csv"
        if verify:
            got = blob_sha1((d / name).read_bytes())
            if got != meta["files"][name]:
                raise ValueError(f"{name} does not match the hash recorded in meta.json")
        _, a = read_csv(d / name)
        o = 1
        mu = a[0, o : o + n_mu]
        o += n_mu
        U = a[:, o : o + n_p]
        o += n_p
        sims.append(Simulation(mu, a[:, 0], a[:, o : o + N], a[:, o + N : o + 2 * N], U))
    fields = {k: tuple(v) for k, v in meta["fields"].items()}
    return TrajectoryDataset(sims, fields, meta.get("meta", {}))
