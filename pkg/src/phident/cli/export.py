"""CSV and manifest writers for run directories."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from ..datasets import TrajectoryDataset, format_csv


def write_csv(path, header: list[str], rows) -> Path:
    p = Path(path)
    p.write_bytes(format_csv(header, np.asarray(rows, dtype=np.float64).reshape(-1, len(header))))
    return p


def trajectory_table(t: np.ndarray, X: list[np.ndarray], Xdot: list[np.ndarray], sim_ids) -> tuple[list[str], np.ndarray]:
    """Columns ``t, x_<i>_<sim>, …, x_<i>_dt_<sim>, …``."""
    header, cols = ["t"], [t]
    for s, x, xd in zip(sim_ids, X, Xdot):
        for i in range(x.shape[1]):
            header.append(f"x_{i}_{s}")
            cols.append(x[:, i])
        for i in range(x.shape[1]):
            header.append(f"x_{i}_dt_{s}")
            cols.append(xd[:, i])
    return header, np.column_stack(cols)


def error_table(t: np.ndarray, errors: np.ndarray, field: str, prefix: str = "error_state") -> tuple[list[str], np.ndarray]:
    """Columns ``t, <prefix>_error_<field>_<sim>…, mean_<prefix>_error_<field>``."""
    errors = np.asarray(errors, dtype=np.float64).reshape(-1, len(t))
    header = ["t"] + [f"{prefix}_error_{field}_{k}" for k in range(len(errors))]
    header.append(f"mean_{prefix}_error_{field}")
    mean = errors.mean(axis=0) if len(errors) else np.zeros(len(t))
    return header, np.column_stack([t, errors.T, mean])


def export_csv(out_dir, ds: TrajectoryDataset, preds, report, label: str, max_sims: int | None = None) -> list[Path]:
    """Reference/predicted trajectories and per-field error tables for ``ds``."""
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    n = ds.n_sims if max_sims is None else min(max_sims, ds.n_sims)
    t = ds.sims[0].t
    ids = list(range(n))
    files = [
        write_csv(d / "reference.csv", *trajectory_table(t, [s.X for s in ds.sims[:n]], [s.Xdot for s in ds.sims[:n]], ids)),
        write_csv(d / f"{label}.csv", *trajectory_table(t, [p.X for p in preds[:n]], [p.Xdot for p in preds[:n]], ids)),
    ]
    fields = report.field_errors or {"x": report.e_x}
    for name, e in fields.items():
        files.append(write_csv(d / f"rms_error_state_{name}.csv", *error_table(t, e, name)))
    files.append(write_csv(d / "rms_error_latent.csv", *error_table(t, report.e_z, "z", "error_latent")))
    return files


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(run_dir, files: list[Path]) -> Path:
    d = Path(run_dir)
    entries = {str(Path(f).relative_to(d)): sha256_file(f) for f in sorted(set(map(Path, files)))}
    p = d / "manifest.json"
    p.write_text(json.dumps({"schema_version": 1, "files": entries}, indent=1, sort_keys=True) + "\n")
    return p


def verify_manifest(run_dir) -> list[str]:
    """Names of files whose content no longer matches the manifest."""
    d = Path(run_dir)
    doc = json.loads((d / "manifest.json").read_text())
    return [name for name, h in doc["files"].items() if not (d / name).exists() or sha256_file(d / name) != h]
