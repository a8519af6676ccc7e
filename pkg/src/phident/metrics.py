"""Relative trajectory errors and projection diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DegenerateReferenceError(ValueError):
    pass


def relative_error(ref: np.ndarray, pred: np.ndarray, columns=None) -> np.ndarray:
    """``‖ref(t) − pred(t)‖ / mean_t ‖ref(t)‖`` for one simulation (rows are time)."""
    ref, pred = np.asarray(ref, dtype=np.float64), np.asarray(pred, dtype=np.float64)
    if ref.shape != pred.shape:
        raise ValueError(f"reference {ref.shape} and prediction {pred.shape} differ in shape")
    if columns is not None:
        ref, pred = ref[:, columns], pred[:, columns]
    denom = np.mean(np.linalg.norm(ref, axis=1))
    if not denom > 0:
        raise DegenerateReferenceError("reference trajectory is identically zero")
    return np.linalg.norm(ref - pred, axis=1) / denom


def state_error(X_ref: list, X_pred: list, columns=None) -> tuple[np.ndarray, float]:
    """Per-sim, per-step ``e_x`` (shape ``(n_s, n_t)``) and its mean ``ē_x``."""
    e = np.stack([relative_error(a, b, columns) for a, b in zip(X_ref, X_pred)])
    return e, float(np.mean(e))


def latent_error(ae, X_ref: list, Z_pred: list) -> tuple[np.ndarray, float]:
    """``e_z`` with the encoded reference ``enc(x)`` as target."""
    e = np.stack([relative_error(ae.encode(x), z) for x, z in zip(X_ref, Z_pred)])
    return e, float(np.mean(e))


@dataclass
class ProjectionReport:
    e_proj: float
    e_jac: float
    n_samples: int
    n_excluded: int
    norm: str = "spectral"


def projection_errors(ae, X: np.ndarray, norm: str = "spectral") -> ProjectionReport:
    """Mean of ``‖z − enc(dec(z))‖² / ‖z‖²`` and of ``‖I − D_enc D_dec‖²`` over samples.

    ``z = enc(x)`` for every row of ``X``. Samples with ``z = 0`` are left out
    of ``e_proj`` and counted. ``norm`` is ``"spectral"`` or ``"fro"``.
    """
    if norm not in ("spectral", "fro"):
        raise ValueError(f"unknown matrix norm {norm!r}")
    X = np.asarray(X, dtype=np.float64)
    Z = ae.encode(X)
    Zp = ae.encode(ae.decode(Z))
    nz = np.einsum("ij,ij->i", Z, Z)
    keep = nz > 0
    proj = np.einsum("ij,ij->i", Z - Zp, Z - Zp)[keep] / nz[keep]
    I = np.eye(ae.r)
    jac = np.empty(len(Z))
    for i, z in enumerate(Z):
        M = I - ae.encoder_jacobian(ae.decode(z)) @ ae.decoder_jacobian(z)
        jac[i] = np.linalg.norm(M, 2 if norm == "spectral" else "fro") ** 2
    return ProjectionReport(
        float(np.mean(proj)) if proj.size else 0.0,
        float(np.mean(jac)),
        int(keep.sum()),
        int((~keep).sum()),
        norm,
    )


@dataclass
class ErrorReport:
    e_x: np.ndarray
    e_z: np.ndarray
    mean_e_x: float
    mean_e_z: float
    e_proj: float | None = None
    e_jac: float | None = None
    n_proj_excluded: int = 0
    field_errors: dict[str, np.ndarray] = field(default_factory=dict)

    def summary(self) -> dict:
        out = {"mean_e_x": self.mean_e_x, "mean_e_z": self.mean_e_z}
        if self.e_proj is not None:
            out.update(e_proj=self.e_proj, e_jac=self.e_jac, n_proj_excluded=self.n_proj_excluded)
        for name, e in self.field_errors.items():
            out[f"mean_e_x_{name}"] = float(np.mean(e))
        return out
