"""Port-Hamiltonian matrix algebra and property checks.

The constrained construction

    J = Θ_J − Θ_Jᵀ,   R = Θ_R Θ_Rᵀ,   Q = Θ_Q Θ_Qᵀ + εI

works on plain arrays as well as on graph values with arbitrary leading batch
axes, so the same code builds matrices for evaluation and for training.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import linalg as sla
from scipy.optimize import linear_sum_assignment

from .diffkit import ops

EPS_Q = 1e-6


class SizeError(ValueError):
    pass


class DefinitenessError(np.linalg.LinAlgError):
    pass


def n_skew(r: int) -> int:
    return r * (r - 1) // 2


def n_sym(r: int) -> int:
    return r * (r + 1) // 2


def ph_weight_sizes(r: int, n_p: int, frozen_Q: bool = False) -> dict[str, int]:
    sizes = {"J": n_skew(r), "R": n_sym(r), "Q": n_sym(r), "B": r * n_p}
    if frozen_Q:
        del sizes["Q"]
    return sizes


@lru_cache(maxsize=None)
def _tril_positions(r: int, strict: bool) -> np.ndarray:
    # row-major walk over the (strict) lower triangle
    pos = [i * r + j for i in range(r) for j in range(i + (0 if strict else 1))]
    return np.array(pos, dtype=np.intp)


def assemble_triangular(theta, r: int, strict: bool = False):
    """Fill the (strict) lower triangle of an ``r × r`` matrix row by row.

    ``theta`` may carry leading batch axes; the last axis holds the entries.
    """
    need = n_skew(r) if strict else n_sym(r)
    v = theta.value if ops.is_var(theta) else np.asarray(theta, dtype=np.float64)
    if v.ndim == 0 or v.shape[-1] != need:
        got = v.shape[-1] if v.ndim else "a scalar"
        kind = "strict lower" if strict else "lower"
        raise SizeError(f"{kind} triangle of size {r} needs {need} entries, got {got}")
    flat = ops.embed(theta, _tril_positions(r, strict), r * r)
    return ops.reshape(flat, v.shape[:-1] + (r, r))


def ph_matrices(theta_J, theta_R, theta_Q, theta_B, r: int, n_p: int, eps: float = EPS_Q):
    """``(J, R, Q, B)`` from weight segments; ``theta_Q=None`` fixes ``Q = I``."""
    Tj = assemble_triangular(theta_J, r, strict=True)
    J = ops.sub(Tj, ops.transpose(Tj))
    Tr = assemble_triangular(theta_R, r)
    R = ops.matmul(Tr, ops.transpose(Tr))
    if theta_Q is None:
        Q = np.eye(r)
    else:
        Tq = assemble_triangular(theta_Q, r)
        Q = ops.add(ops.matmul(Tq, ops.transpose(Tq)), eps * np.eye(r))
    vb = theta_B.value if ops.is_var(theta_B) else np.asarray(theta_B)
    if vb.shape[-1] != r * n_p:
        raise SizeError(f"port matrix needs {r * n_p} entries, got {vb.shape[-1]}")
    B = ops.reshape(theta_B, vb.shape[:-1] + (r, n_p))
    return J, R, Q, B


@dataclass
class PHSystem:
    """Linear time-invariant system ż = (J − R) Q z + B u,  y = Bᵀ Q z."""

    J: np.ndarray
    R: np.ndarray
    Q: np.ndarray
    B: np.ndarray

    def __post_init__(self) -> None:
        self.J = np.asarray(self.J, dtype=np.float64)
        self.R = np.asarray(self.R, dtype=np.float64)
        self.Q = np.asarray(self.Q, dtype=np.float64)
        self.B = np.asarray(self.B, dtype=np.float64)
        if self.B.ndim == 1:
            self.B = self.B[:, None]
        r = self.J.shape[0]
        for name in ("J", "R", "Q"):
            if getattr(self, name).shape != (r, r):
                raise SizeError(f"{name} must be {r}x{r}, got {getattr(self, name).shape}")
        if self.B.shape[0] != r:
            raise SizeError(f"B must have {r} rows, got {self.B.shape}")

    @property
    def r(self) -> int:
        return self.J.shape[0]

    @property
    def n_p(self) -> int:
        return self.B.shape[1]

    @property
    def A(self) -> np.ndarray:
        return (self.J - self.R) @ self.Q

    def rhs(self, z: np.ndarray, u: np.ndarray) -> np.ndarray:
        return z @ self.A.T + np.atleast_1d(u) @ self.B.T

    def output(self, z: np.ndarray) -> np.ndarray:
        return z @ (self.B.T @ self.Q).T

    def to_json(self) -> dict:
        return {
            "r": self.r,
            "n_p": self.n_p,
            "J": self.J.ravel().tolist(),
            "R": self.R.ravel().tolist(),
            "Q": self.Q.ravel().tolist(),
            "B": self.B.ravel().tolist(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PHSystem":
        r, n_p = int(doc["r"]), int(doc["n_p"])
        return cls(
            np.array(doc["J"]).reshape(r, r),
            np.array(doc["R"]).reshape(r, r),
            np.array(doc["Q"]).reshape(r, r),
            np.array(doc["B"]).reshape(r, n_p),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))

    @classmethod
    def load(cls, path) -> "PHSystem":
        return cls.from_json(json.loads(Path(path).read_text()))


def build_ph_matrices(theta_J, theta_R, theta_Q, theta_B, r: int, n_p: int, eps: float = EPS_Q):
    """Concrete :class:`PHSystem` from numpy weight segments."""
    J, R, Q, B = ph_matrices(
        np.asarray(theta_J, dtype=np.float64),
        np.asarray(theta_R, dtype=np.float64),
        None if theta_Q is None else np.asarray(theta_Q, dtype=np.float64),
        np.asarray(theta_B, dtype=np.float64),
        r,
        n_p,
        eps,
    )
    return PHSystem(J, R, Q, B)


def normalize_to_identity_Q(sys: PHSystem) -> tuple[PHSystem, np.ndarray]:
    """Equivalent realization with ``Q = I``.

    With ``Q = L Lᵀ`` the state map is ``z̃ = Lᵀ z`` and the matrices become
    ``LᵀJL, LᵀRL, LᵀB``. Returns the new system and ``Lᵀ``.
    """
    try:
        L = np.linalg.cholesky(sys.Q)
    except np.linalg.LinAlgError as exc:
        raise DefinitenessError("energy matrix Q is not positive definite") from exc
    Lt = L.T
    return PHSystem(Lt @ sys.J @ L, Lt @ sys.R @ L, np.eye(sys.r), Lt @ sys.B), Lt


def hamiltonian(sys: PHSystem, z: np.ndarray) -> np.ndarray:
    """½ zᵀQz; ``z`` may be a batch of states (last axis)."""
    z = np.asarray(z, dtype=np.float64)
    return 0.5 * np.einsum("...i,ij,...j->...", z, sys.Q, z)


@dataclass
class PHPropertyReport:
    skew_defect: float
    R_symmetry_defect: float
    Q_symmetry_defect: float
    R_min_eig: float
    Q_min_eig: float
    eps: float = EPS_Q
    R_tol: float = 1e-10
    Q_tol: float = 1e-12

    @property
    def ok(self) -> bool:
        return (
            self.skew_defect <= 1e-12
            and self.R_symmetry_defect <= 1e-12
            and self.Q_symmetry_defect <= 1e-12
            and self.R_min_eig >= -self.R_tol
            and self.Q_min_eig >= self.eps - self.Q_tol
        )


def verify_ph_properties(sys: PHSystem, eps: float = EPS_Q) -> PHPropertyReport:
    """Skewness of J, symmetry and definiteness of R and Q."""
    return PHPropertyReport(
        skew_defect=float(np.max(np.abs(sys.J + sys.J.T))),
        R_symmetry_defect=float(np.max(np.abs(sys.R - sys.R.T))),
        Q_symmetry_defect=float(np.max(np.abs(sys.Q - sys.Q.T))),
        R_min_eig=float(np.linalg.eigvalsh(0.5 * (sys.R + sys.R.T))[0]),
        Q_min_eig=float(np.linalg.eigvalsh(0.5 * (sys.Q + sys.Q.T))[0]),
        eps=eps,
    )


@dataclass
class DissipationReport:
    delta_H: np.ndarray
    supply: np.ndarray
    dissipated: np.ndarray
    residual: np.ndarray
    violations: np.ndarray
    tol: float

    @property
    def ok(self) -> bool:
        return self.violations.size == 0


def check_dissipation(sys: PHSystem, Z: np.ndarray, U: np.ndarray, dt: float) -> DissipationReport:
    """Discrete energy balance along a rollout.

    Per step, ``ΔH`` is compared with the port supply ``dt·y_midᵀu_mid`` and
    the dissipated energy ``dt·(Qz_mid)ᵀR(Qz_mid)``; inputs are averaged over
    the step as in :func:`phident.integrate.simulate_latent`. A step violates
    the dissipation inequality when ``ΔH`` exceeds the supply by more than
    ``1e-9·max(1, H(z_0))``.
    """
    Z = np.asarray(Z, dtype=np.float64)
    U = np.asarray(U, dtype=np.float64).reshape(len(U), -1) if np.size(U) else np.zeros((len(Z), sys.n_p))
    if len(Z) != len(U):
        raise SizeError(f"{len(Z)} states but {len(U)} inputs")
    H = hamiltonian(sys, Z)
    dH = np.diff(H)
    z_mid = 0.5 * (Z[1:] + Z[:-1])
    u_mid = 0.5 * (U[1:] + U[:-1])
    e_mid = z_mid @ sys.Q
    supply = dt * np.einsum("ki,ki->k", sys.output(z_mid), u_mid)
    dissipated = dt * np.einsum("ki,ij,kj->k", e_mid, sys.R, e_mid)
    tol = 1e-9 * max(1.0, float(H[0]))
    return DissipationReport(
        delta_H=dH,
        supply=supply,
        dissipated=dissipated,
        residual=dH - (supply - dissipated),
        violations=np.flatnonzero(dH - supply > tol),
        tol=tol,
    )


@dataclass
class BoundednessReport:
    C_Z: float
    contained: bool
    max_H_excess: float


def check_boundedness(sys: PHSystem, z0: np.ndarray, horizon: int, dt: float, tol: float = 1e-9) -> BoundednessReport:
    """Unforced rollout must stay inside the sublevel set ``{H ≤ H(z0)}``."""
    from .integrate import TimeGrid, simulate_latent

    z0 = np.asarray(z0, dtype=np.float64)
    grid = TimeGrid(0.0, dt, horizon)
    Z = simulate_latent(sys, z0, np.zeros((horizon + 1, sys.n_p)), grid).states
    H = hamiltonian(sys, Z)
    H0 = float(H[0])
    excess = float(np.max(H - H0))
    return BoundednessReport(
        C_Z=float(np.max(np.linalg.norm(Z - z0, axis=1))),
        contained=excess <= tol * max(1.0, H0),
        max_H_excess=excess,
    )


@dataclass
class StateSpacePH:
    """Decoded pH matrices at ``x = dec(z)``."""

    x: np.ndarray
    D: np.ndarray
    J: np.ndarray
    R: np.ndarray
    B: np.ndarray
    skew_defect: float = field(init=False)
    R_min_eig: float = field(init=False)

    def __post_init__(self) -> None:
        self.skew_defect = float(np.max(np.abs(self.J + self.J.T)))
        self.R_min_eig = float(np.linalg.eigvalsh(0.5 * (self.R + self.R.T))[0])


def reconstruct_statespace_ph(ae, sys: PHSystem, z) -> StateSpacePH:
    """``J̄ = D J Dᵀ``, ``R̄ = D R Dᵀ``, ``B̄ = D B`` with ``D`` the decoder Jacobian at ``z``.

    ``ae`` is anything with ``decode`` and ``decoder_jacobian`` methods (see
    :class:`phident.autoencoder.Autoencoder`); the Jacobian is ``N × r``.
    """
    z = np.asarray(z, dtype=np.float64)
    D = np.asarray(ae.decoder_jacobian(z))
    if not np.all(np.isfinite(D)):
        raise FloatingPointError("decoder Jacobian has non-finite entries")
    return StateSpacePH(np.asarray(ae.decode(z)), D, D @ sys.J @ D.T, D @ sys.R @ D.T, D @ sys.B)


def similarity_spectrum(sys: PHSystem) -> np.ndarray:
    """Eigenvalues of (J − R)Q."""
    return sla.eigvals(sys.A)


def spectrum_mismatch(a: np.ndarray, b: np.ndarray) -> float:
    """Largest eigenvalue distance after optimally pairing the two multisets."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise SizeError(f"spectra of different sizes {a.shape} and {b.shape}")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max()) if a.size else 0.0
