"""Time integration: implicit midpoint for identified LTI pH systems, RK4 for reference data."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import linalg as sla

from .ph import PHSystem


class StepSizeError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    dt: float
    n_steps: int

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)


def _step_matrix(A: np.ndarray, dt: float):
    M = np.eye(A.shape[0]) - 0.5 * dt * A
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(M, check_finite=True)
    if np.any(np.abs(np.diag(lu)) <= 1e-14 * max(1.0, np.max(np.abs(M)))):
        raise StepSizeError(f"I - dt/2*A is singular for dt={dt}; try a smaller step")
    return lu, piv


def imr_step_lti(A: np.ndarray, Bu_mid: np.ndarray, z: np.ndarray, dt: float) -> np.ndarray:
    """One implicit midpoint step for ż = A z + (B u).

    Solves ``z' = z + dt·(A (z + z')/2 + Bu_mid)`` with a dense LU factorization.
    The solve is for the increment ``z' − z``, which keeps rounding error
    proportional to the step rather than to the state.
    """
    A = np.asarray(A, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    lu_piv = _step_matrix(A, dt)
    return z + sla.lu_solve(lu_piv, dt * (A @ z + np.asarray(Bu_mid, dtype=np.float64)))


@dataclass
class Rollout:
    t: np.ndarray
    states: np.ndarray
    outputs: np.ndarray


def simulate_latent(sys: PHSystem, z0: np.ndarray, u: np.ndarray, grid: TimeGrid) -> Rollout:
    """Implicit-midpoint rollout of ``sys`` from ``z0``.

    ``u`` holds input samples at the ``n_steps + 1`` grid points (shape
    ``(n_steps + 1, n_p)``, or a callable of time); the input on each step is
    the average of its end samples, i.e. linear interpolation at the midpoint.
    """
    t = grid.times
    if callable(u):
        U = np.array([np.atleast_1d(u(tk)) for tk in t], dtype=np.float64)
    else:
        U = np.asarray(u, dtype=np.float64).reshape(len(t), -1) if np.size(u) else np.zeros((len(t), sys.n_p))
    if U.shape != (len(t), sys.n_p):
        raise ValueError(f"expected inputs of shape {(len(t), sys.n_p)}, got {U.shape}")
    A = sys.A
    # the step matrix is constant, so factor it once
    lu_piv = _step_matrix(A, grid.dt)
    BU_mid = 0.5 * (U[1:] + U[:-1]) @ sys.B.T
    Z = np.empty((len(t), sys.r))
    Z[0] = np.asarray(z0, dtype=np.float64)
    for k in range(grid.n_steps):
        Z[k + 1] = Z[k] + sla.lu_solve(lu_piv, grid.dt * (A @ Z[k] + BU_mid[k]), check_finite=False)
    if not np.all(np.isfinite(Z)):
        raise FloatingPointError("rollout produced non-finite states")
    return Rollout(t, Z, sys.output(Z))


def rk4_step(f: Callable, y: np.ndarray, t: float, dt: float) -> np.ndarray:
    """Classical fourth-order Runge-Kutta step for ẏ = f(t, y)."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    for k in (k1, k2, k3, k4):
        if not np.all(np.isfinite(k)):
            raise FloatingPointError(f"non-finite RK4 stage at t={t}")
    return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_solve(f: Callable, y0: np.ndarray, t: np.ndarray, substeps: int = 1) -> np.ndarray:
    """Integrate on the sample times ``t`` with ``substeps`` RK4 steps per interval."""
    Y = np.empty((len(t),) + np.shape(y0))
    Y[0] = y0
    y = np.asarray(y0, dtype=np.float64)
    for k in range(len(t) - 1):
        h = (t[k + 1] - t[k]) / substeps
        for s in range(substeps):
            y = rk4_step(f, y, t[k] + s * h, h)
        Y[k + 1] = y
    return Y
