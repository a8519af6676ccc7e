"""High-dimensional linear stand-in: a heated, damped 1D elastic bar.

States are the nodal temperature ``T``, displacement ``q`` and velocity
``v``. With ``H = ½(|T|² + qᵀKq + |v|²)`` the model is port-Hamiltonian:
heat conduction, Robin cooling and damping sit in ``R``; the thermoelastic
coupling ``G`` and the ``q``/``v`` exchange sit in ``J``. The only port is a
heat flux into the first node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..integrate import TimeGrid, simulate_latent
from ..ph import PHSystem
from .core import Simulation, TrajectoryDataset
from .halton import halton_points, scale_to_box

STIFFNESS_RANGE = (0.5, 2.0)
DAMPING_RANGE = (0.5, 2.0)


@dataclass(frozen=True)
class WaveConfig:
    n_nodes: int = 334
    n_train: int = 16
    n_test: int = 4
    n_t: int = 301
    t_end: float = 3.0
    seed: int = 0
    substeps: int = 10
    conductivity: float = 0.05
    cooling: float = 0.5
    wave_speed: float = 4.0
    coupling: float = 2.0
    damping: float = 2.0
    amplitude_range: tuple[float, float] = (0.5, 1.0)
    frequency_range: tuple[float, float] = (0.2, 0.6)


def _neumann_laplacian(n: int) -> np.ndarray:
    L = -2.0 * np.eye(n) + np.eye(n, k=1) + np.eye(n, k=-1)
    L[0, 0] = L[-1, -1] = -1.0
    return L


def wave_system(cfg: WaveConfig, stiffness: float, damping: float) -> PHSystem:
    n = cfg.n_nodes
    h = 1.0 / (n - 1)
    lap_n = _neumann_laplacian(n) / h**2
    # clamped at the left end, free at the right end
    lap_d = _neumann_laplacian(n) / h**2
    lap_d[0, 0] = -3.0 / h**2
    K = -(cfg.wave_speed**2) * stiffness * lap_d
    # force on node i from the local temperature gradient
    grad = (np.eye(n, k=1) - np.eye(n, k=-1)) / (2 * h)
    grad[0, :2] = [-1.0 / h, 1.0 / h]
    grad[-1, -2:] = [-1.0 / h, 1.0 / h]
    G = cfg.coupling * h * grad
    Z, I = np.zeros((n, n)), np.eye(n)
    R_T = -cfg.conductivity * lap_n + cfg.cooling * I
    R_v = cfg.damping * damping * I + 1e-3 * damping * K
    J = np.block([[Z, Z, -G.T], [Z, Z, I], [G, -I, Z]])
    R = np.block([[R_T, Z, Z], [Z, Z, Z], [Z, Z, R_v]])
    Q = np.block([[I, Z, Z], [Z, K, Z], [Z, Z, I]])
    B = np.zeros((3 * n, 1))
    B[0, 0] = 1.0 / h
    return PHSystem(J, R, Q, B)


def heat_input(amplitude: float, frequency: float):
    """Smooth periodic braking-like heat flux ``a (1 − cos 2πft) / 2``."""

    def u(t):
        return 0.5 * amplitude * (1.0 - np.cos(2 * np.pi * frequency * np.asarray(t, dtype=np.float64)))

    return u


def _wave_split(cfg: WaveConfig, n: int, halton_start: int, stream: int) -> list[Simulation]:
    mu = scale_to_box(
        halton_points(n, 2, start=halton_start),
        [STIFFNESS_RANGE[0], DAMPING_RANGE[0]],
        [STIFFNESS_RANGE[1], DAMPING_RANGE[1]],
    )
    rng = np.random.default_rng([cfg.seed, stream])
    t = np.linspace(0.0, cfg.t_end, cfg.n_t)
    fine = TimeGrid(0.0, (t[1] - t[0]) / cfg.substeps, (cfg.n_t - 1) * cfg.substeps)
    sims = []
    for stiffness, damping in mu:
        u = heat_input(rng.uniform(*cfg.amplitude_range), rng.uniform(*cfg.frequency_range))
        sys = wave_system(cfg, stiffness, damping)
        Z = simulate_latent(sys, np.zeros(sys.r), u(fine.times)[:, None], fine).states[:: cfg.substeps]
        U = u(t)[:, None]
        sims.append(Simulation(np.array([stiffness, damping]), t, Z, sys.rhs(Z, U), U))
    return sims


def generate_wave_standin(cfg: WaveConfig = WaveConfig()) -> tuple[TrajectoryDataset, TrajectoryDataset]:
    n = cfg.n_nodes
    meta = {"kind": "wave", "config": {k: v for k, v in cfg.__dict__.items()}}
    fields = {"temperature": (0, n), "displacement": (n, 2 * n), "velocity": (2 * n, 3 * n)}
    train = TrajectoryDataset(_wave_split(cfg, cfg.n_train, 1, 0), fields, dict(meta, split="train"))
    test = TrajectoryDataset(_wave_split(cfg, cfg.n_test, 1 + cfg.n_train, 1), fields, dict(meta, split="test"))
    return train, test
