"""Planar pendulum integrated in its angle and observed in Cartesian coordinates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..integrate import rk4_solve
from .core import Simulation, TrajectoryDataset

G_DEFAULT = 9.81
L_DEFAULT = 1.0


def pendulum_rhs(phi, omega, g: float = G_DEFAULT, l: float = L_DEFAULT):
    return omega, -(g / l) * np.sin(phi)


def pendulum_to_cartesian(phi, omega, l: float = L_DEFAULT) -> np.ndarray:
    """``(l sinφ, l cosφ, lω cosφ, lω sinφ)`` along the last axis."""
    phi, omega = np.asarray(phi, dtype=np.float64), np.asarray(omega, dtype=np.float64)
    s, c = np.sin(phi), np.cos(phi)
    return np.stack([l * s, l * c, l * omega * c, l * omega * s], axis=-1)


def pendulum_cartesian_derivative(phi, omega, g: float = G_DEFAULT, l: float = L_DEFAULT) -> np.ndarray:
    """Exact time derivative of :func:`pendulum_to_cartesian` along a trajectory."""
    phi, omega = np.asarray(phi, dtype=np.float64), np.asarray(omega, dtype=np.float64)
    s, c = np.sin(phi), np.cos(phi)
    wdot = -(g / l) * s
    w2 = omega * omega
    return np.stack(
        [l * omega * c, -l * omega * s, l * (wdot * c - w2 * s), l * (wdot * s + w2 * c)], axis=-1
    )


def pendulum_energy(phi, omega, g: float = G_DEFAULT, l: float = L_DEFAULT):
    return 0.5 * l * l * np.asarray(omega) ** 2 - g * l * np.cos(phi)


@dataclass(frozen=True)
class PendulumConfig:
    n_train: int = 12
    n_test: int = 6
    n_t_train: int = 500
    n_t_test: int = 1000
    dt: float = 0.01
    seed: int = 0
    g: float = G_DEFAULT
    l: float = L_DEFAULT
    phi_max: float = np.pi / 3
    substeps: int = 10


def _pendulum_split(cfg: PendulumConfig, n: int, n_t: int, stream: int) -> list[Simulation]:
    rng = np.random.default_rng([cfg.seed, stream])
    t = cfg.dt * np.arange(n_t)

    def f(_t, y):
        return np.array(pendulum_rhs(y[0], y[1], cfg.g, cfg.l))

    sims = []
    for phi0 in rng.uniform(-cfg.phi_max, cfg.phi_max, size=n):
        Y = rk4_solve(f, np.array([phi0, 0.0]), t, cfg.substeps)
        X = pendulum_to_cartesian(Y[:, 0], Y[:, 1], cfg.l)
        Xd = pendulum_cartesian_derivative(Y[:, 0], Y[:, 1], cfg.g, cfg.l)
        sims.append(Simulation(np.zeros(0), t, X, Xd, np.zeros((n_t, 0))))
    return sims


def generate_pendulum(cfg: PendulumConfig = PendulumConfig()) -> tuple[TrajectoryDataset, TrajectoryDataset]:
    """Train sims over ``n_t_train`` samples, test sims over the longer ``n_t_test`` window."""
    meta = {"kind": "pendulum", "config": cfg.__dict__.copy()}
    fields = {"position": (0, 2), "velocity": (2, 4)}
    train = TrajectoryDataset(_pendulum_split(cfg, cfg.n_train, cfg.n_t_train, 0), fields, dict(meta, split="train"))
    test = TrajectoryDataset(_pendulum_split(cfg, cfg.n_test, cfg.n_t_test, 1), fields, dict(meta, split="test"))
    return train, test
