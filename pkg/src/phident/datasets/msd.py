"""Mass-spring-damper chain with the input acting on the first mass."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..integrate import TimeGrid, simulate_latent
from ..ph import PHSystem, normalize_to_identity_Q
from .core import Simulation, TrajectoryDataset
from .halton import halton_points, scale_to_box

M_RANGE = (0.1, 100.0)
K_RANGE = (0.1, 100.0)
C_RANGE = (0.1, 10.0)
OMEGA_RANGE = (0.5, 5.0)
DELTA_RANGE = (0.125, 2.0)


@dataclass(frozen=True)
class MSDParameters:
    m: float | tuple[float, ...]
    k: float | tuple[float, ...]
    c: float | tuple[float, ...]
    n_links: int = 3

    def __post_init__(self) -> None:
        if self.n_links < 1:
            raise ValueError("need at least one link")
        for name in ("m", "k", "c"):
            v = np.broadcast_to(np.asarray(getattr(self, name), dtype=np.float64), (self.n_links,))
            if np.any(v <= 0):
                raise ValueError(f"{name} must be positive")

    def per_link(self, name: str) -> np.ndarray:
        return np.broadcast_to(np.asarray(getattr(self, name), dtype=np.float64), (self.n_links,)).copy()


def msd_reference_system(p: MSDParameters) -> PHSystem:
    """Chain matrices in displacement/momentum coordinates ``[q_1..q_n, p_1..p_n]``."""
    n = p.n_links
    m, k, c = p.per_link("m"), p.per_link("k"), p.per_link("c")
    K = np.zeros((n, n))
    for i in range(n):
        K[i, i] = k[i] + (k[i - 1] if i > 0 else 0.0)
        if i > 0:
            K[i, i - 1] = K[i - 1, i] = -k[i - 1]
    Z, I = np.zeros((n, n)), np.eye(n)
    J = np.block([[Z, I], [-I, Z]])
    R = np.block([[Z, Z], [Z, np.diag(c)]])
    Q = np.block([[K, Z], [Z, np.diag(1.0 / m)]])
    B = np.zeros((2 * n, 1))
    B[n, 0] = 1.0
    return PHSystem(J, R, Q, B)


def damped_harmonic_input(delta: float, omega: float):
    """``u(t) = exp(-delta t) sin(omega t²)``."""

    def u(t):
        t = np.asarray(t, dtype=np.float64)
        return np.exp(-delta * t) * np.sin(omega * t * t)

    return u


@dataclass(frozen=True)
class MSDConfig:
    n_train: int = 90
    n_test: int = 30
    n_t: int = 400
    t_end: float = 1.6
    seed: int = 0
    n_links: int = 3
    substeps: int = 1
    random_z0: bool = False
    z0_scale: float = 1.0
    zero_input: bool = False
    c_range: tuple[float, float] = C_RANGE


def _msd_split(cfg: MSDConfig, n: int, halton_start: int, stream: int) -> list[Simulation]:
    mu = scale_to_box(
        halton_points(n, 3, start=halton_start),
        [M_RANGE[0], K_RANGE[0], cfg.c_range[0]],
        [M_RANGE[1], K_RANGE[1], cfg.c_range[1]],
    )
    rng = np.random.default_rng([cfg.seed, stream])
    t = np.linspace(0.0, cfg.t_end, cfg.n_t)
    dt = t[1] - t[0]
    fine = TimeGrid(0.0, dt / cfg.substeps, (cfg.n_t - 1) * cfg.substeps)
    sims = []
    for m, k, c in mu:
        delta = rng.uniform(*DELTA_RANGE)
        omega = rng.uniform(*OMEGA_RANGE)
        sysn, _ = normalize_to_identity_Q(msd_reference_system(MSDParameters(m, k, c, cfg.n_links)))
        z0 = rng.normal(scale=cfg.z0_scale, size=sysn.r) if cfg.random_z0 else np.zeros(sysn.r)
        u = (lambda t: np.zeros_like(t)) if cfg.zero_input else damped_harmonic_input(delta, omega)
        Z = simulate_latent(sysn, z0, u(fine.times)[:, None], fine).states[:: cfg.substeps]
        U = u(t)[:, None]
        sims.append(Simulation(np.array([m, k, c]), t, Z, sysn.rhs(Z, U), U))
    return sims


def generate_msd(cfg: MSDConfig = MSDConfig()) -> tuple[TrajectoryDataset, TrajectoryDataset]:
    """Training and test data in the ``Q = I`` coordinates of the reference chain.

    Parameters ``(m, k, c)`` come from disjoint stretches of the Halton
    sequence; input decay and frequency are drawn uniformly per simulation.
    """
    meta = {"kind": "msd", "config": cfg.__dict__.copy()}
    fields = {"x": (0, 2 * cfg.n_links)}
    train = TrajectoryDataset(_msd_split(cfg, cfg.n_train, 1, 0), fields, dict(meta, split="train"))
    test = TrajectoryDataset(_msd_split(cfg, cfg.n_test, 1 + cfg.n_train, 1), fields, dict(meta, split="test"))
    return train, test
