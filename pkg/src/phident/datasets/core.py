from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass
class Simulation:
    mu: np.ndarray
    t: np.ndarray
    X: np.ndarray
    Xdot: np.ndarray
    U: np.ndarray

    def __post_init__(self) -> None:
        self.mu = np.asarray(self.mu, dtype=np.float64).reshape(-1)
        self.t = np.asarray(self.t, dtype=np.float64)
        self.X = np.asarray(self.X, dtype=np.float64)
        self.Xdot = np.asarray(self.Xdot, dtype=np.float64)
        n_t = len(self.t)
        self.U = np.asarray(self.U, dtype=np.float64).reshape(n_t, -1)
        if self.X.shape != self.Xdot.shape or self.X.shape[0] != n_t:
            raise ValueError(
                f"inconsistent simulation arrays: t {self.t.shape}, X {self.X.shape}, Xdot {self.Xdot.shape}"
            )


@dataclass
class TrajectoryDataset:
    """Simulations sharing state width, port width and time grid length.

    ``fields`` maps a component name to the state columns it occupies; it is
    used for per-field scaling and per-field error reports.
    """

    sims: list[Simulation]
    fields: dict[str, tuple[int, int]] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.sims:
            raise ValueError("a dataset needs at least one simulation")
        s0 = self.sims[0]
        for k, s in enumerate(self.sims):
            if (s.X.shape, s.U.shape[1], s.mu.size) != (s0.X.shape, s0.U.shape[1], s0.mu.size):
                raise ValueError(f"simulation {k} does not match the shapes of simulation 0")
        if not self.fields:
            self.fields = {"x": (0, self.N)}

    @property
    def n_sims(self) -> int:
        return len(self.sims)

    @property
    def n_t(self) -> int:
        return len(self.sims[0].t)

    @property
    def N(self) -> int:
        return self.sims[0].X.shape[1]

    @property
    def n_p(self) -> int:
        return self.sims[0].U.shape[1]

    @property
    def n_mu(self) -> int:
        return self.sims[0].mu.size

    @property
    def dt(self) -> float:
        t = self.sims[0].t
        return float(t[1] - t[0])

    def stacked(self):
        """``(X, Xdot, U, Mu)`` with all samples of all sims as rows."""
        X = np.concatenate([s.X for s in self.sims])
        Xd = np.concatenate([s.Xdot for s in self.sims])
        U = np.concatenate([s.U for s in self.sims])
        Mu = np.concatenate([np.repeat(s.mu[None, :], len(s.t), axis=0) for s in self.sims])
        return X, Xd, U, Mu

    def subset(self, idx) -> "TrajectoryDataset":
        return replace(self, sims=[self.sims[i] for i in idx], meta=dict(self.meta))
