from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import Simulation, TrajectoryDataset


class DegenerateScalingError(ValueError):
    pass


def central_differences(X: np.ndarray, dt: float) -> np.ndarray:
    """Second-order central differences along axis 0, one-sided second order at the ends."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] < 3:
        raise ValueError(f"need at least 3 time samples, got {X.shape[0]}")
    return np.gradient(X, dt, axis=0, edge_order=2)


def _minmax(a: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = a.min(axis=0), a.max(axis=0)
    bad = np.flatnonzero(hi - lo <= 0)
    if bad.size:
        raise DegenerateScalingError(f"{what} component {int(bad[0])} has zero range on the training data")
    return lo, hi


@dataclass
class Scalers:
    """Per-field state factors and min-max maps for ``mu`` and ``u``.

    A missing min-max map (``None``) leaves that quantity untouched.
    """

    state_factor: np.ndarray
    fields: dict[str, tuple[int, int]] = field(default_factory=dict)
    mu_min: np.ndarray | None = None
    mu_max: np.ndarray | None = None
    u_min: np.ndarray | None = None
    u_max: np.ndarray | None = None

    def _map(self, a, lo, hi, inverse=False):
        if lo is None or a.size == 0:
            return a
        return a * (hi - lo) + lo if inverse else (a - lo) / (hi - lo)

    def apply(self, s: Simulation) -> Simulation:
        return Simulation(
            self._map(s.mu, self.mu_min, self.mu_max),
            s.t,
            s.X * self.state_factor,
            s.Xdot * self.state_factor,
            self._map(s.U, self.u_min, self.u_max),
        )

    def invert(self, s: Simulation) -> Simulation:
        return Simulation(
            self._map(s.mu, self.mu_min, self.mu_max, inverse=True),
            s.t,
            s.X / self.state_factor,
            s.Xdot / self.state_factor,
            self._map(s.U, self.u_min, self.u_max, inverse=True),
        )

    def to_json(self) -> dict:
        conv = lambda a: None if a is None else np.asarray(a).tolist()
        return {
            "state_factor": conv(self.state_factor),
            "fields": {k: list(v) for k, v in self.fields.items()},
            "mu_min": conv(self.mu_min),
            "mu_max": conv(self.mu_max),
            "u_min": conv(self.u_min),
            "u_max": conv(self.u_max),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Scalers":
        conv = lambda a: None if a is None else np.array(a, dtype=np.float64)
        return cls(
            conv(doc["state_factor"]),
            {k: tuple(v) for k, v in doc.get("fields", {}).items()},
            conv(doc.get("mu_min")),
            conv(doc.get("mu_max")),
            conv(doc.get("u_min")),
            conv(doc.get("u_max")),
        )


def fit_scalers(
    train: TrajectoryDataset,
    scale_states: bool = True,
    normalize_mu: bool = True,
    normalize_u: bool = True,
) -> Scalers:
    """Statistics from the training split.

    Each state field gets the factor ``1 / max|x_field|``; ``mu`` and ``u``
    components get min-max maps onto [0, 1].
    """
    X, _, U, Mu = train.stacked()
    factor = np.ones(train.N)
    if scale_states:
        for name, (a, b) in train.fields.items():
            peak = np.max(np.abs(X[:, a:b]))
            if not peak > 0:
                raise DegenerateScalingError(f"state field {name!r} is identically zero on the training data")
            factor[a:b] = 1.0 / peak
    sc = Scalers(factor, dict(train.fields))
    if normalize_mu and train.n_mu:
        sc.mu_min, sc.mu_max = _minmax(Mu, "mu")
    if normalize_u and train.n_p:
        sc.u_min, sc.u_max = _minmax(U, "input")
    return sc


def apply_scalers(ds: TrajectoryDataset, sc: Scalers) -> TrajectoryDataset:
    return replace(ds, sims=[sc.apply(s) for s in ds.sims], meta=dict(ds.meta))


def invert_scalers(ds: TrajectoryDataset, sc: Scalers) -> TrajectoryDataset:
    return replace(ds, sims=[sc.invert(s) for s in ds.sims], meta=dict(ds.meta))


def normalize_dataset(ds: TrajectoryDataset, stats_from: TrajectoryDataset | None = None, **opts):
    """Scale ``ds`` with statistics of ``stats_from`` (default: ``ds`` itself).

    Returns the scaled dataset and the :class:`Scalers`; values outside the
    training range are mapped affinely, without clipping.
    """
    sc = fit_scalers(stats_from if stats_from is not None else ds, **opts)
    return apply_scalers(ds, sc), sc
