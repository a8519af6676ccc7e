"""Model evaluation: encode the initial state, integrate in latent space, decode."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .datasets import Simulation, TrajectoryDataset
from .integrate import TimeGrid, simulate_latent
from .metrics import ErrorReport, latent_error, projection_errors, state_error
from .phin import IdentificationModel, phin_rhs


@dataclass
class Prediction:
    t: np.ndarray
    Z: np.ndarray
    X: np.ndarray
    Xdot: np.ndarray


def predict(model: IdentificationModel, sim: Simulation) -> Prediction:
    """Roll out ``model`` along ``sim``'s time grid and input.

    The encoder is applied to the first sample only.
    """
    z0 = model.ae.encode(sim.X[0])
    mu = sim.mu if model.parametric else None
    sys = model.system(mu)
    grid = TimeGrid(float(sim.t[0]), float(sim.t[1] - sim.t[0]), len(sim.t) - 1)
    roll = simulate_latent(sys, z0, sim.U, grid)
    Z = roll.states
    f = phin_rhs(model.ph.materialize(mu) if model.parametric else model.ph, Z, sim.U)
    X, Xdot = model.ae.decoder_jvp(Z, f)
    return Prediction(roll.t, Z, np.asarray(X), np.asarray(Xdot))


def predict_all(model: IdentificationModel, ds: TrajectoryDataset, jobs: int = 1) -> list[Prediction]:
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(lambda s: predict(model, s), ds.sims))
    return [predict(model, s) for s in ds.sims]


def evaluate(
    model: IdentificationModel,
    ds: TrajectoryDataset,
    preds: list[Prediction] | None = None,
    projection: bool = True,
    norm: str = "spectral",
    jobs: int = 1,
) -> ErrorReport:
    preds = predict_all(model, ds, jobs) if preds is None else preds
    X_ref = [s.X for s in ds.sims]
    e_x, me_x = state_error(X_ref, [p.X for p in preds])
    e_z, me_z = latent_error(model.ae, X_ref, [p.Z for p in preds])
    fields = {}
    if len(ds.fields) > 1:
        for name, (a, b) in ds.fields.items():
            fields[name] = state_error(X_ref, [p.X for p in preds], slice(a, b))[0]
    rep = ErrorReport(e_x, e_z, me_x, me_z, field_errors=fields)
    if projection:
        pr = projection_errors(model.ae, np.concatenate(X_ref), norm)
        rep.e_proj, rep.e_jac, rep.n_proj_excluded = pr.e_proj, pr.e_jac, pr.n_excluded
    return rep
