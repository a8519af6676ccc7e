"""Config-driven runs: data, training, evaluation and artifacts."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..autoencoder import Autoencoder
from ..datasets import (
    Scalers,
    TrajectoryDataset,
    apply_scalers,
    fit_scalers,
    generate,
    read_dataset,
)
from ..evaluation import evaluate, predict_all
from ..phin import HyperNetwork, IdentificationModel, PhinModel
from ..training import TrainingDivergedError, TrainResult, train
from .config import ConfigError, ExperimentConfig, resolve_output_dir
from .export import export_csv, write_csv, write_manifest
from .plot import Series, error_plot, render_plot

log = logging.getLogger(__name__)

MODE_LABELS = {"phin": "phin", "aphin_linear": "linear", "aphin_nonlinear": "nonlinear"}


@dataclass
class RunArtifacts:
    run_dir: Path
    files: list[Path]
    metrics: dict
    timings: dict
    model: IdentificationModel
    scalers: Scalers
    result: TrainResult | None = None
    extras: dict = field(default_factory=dict)


def load_data(cfg: ExperimentConfig) -> tuple[TrajectoryDataset, TrajectoryDataset]:
    d = cfg.dataset
    if d.path is not None:
        root = Path(d.path)
        return read_dataset(root / "train"), read_dataset(root / "test")
    return generate(d.kind, **d.params)


def scale_data(cfg: ExperimentConfig, train_ds, test_ds):
    d = cfg.dataset
    sc = fit_scalers(train_ds, d.scale_states, d.normalize_mu, d.normalize_u)
    return apply_scalers(train_ds, sc), apply_scalers(test_ds, sc), sc


def build_model(cfg: ExperimentConfig, train_ds: TrajectoryDataset, rng: np.random.Generator) -> IdentificationModel:
    m = cfg.model
    N = train_ds.N
    snapshots = train_ds.stacked()[0].T
    if m.mode == "phin":
        if m.r != N:
            raise ConfigError(f"phin mode identifies in state space, so r must equal N={N}")
        ae = Autoencoder.identity(N)
    elif m.mode == "aphin_linear":
        ae = Autoencoder.linear(snapshots, m.r)
    else:
        ae = Autoencoder.nonlinear(N, m.r, m.layers, rng, snapshots, m.n_v)
    if train_ds.n_mu and m.hyper_layers:
        ph = HyperNetwork.init(train_ds.n_mu, m.r, train_ds.n_p, m.hyper_layers, rng, m.frozen_Q, m.eps)
    else:
        ph = PhinModel.init(m.r, train_ds.n_p, rng, m.frozen_Q, m.init_scale, m.eps)
    return IdentificationModel(ae, ph, cfg.loss)


def _dump_json(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


def _plots(run_dir: Path, test_ds, preds, report, history) -> list[Path]:
    files = []
    t = test_ds.sims[0].t
    fields = report.field_errors or {"x": report.e_x}
    for name, e in fields.items():
        p = run_dir / f"error_state_{name}.svg"
        p.write_text(error_plot(t, e, f"relative state error ({name})"))
        files.append(p)
    ep = np.array([h[0] for h in history], dtype=np.float64)
    tr = np.array([h[1] for h in history])
    va = np.array([h[2] for h in history])
    if len(ep) and np.all(tr > 0) and np.all(va > 0):
        p = run_dir / "loss_curve.svg"
        p.write_text(
            render_plot(
                [Series(ep, tr, "train", "#1f77b4"), Series(ep, va, "validation", "#ff7f0e")],
                "training loss",
                "epoch",
                "loss",
                logy=True,
            )
        )
        files.append(p)
    s, pr = test_ds.sims[0], preds[0]
    series = []
    colors = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd"]
    for i in range(min(4, test_ds.N)):
        series.append(Series(s.t, s.X[:, i], f"x_{i} reference", colors[i]))
        series.append(Series(s.t, pr.X[:, i], f"x_{i} identified", colors[i], dash="5,3"))
    p = run_dir / "trajectories.svg"
    p.write_text(render_plot(series, "first test simulation", "time [s]", "state"))
    files.append(p)
    return files


def run_experiment(
    cfg: ExperimentConfig,
    out_dir: str | None = None,
    seed: int | None = None,
    jobs: int = 1,
) -> RunArtifacts:
    """Train and evaluate one configuration and write its run directory.

    Evaluation encodes the first state of each test simulation, integrates the
    identified latent system with the implicit midpoint rule and decodes.
    """
    if seed is not None:
        cfg.train = replace(cfg.train, seed=seed)
    run_dir = resolve_output_dir(cfg, out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    files = [run_dir / "config.toml"]
    files[0].write_bytes(cfg.source_bytes)

    t0 = time.perf_counter()
    train_raw, test_raw = load_data(cfg)
    train_ds, test_ds, sc = scale_data(cfg, train_raw, test_raw)
    t_data = time.perf_counter() - t0
    files.append(_dump_json(run_dir / "scalers.json", sc.to_json()))

    rng = np.random.default_rng(cfg.train.seed)
    model = build_model(cfg, train_ds, rng)

    t0 = time.perf_counter()
    try:
        result = train(model, train_ds, cfg.train)
    except TrainingDivergedError as exc:
        exc.model.save(run_dir / "model_checkpoint.json")
        raise
    t_train = time.perf_counter() - t0
    model = result.model
    files += model.save(run_dir / "model.json")
    files.append(
        write_csv(
            run_dir / "loss_curve.csv",
            ["epoch", "train_loss", "val_loss"],
            np.array(result.history, dtype=np.float64).reshape(-1, 3),
        )
    )

    t0 = time.perf_counter()
    test_preds = predict_all(model, test_ds, jobs)
    t_eval = (time.perf_counter() - t0) / max(1, test_ds.n_sims)
    train_preds = predict_all(model, train_ds, jobs)
    rep_test = evaluate(model, test_ds, test_preds)
    rep_train = evaluate(model, train_ds, train_preds)

    metrics = {
        "train": rep_train.summary(),
        "test": rep_test.summary(),
        "training": {
            "best_epoch": result.best_epoch,
            "epochs_run": result.epochs_run,
            "final_train_loss": result.history[-1][1],
            "best_val_loss": min(h[2] for h in result.history),
            "validation_sims": result.val_idx,
        },
        "model": {
            "mode": cfg.model.mode,
            "N": train_ds.N,
            "r": model.ae.r,
            "n_v": model.ae.n_v,
            "n_p": train_ds.n_p,
            "n_mu": train_ds.n_mu,
            "parametric": model.parametric,
            "n_weights": len(model.weights()),
        },
    }
    files.append(_dump_json(run_dir / "metrics.json", metrics))
    timings = {
        "data_seconds": t_data,
        "train_seconds": t_train,
        "train_seconds_per_epoch": t_train / max(1, result.epochs_run),
        "evaluation_seconds_per_run": t_eval,
    }
    files.append(_dump_json(run_dir / "timings.json", timings))
    files += export_csv(run_dir, test_ds, test_preds, rep_test, MODE_LABELS[cfg.model.mode], max_sims=None)
    files += _plots(run_dir, test_ds, test_preds, rep_test, result.history)
    files.append(write_manifest(run_dir, files))
    log.info("run written to %s", run_dir)
    return RunArtifacts(
        run_dir,
        files,
        metrics,
        timings,
        model,
        sc,
        result,
        {"train": train_ds, "test": test_ds, "report_test": rep_test, "report_train": rep_train, "preds_test": test_preds},
    )
