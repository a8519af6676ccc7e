"""Mini-batch ADAM training with validation-based early stopping."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .datasets import TrajectoryDataset
from .diffkit import AdamState, WeightVector, adam_step
from .phin import IdentificationModel, ReducedBatch, reduce_rows

log = logging.getLogger(__name__)


class TrainingDivergedError(FloatingPointError):
    """Raised on a non-finite loss; ``model`` holds the last good weights."""

    def __init__(self, msg: str, model: IdentificationModel, epoch: int) -> None:
        super().__init__(msg)
        self.model = model
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 1000
    batch_size: int = 256
    lr: float = 1e-3
    patience: int = 200
    min_delta: float = 1e-6
    val_fraction: float = 0.1
    seed: int = 0
    log_every: int = 100

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0 < self.val_fraction < 1:
            raise ValueError("val_fraction must lie in (0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class TrainResult:
    model: IdentificationModel
    best_epoch: int
    epochs_run: int
    history: list[tuple[int, float, float]] = field(default_factory=list)
    train_idx: list[int] = field(default_factory=list)
    val_idx: list[int] = field(default_factory=list)


def split_sims(n_sims: int, val_fraction: float, rng: np.random.Generator) -> tuple[list[int], list[int]]:
    """Hold out ``round(val_fraction · n_sims)`` whole simulations (at least one)."""
    if n_sims < 2:
        raise ValueError("need at least two simulations to hold out a validation set")
    n_val = min(n_sims - 1, max(1, int(round(val_fraction * n_sims))))
    perm = rng.permutation(n_sims)
    return sorted(perm[n_val:].tolist()), sorted(perm[:n_val].tolist())


def dataset_rows(model: IdentificationModel, ds: TrajectoryDataset):
    X, Xd, U, Mu = ds.stacked()
    return reduce_rows(model.ae, X, Xd, U, Mu)


def _with_offsets(b: ReducedBatch, rx: np.ndarray, rd: np.ndarray) -> ReducedBatch:
    b.rec_offset = float(np.mean(rx))
    b.con_offset = float(np.mean(rd))
    return b


def train(model: IdentificationModel, ds: TrajectoryDataset, cfg: TrainConfig) -> TrainResult:
    """Train on ``ds``; a fraction of its simulations is used for validation.

    Each epoch shuffles samples (not simulations) with the run seed. The
    returned model carries the weights of the best validation epoch.
    """
    rng = np.random.default_rng(cfg.seed)
    tr_idx, va_idx = split_sims(ds.n_sims, cfg.val_fraction, rng)
    rows, rx, rd = dataset_rows(model, ds.subset(tr_idx))
    vrows, vrx, vrd = dataset_rows(model, ds.subset(va_idx))
    val_batch = _with_offsets(vrows, vrx, vrd)

    w = model.weights()
    state = AdamState.zeros_like(w, lr=cfg.lr)
    best_w, best_val, best_epoch = w.copy(), np.inf, 0
    history = []
    n = len(rows)
    epoch = 0
    for epoch in range(1, cfg.epochs + 1):
        perm = rng.permutation(n)
        losses = []
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            b = _with_offsets(rows.rows(idx), rx[idx], rd[idx])
            current = model.with_weights(w)
            loss, grad = current.loss_and_grad(b)
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss in epoch {epoch}", model.with_weights(best_w), epoch)
            w, state = adam_step(w, grad, state)
            losses.append(loss * len(idx))
        train_loss = float(np.sum(losses) / n)
        val_loss = model.with_weights(w).loss_terms(val_batch)["total"]
        if not np.isfinite(val_loss):
            raise TrainingDivergedError(f"non-finite validation loss in epoch {epoch}", model.with_weights(best_w), epoch)
        history.append((epoch, train_loss, val_loss))
        if val_loss < best_val - cfg.min_delta:
            best_val, best_w, best_epoch = val_loss, w.copy(), epoch
        elif epoch - best_epoch >= cfg.patience:
            log.info("early stop at epoch %d (best %d, val %.3e)", epoch, best_epoch, best_val)
            break
        if cfg.log_every and epoch % cfg.log_every == 0:
            log.info("epoch %d train %.4e val %.4e", epoch, train_loss, val_loss)
    return TrainResult(model.with_weights(best_w), best_epoch, epoch, history, tr_idx, va_idx)
