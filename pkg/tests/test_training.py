import numpy as np
import pytest

from phident.autoencoder import Autoencoder
from phident.datasets import generate, normalize_dataset
from phident.evaluation import evaluate, predict
from phident.phin import IdentificationModel, LossWeights, PhinModel
from phident.training import TrainConfig, TrainingDivergedError, split_sims, train, dataset_rows


@pytest.fixture(scope="module")
def pendulum():
    tr, te = generate("pendulum", n_train=4, n_test=2, n_t_train=80, n_t_test=80)
    tr_raw = tr
    tr, _ = normalize_dataset(tr)
    te, _ = normalize_dataset(te, stats_from=tr_raw)
    return tr, te


def small_model(seed=0):
    rng = np.random.default_rng(seed)
    return IdentificationModel(Autoencoder.nonlinear(4, 2, [8], rng), PhinModel.init(2, 0, rng), LossWeights(1, 0.1, 0.001, 1e-10))


def test_split_holds_out_whole_sims():
    tr, va = split_sims(10, 0.1, np.random.default_rng(0))
    assert len(va) == 1 and sorted(tr + va) == list(range(10))
    tr, va = split_sims(3, 0.01, np.random.default_rng(0))
    assert len(va) == 1
    with pytest.raises(ValueError):
        split_sims(1, 0.5, np.random.default_rng(0))


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(val_fraction=1.0)


def test_best_checkpoint_tracking(pendulum):
    tr, _ = pendulum
    res = train(small_model(), tr, TrainConfig(epochs=40, batch_size=32, lr=1e-2, patience=5, seed=1, log_every=0))
    vals = [h[2] for h in res.history]
    assert res.best_epoch == 1 + int(np.argmin(vals))
    rows, rx, rd = dataset_rows(res.model, tr.subset(res.val_idx))
    rows.rec_offset, rows.con_offset = float(np.mean(rx)), float(np.mean(rd))
    assert res.model.loss_terms(rows)["total"] == pytest.approx(min(vals), rel=1e-12)
    assert res.epochs_run <= 40
    if res.epochs_run < 40:
        assert res.epochs_run - res.best_epoch == 5


def test_training_is_deterministic(pendulum):
    tr, _ = pendulum
    cfg = TrainConfig(epochs=5, batch_size=32, seed=3, log_every=0)
    a = train(small_model(), tr, cfg)
    b = train(small_model(), tr, cfg)
    np.testing.assert_array_equal(a.model.weights().flat, b.model.weights().flat)
    assert a.history == b.history


def test_divergence_raises_with_checkpoint(pendulum):
    tr, _ = pendulum
    m = small_model()
    w = m.weights()
    bad = m.with_weights(w.with_flat(np.full_like(w.flat, 1e200)))
    with pytest.raises(TrainingDivergedError) as info, np.errstate(all="ignore"):
        train(bad, tr, TrainConfig(epochs=2, batch_size=32, log_every=0))
    assert isinstance(info.value.model, IdentificationModel)


def test_prediction_encodes_only_initial_state(pendulum, monkeypatch):
    _, te = pendulum
    model = small_model()
    calls = []
    orig = Autoencoder.encode

    def counting(self, x):
        calls.append(np.shape(x))
        return orig(self, x)

    monkeypatch.setattr(Autoencoder, "encode", counting)
    pred = predict(model, te.sims[0])
    assert calls == [(4,)]
    assert pred.X.shape == te.sims[0].X.shape and pred.Z.shape == (len(te.sims[0].t), 2)


def test_evaluate_reports_fields(pendulum):
    _, te = pendulum
    rep = evaluate(small_model(), te)
    assert set(rep.field_errors) == {"position", "velocity"}
    assert rep.e_x.shape == (2, 80)
    s = rep.summary()
    assert {"mean_e_x", "mean_e_z", "e_proj", "e_jac", "mean_e_x_position"} <= set(s)
