"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Training-based criteria share module fixtures, so the pendulum model trained
for criterion 4 is reused by criteria 8 and 11. Run alone with
``pytest tests/test_acceptance.py -s``.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from phident.autoencoder import Autoencoder
from phident.cli.config import load_config
from phident.cli.experiment import run_experiment
from phident.datasets import MSDParameters, damped_harmonic_input, msd_reference_system
from phident.integrate import TimeGrid, rk4_solve, simulate_latent
from phident.ph import (
    EPS_Q,
    PHSystem,
    check_boundedness,
    check_dissipation,
    hamiltonian,
    n_skew,
    n_sym,
    ph_matrices,
    reconstruct_statespace_ph,
)
from phident.phin import IdentificationModel, LossWeights, PhinModel, reduce_rows

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def timed_run(name, out):
    cfg = load_config(CONFIGS / f"{name}.toml")
    t0 = time.perf_counter()
    art = run_experiment(cfg, out_dir=str(out))
    return cfg, art, time.perf_counter() - t0


@pytest.fixture(scope="module")
def pendulum_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("pendulum")
    return [timed_run("pendulum_nonlinear", base / f"run{k}") for k in range(2)]


def random_built_system(rng, r, n_p, scale=1.0, zero_R=False):
    J, R, Q, B = ph_matrices(
        scale * rng.standard_normal(n_skew(r)),
        np.zeros(n_sym(r)) if zero_R else scale * rng.standard_normal(n_sym(r)),
        rng.standard_normal(n_sym(r)),
        rng.standard_normal(r * n_p),
        r,
        n_p,
    )
    return PHSystem(J, R, Q, B)


def test_criterion_01_structure_by_construction(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = {"skew": 0.0, "R": np.inf, "Q": np.inf}
    for k in range(1000):
        r = 2 + k % 7
        scale = 10.0 ** rng.uniform(-2, 1)
        J, R, Q, _ = ph_matrices(
            scale * rng.standard_normal(n_skew(r)),
            scale * rng.standard_normal(n_sym(r)),
            scale * rng.standard_normal(n_sym(r)),
            rng.standard_normal(r),
            r,
            1,
        )
        worst["skew"] = max(worst["skew"], float(np.max(np.abs(J + J.T))))
        worst["R"] = min(worst["R"], float(np.linalg.eigvalsh(R)[0]))
        worst["Q"] = min(worst["Q"], float(np.linalg.eigvalsh(Q)[0]))
    dt = time.perf_counter() - t0
    ok = worst["skew"] == 0 and worst["R"] >= -1e-12 and worst["Q"] >= EPS_Q - 1e-12 and dt < 10
    criterion(1, ok, f"max|J+J^T|={worst['skew']:.1e} min eig R={worst['R']:.2e} "
                     f"min eig Q={worst['Q']:.3e} ({dt:.1f}s)")


def _toy(seed):
    rng = np.random.default_rng(seed)
    ae = Autoencoder.nonlinear(2, 2, [8, 8], rng)
    for _, b in ae.enc_mlp.layers + ae.dec_mlp.layers:
        b[:] = 0.1 * rng.standard_normal(b.shape)
    model = IdentificationModel(ae, PhinModel.init(2, 1, rng, scale=0.5), LossWeights(1.0, 0.5, 0.2, 1e-3))
    X, Xd, U = rng.standard_normal((3, 2)), rng.standard_normal((3, 2)), rng.standard_normal((3, 1))
    b, _, _ = reduce_rows(ae, X, Xd, U, np.zeros((3, 0)))
    return model, b


def test_criterion_02_gradient_correctness(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    h = 1e-6
    for seed in range(50):
        model, b = _toy(seed)
        _, g = model.loss_and_grad(b)
        w = model.weights()
        fd = np.empty_like(g)
        for i in range(len(fd)):
            e = np.zeros_like(w.flat)
            e[i] = h
            lp = model.with_weights(w.with_flat(w.flat + e)).loss_terms(b)["total"]
            lm = model.with_weights(w.with_flat(w.flat - e)).loss_terms(b)["total"]
            fd[i] = (lp - lm) / (2 * h)
        worst = max(worst, float(np.linalg.norm(g - fd) / np.linalg.norm(fd)))
    dt = time.perf_counter() - t0
    criterion(2, worst <= 1e-4 and dt < 30, f"worst relative gradient error {worst:.2e} over 50 seeds ({dt:.1f}s)")


def test_criterion_03_msd_matrix_recovery(tmp_path, criterion):
    cfg, art, dt = timed_run("msd", tmp_path / "msd")
    m = cfg.dataset.params
    assert m["n_train"] == 30 and m["n_t"] == 400 and m["n_links"] == 3
    assert cfg.model.frozen_Q and cfg.model.hyper_layers == [16, 16, 16, 16] and cfg.train.epochs <= 800
    e_z = art.metrics["test"]["mean_e_z"]
    n = m["n_links"]  # reference input acts on the first momentum
    worst = 0.0
    for sim in art.extras["test"].sims:
        B = art.model.system(sim.mu).B[:, 0]
        others = np.delete(np.abs(B), n)
        worst = max(worst, float(others.max() / abs(B[n])))
    ok = e_z <= 0.15 and worst <= 0.2 and dt < 15 * 60
    criterion(3, ok, f"test e_z={e_z:.4f}, max |B_other|/|B_ref|={worst:.3f} ({dt / 60:.1f} min)")


def test_criterion_04_pendulum_nonlinear(pendulum_runs, criterion):
    cfg, art, dt = pendulum_runs[0]
    p = cfg.dataset.params
    assert p["n_train"] == 12 and p["n_t_train"] == 500 and cfg.model.r == 2
    assert cfg.model.layers == [32, 32, 32] and cfg.train.epochs <= 1500
    assert (cfg.loss.rec, cfg.loss.ph, cfg.loss.con) == (1.0, 0.1, 0.001)
    t = art.metrics["test"]
    ok = t["mean_e_x"] <= 0.30 and t["mean_e_z"] <= 0.35 and t["e_proj"] <= 5e-3 and t["e_jac"] <= 5e-2 and dt < 20 * 60
    criterion(4, ok, f"test e_x={t['mean_e_x']:.4f} e_z={t['mean_e_z']:.4f} e_proj={t['e_proj']:.2e} "
                     f"e_jac={t['e_jac']:.2e} ({dt / 60:.1f} min)")


def test_criterion_05_pendulum_linear(tmp_path, criterion):
    cfg, art, dt = timed_run("pendulum_linear", tmp_path / "lin")
    assert cfg.model.mode == "aphin_linear" and cfg.model.r == 2
    t = art.metrics["test"]
    ok = t["e_proj"] <= 1e-10 and t["e_jac"] <= 1e-10 and t["mean_e_x"] >= 0.5 and dt < 5 * 60
    criterion(5, ok, f"e_proj={t['e_proj']:.1e} e_jac={t['e_jac']:.1e} test e_x={t['mean_e_x']:.3f} ({dt:.0f}s)")


def test_criterion_06_discrete_dissipation(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    dt, n = 0.01, 10_000
    systems = [msd_reference_system(MSDParameters(2.0, 5.0, 0.4))]
    systems += [random_built_system(rng, r, 1) for r in (2, 4, 6)]
    worst_bal = 0.0
    for s in systems:
        z0 = rng.standard_normal(s.r)
        Z = simulate_latent(s, z0, np.zeros((n + 1, s.n_p)), TimeGrid(0.0, dt, n)).states
        rep = check_dissipation(s, Z, np.zeros((n + 1, s.n_p)), dt)
        H0 = float(hamiltonian(s, z0))
        worst_bal = max(worst_bal, float(np.max(np.abs(rep.delta_H + rep.dissipated))) / max(1.0, H0))
    worst_drift = 0.0
    for s in [PHSystem(x.J, np.zeros_like(x.R), x.Q, x.B) for x in systems]:
        z0 = rng.standard_normal(s.r)
        Z = simulate_latent(s, z0, np.zeros((n + 1, s.n_p)), TimeGrid(0.0, dt, n)).states
        H = hamiltonian(s, Z)
        worst_drift = max(worst_drift, float(np.max(np.abs(H - H[0])) / H[0]))
    el = time.perf_counter() - t0
    ok = worst_bal <= 1e-10 and worst_drift <= 1e-11 and el < 10
    criterion(6, ok, f"max step residual {worst_bal:.1e}, lossless drift {worst_drift:.1e} ({el:.1f}s)")


def test_criterion_07_boundedness(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst, bad = -np.inf, 0
    for k in range(100):
        s = random_built_system(rng, 2 + k % 7, 1, scale=float(rng.uniform(0.2, 2.0)))
        rep = check_boundedness(s, rng.standard_normal(s.r), 1000, 0.01, tol=1e-9)
        worst = max(worst, rep.max_H_excess)
        bad += not rep.contained
    el = time.perf_counter() - t0
    criterion(7, bad == 0 and el < 30, f"{bad} of 100 rollouts left the sublevel set, max H excess {worst:.1e} ({el:.1f}s)")


def test_criterion_08_statespace_transfer(pendulum_runs, criterion):
    _, art, _ = pendulum_runs[0]
    t0 = time.perf_counter()
    model = art.model
    X = np.concatenate([s.X for s in art.extras["test"].sims])
    pick = np.random.default_rng(8).choice(len(X), 50, replace=False)
    Z = model.ae.encode(X[pick])
    sys = model.system()
    skew, rmin = 0.0, np.inf
    for z in Z:
        ss = reconstruct_statespace_ph(model.ae, sys, z)
        skew, rmin = max(skew, ss.skew_defect), min(rmin, ss.R_min_eig)
    ref = random_built_system(np.random.default_rng(9), 4, 2)
    ident = reconstruct_statespace_ph(Autoencoder.identity(4), ref, np.ones(4))
    bitwise = all(np.array_equal(a, b) for a, b in ((ident.J, ref.J), (ident.R, ref.R), (ident.B, ref.B)))
    el = time.perf_counter() - t0
    ok = skew <= 1e-9 and rmin >= -1e-8 and bitwise and el < 60
    criterion(8, ok, f"max skew defect {skew:.1e}, min eig R {rmin:.1e}, identity bitwise={bitwise} ({el:.1f}s)")


def test_criterion_09_integrator_order(criterion):
    t0 = time.perf_counter()
    s = msd_reference_system(MSDParameters(2.0, 5.0, 0.4))
    u = damped_harmonic_input(0.5, 2.0)
    z0 = np.zeros(s.r)
    t_end = 2.0
    errs = []
    for dt in (0.04, 0.02, 0.01):
        n = int(round(t_end / dt))
        grid = TimeGrid(0.0, dt, n)
        Z = simulate_latent(s, z0, u(grid.times)[:, None], grid).states
        oracle = rk4_solve(lambda t, z: s.A @ z + s.B[:, 0] * u(t), z0, grid.times, substeps=100)
        errs.append(np.max(np.linalg.norm(Z - oracle, axis=1)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    el = time.perf_counter() - t0
    ok = bool(np.all((orders >= 1.8) & (orders <= 2.2))) and el < 30
    criterion(9, ok, f"observed orders {', '.join(f'{o:.3f}' for o in orders)} ({el:.1f}s)")


def test_criterion_10_wave_standin(tmp_path, criterion):
    cfg, art, dt = timed_run("wave", tmp_path / "wave")
    assert cfg.model.n_v == 8 and cfg.model.r == 3
    assert art.extras["train"].N >= 900
    ae = art.model.ae
    X = art.extras["train"].stacked()[0]
    energy = float(np.sum(ae.singular_values**2) / np.sum(X**2))
    e_x = art.metrics["test"]["mean_e_x"]
    ok = e_x <= 0.1 and energy >= 0.99 and dt < 30 * 60
    criterion(10, ok, f"test e_x={e_x:.4f}, PCA energy {energy:.6f} (N={X.shape[1]}, {dt / 60:.1f} min)")


def test_criterion_11_determinism(pendulum_runs, criterion):
    a = (pendulum_runs[0][1].run_dir / "metrics.json").read_bytes()
    b = (pendulum_runs[1][1].run_dir / "metrics.json").read_bytes()
    criterion(11, a == b, f"metrics.json identical across two seeded runs: {a == b}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
