import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phident.autoencoder import Autoencoder
from phident.metrics import (
    DegenerateReferenceError,
    latent_error,
    projection_errors,
    relative_error,
    state_error,
)


def sims(seed, n=3, n_t=20, N=4):
    rng = np.random.default_rng(seed)
    return [rng.standard_normal((n_t, N)) for _ in range(n)]


def test_exact_prediction_is_zero():
    X = sims(0)
    e, m = state_error(X, X)
    assert m == 0.0 and np.all(e == 0)


def test_zero_prediction_ratio():
    X = sims(1)
    e, _ = state_error(X, [np.zeros_like(x) for x in X])
    for k, x in enumerate(X):
        n = np.linalg.norm(x, axis=1)
        np.testing.assert_allclose(e[k], n / n.mean(), rtol=1e-15)


def test_mean_is_mean_of_all_entries():
    X = sims(2)
    Y = [x + 0.1 * np.random.default_rng(3).standard_normal(x.shape) for x in X]
    e, m = state_error(X, Y)
    assert abs(m - np.mean(np.concatenate(e))) <= 1e-12


def test_degenerate_reference():
    with pytest.raises(DegenerateReferenceError):
        relative_error(np.zeros((3, 2)), np.ones((3, 2)))


def test_latent_error_examples():
    rng = np.random.default_rng(4)
    X = sims(5, N=6)
    ae = Autoencoder.linear(np.concatenate(X).T, 2)
    Z = [ae.encode(x) for x in X]
    assert latent_error(ae, X, Z)[1] == 0.0
    D = [rng.standard_normal(z.shape) for z in Z]
    e1, _ = latent_error(ae, X, [z + d for z, d in zip(Z, D)])
    e2, _ = latent_error(ae, X, [z + 2 * d for z, d in zip(Z, D)])
    np.testing.assert_allclose(e2, 2 * e1, rtol=1e-12)


def test_projection_identity_and_linear():
    X = np.concatenate(sims(6, N=5))
    rep = projection_errors(Autoencoder.identity(5), X)
    assert rep.e_proj == 0.0 and rep.e_jac == 0.0
    ae = Autoencoder.linear(X.T, 2)
    rep = projection_errors(ae, X)
    assert rep.e_proj <= 1e-12 and rep.e_jac <= 1e-12
    closed = np.linalg.norm(np.eye(2) - ae.V.T @ ae.V, 2) ** 2
    assert abs(rep.e_jac - closed) <= 1e-13


def test_projection_excludes_zero_latents():
    X = np.concatenate([np.zeros((2, 3)), np.random.default_rng(7).standard_normal((5, 3))])
    rep = projection_errors(Autoencoder.identity(3), X)
    assert rep.n_excluded == 2 and rep.n_samples == 5
    with pytest.raises(ValueError):
        projection_errors(Autoencoder.identity(3), X, norm="nuclear")


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000))
def test_projection_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    ae = Autoencoder.nonlinear(4, 2, [6], rng)
    X = rng.standard_normal((12, 4))
    a = projection_errors(ae, X)
    b = projection_errors(ae, X[rng.permutation(12)])
    assert a.e_proj == pytest.approx(b.e_proj, rel=1e-12)
    assert a.e_jac == pytest.approx(b.e_jac, rel=1e-12)


def test_frobenius_bounds_spectral():
    rng = np.random.default_rng(8)
    ae = Autoencoder.nonlinear(4, 2, [6], rng)
    X = rng.standard_normal((6, 4))
    assert projection_errors(ae, X, "fro").e_jac >= projection_errors(ae, X).e_jac
