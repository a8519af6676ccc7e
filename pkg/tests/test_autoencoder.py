import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phident.autoencoder import Autoencoder, fit_pca, load_basis, save_basis
from phident.diffkit import ConfigurationError


def rank_k_data(rng, N, k, n):
    return rng.standard_normal((N, k)) @ rng.standard_normal((k, n))


def test_pca_multiples_of_e1():
    S = np.zeros((5, 7))
    S[0] = np.arange(1, 8)
    V, s = fit_pca(S, 1)
    np.testing.assert_array_equal(V[:, 0], np.eye(5)[0])
    assert s[0] == pytest.approx(np.linalg.norm(S[0]))


def test_pca_rank2_reconstruction():
    rng = np.random.default_rng(0)
    S = rank_k_data(rng, 20, 2, 50)
    V, _ = fit_pca(S, 2)
    assert np.abs(S - V @ (V.T @ S)).max() <= 1e-10
    np.testing.assert_allclose(V.T @ V, np.eye(2), atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5))
def test_pca_tail_energy(seed, n_v):
    rng = np.random.default_rng(seed)
    S = rng.standard_normal((12, 30))
    V, _ = fit_pca(S, n_v)
    sv = np.linalg.svd(S, compute_uv=False)
    err = np.sum((S - V @ (V.T @ S)) ** 2)
    tail = np.sum(sv[n_v:] ** 2)
    assert abs(err - tail) <= 1e-8 * max(tail, 1.0)


def test_pca_rejects_bad_rank():
    with pytest.raises(ConfigurationError):
        fit_pca(np.ones((3, 4)), 5)


def test_basis_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    V, s = fit_pca(rng.standard_normal((8, 20)), 3)
    save_basis(tmp_path / "b", V, s)
    V2, s2 = load_basis(tmp_path / "b")
    np.testing.assert_array_equal(V, V2)
    np.testing.assert_array_equal(s, s2)


def test_identity_mode():
    ae = Autoencoder.identity(4)
    x = np.arange(4.0)
    np.testing.assert_array_equal(ae.encode(x), x)
    np.testing.assert_array_equal(ae.decode(x), x)
    np.testing.assert_array_equal(ae.decoder_jacobian(x), np.eye(4))


def test_linear_mode_projector():
    rng = np.random.default_rng(2)
    S = rng.standard_normal((10, 40))
    ae = Autoencoder.linear(S, 3)
    x = rng.standard_normal(10)
    np.testing.assert_allclose(ae.encode(x), ae.V.T @ x, rtol=1e-14)
    np.testing.assert_allclose(ae.decode(ae.encode(x)), ae.V @ ae.V.T @ x, atol=1e-14)
    z = rng.standard_normal(3)
    np.testing.assert_allclose(ae.encode(ae.decode(z)), z, atol=1e-14)
    np.testing.assert_array_equal(ae.decoder_jacobian(z), ae.V)


def test_nonlinear_pendulum_shapes():
    ae = Autoencoder.nonlinear(4, 2, [32, 32, 32], np.random.default_rng(0))
    assert ae.V is None
    assert ae.enc_mlp.sizes == [4, 32, 32, 32, 2]
    assert ae.dec_mlp.sizes == [2, 32, 32, 32, 4]
    X = np.random.default_rng(1).standard_normal((7, 4))
    assert ae.encode(X).shape == (7, 2)
    assert ae.decode(ae.encode(X)).shape == (7, 4)
    with pytest.raises(ConfigurationError):
        ae.encode(np.zeros(3))


def test_nonlinear_large_state_uses_pca():
    rng = np.random.default_rng(3)
    S = rank_k_data(rng, 100, 6, 40)
    ae = Autoencoder.nonlinear(100, 2, [8], rng, S, 6)
    assert ae.n_v == 6 and ae.enc_mlp.in_dim == 6
    with pytest.raises(ConfigurationError):
        Autoencoder.nonlinear(100, 2, [8], rng)


@pytest.mark.parametrize("pca", [False, True])
def test_decoder_jacobian_fd(pca):
    rng = np.random.default_rng(4)
    if pca:
        ae = Autoencoder.nonlinear(80, 3, [16, 16], rng, rng.standard_normal((80, 30)), 5)
    else:
        ae = Autoencoder.nonlinear(6, 3, [16, 16], rng)
    z = rng.standard_normal(3)
    D = ae.decoder_jacobian(z)
    h = 1e-6
    for j in range(3):
        e = np.eye(3)[j] * h
        fd = (ae.decode(z + e) - ae.decode(z - e)) / (2 * h)
        assert np.linalg.norm(fd - D[:, j]) <= 1e-5 * np.linalg.norm(D[:, j])
        np.testing.assert_array_equal(D[:, j], ae.decoder_jvp(z, np.eye(3)[j])[1])


def test_encoder_jacobian_fd():
    rng = np.random.default_rng(5)
    ae = Autoencoder.nonlinear(80, 2, [16], rng, rng.standard_normal((80, 30)), 4)
    x = rng.standard_normal(80)
    D = ae.encoder_jacobian(x)
    assert D.shape == (2, 80)
    v = rng.standard_normal(80)
    h = 1e-6
    fd = (ae.encode(x + h * v) - ae.encode(x - h * v)) / (2 * h)
    np.testing.assert_allclose(D @ v, fd, rtol=1e-6)


def test_json_roundtrip():
    rng = np.random.default_rng(6)
    S = rng.standard_normal((70, 20))
    ae = Autoencoder.nonlinear(70, 2, [8], rng, S, 4)
    back = Autoencoder.from_json(ae.to_json(), ae.V)
    x = rng.standard_normal(70)
    np.testing.assert_array_equal(back.encode(x), ae.encode(x))
    with pytest.raises(ConfigurationError):
        Autoencoder.from_json(ae.to_json(), None)
