"""Encoder/decoder stacks with an optional PCA outer layer.

``enc(x) = enc*(Vᵀx)`` and ``dec(z) = V dec*(z)`` where ``V`` holds
orthonormal PCA modes. ``enc*``/``dec*`` are dense networks (nonlinear
mode) or the identity (linear mode); identity mode skips ``V`` as well.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .diffkit import ConfigurationError, Graph, MLPWeights, init_mlp, mlp_apply, mlp_apply_with_jvp
from .diffkit import ops

MODES = ("identity", "linear", "nonlinear")
PCA_THRESHOLD = 64


def fit_pca(snapshots: np.ndarray, n_v: int) -> tuple[np.ndarray, np.ndarray]:
    """Leading left singular vectors of the uncentered ``N × n_data`` snapshot matrix.

    Returns ``(V, s)`` with ``V`` of shape ``(N, n_v)`` and all singular
    values ``s``. Each column is signed so its largest-magnitude entry is
    positive.
    """
    S = np.asarray(snapshots, dtype=np.float64)
    if S.ndim != 2:
        raise ValueError("snapshots must be a matrix with one snapshot per column")
    if not 1 <= n_v <= min(S.shape):
        raise ConfigurationError(f"n_v={n_v} must lie in [1, {min(S.shape)}] for snapshots of shape {S.shape}")
    U, s, _ = np.linalg.svd(S, full_matrices=False)
    V = U[:, :n_v].copy()
    pivot = np.argmax(np.abs(V), axis=0)
    V *= np.sign(V[pivot, np.arange(n_v)])
    return V, s


def save_basis(path, V: np.ndarray, singular_values: np.ndarray | None = None) -> None:
    """``<path>.bin`` holds row-major float64 ``V``; ``<path>.json`` the header."""
    p = Path(path)
    V = np.ascontiguousarray(V, dtype="<f8")
    p.with_suffix(".bin").write_bytes(V.tobytes(order="C"))
    header = {
        "N": int(V.shape[0]),
        "n_v": int(V.shape[1]),
        "singular_values": [] if singular_values is None else np.asarray(singular_values).tolist(),
    }
    p.with_suffix(".json").write_text(json.dumps(header, indent=1) + "\n")


def load_basis(path) -> tuple[np.ndarray, np.ndarray]:
    p = Path(path)
    header = json.loads(p.with_suffix(".json").read_text())
    V = np.frombuffer(p.with_suffix(".bin").read_bytes(), dtype="<f8").reshape(header["N"], header["n_v"])
    return V.astype(np.float64), np.array(header["singular_values"], dtype=np.float64)


def _right_mul(a, M: np.ndarray):
    if ops.is_var(a):
        return ops.einsum("i,ij->j" if a.ndim == 1 else "bi,ij->bj", a, M)
    return np.asarray(a, dtype=np.float64) @ M


@dataclass
class Autoencoder:
    mode: str
    N: int
    r: int
    V: np.ndarray | None = None
    enc_mlp: MLPWeights | None = None
    dec_mlp: MLPWeights | None = None
    singular_values: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown autoencoder mode {self.mode!r}")
        if self.V is not None:
            self.V = np.asarray(self.V, dtype=np.float64)
            if self.V.shape[0] != self.N:
                raise ConfigurationError(f"PCA basis has {self.V.shape[0]} rows, state width is {self.N}")
        if self.mode == "identity" and self.N != self.r:
            raise ConfigurationError(f"identity autoencoder needs r == N, got r={self.r}, N={self.N}")
        if self.mode == "linear" and (self.V is None or self.V.shape[1] != self.r):
            raise ConfigurationError("linear mode needs a PCA basis with r columns")
        if self.mode == "nonlinear":
            if self.enc_mlp is None or self.dec_mlp is None:
                raise ConfigurationError("nonlinear mode needs encoder and decoder networks")
            if self.enc_mlp.in_dim != self.n_in or self.enc_mlp.out_dim != self.r:
                raise ConfigurationError(f"encoder must map {self.n_in} -> {self.r}, got {self.enc_mlp.sizes}")
            if self.dec_mlp.in_dim != self.r or self.dec_mlp.out_dim != self.n_in:
                raise ConfigurationError(f"decoder must map {self.r} -> {self.n_in}, got {self.dec_mlp.sizes}")

    # -- construction ----------------------------------------------------------

    @classmethod
    def identity(cls, N: int) -> "Autoencoder":
        return cls("identity", N, N)

    @classmethod
    def linear(cls, snapshots: np.ndarray, r: int) -> "Autoencoder":
        V, s = fit_pca(snapshots, r)
        return cls("linear", V.shape[0], r, V, singular_values=s)

    @classmethod
    def nonlinear(
        cls,
        N: int,
        r: int,
        hidden: Sequence[int],
        rng: np.random.Generator,
        snapshots: np.ndarray | None = None,
        n_v: int | None = None,
    ) -> "Autoencoder":
        """Dense encoder/decoder; routed through PCA when ``N`` exceeds 64.

        The decoder mirrors the encoder's hidden widths. Both output layers
        are linear.
        """
        V = s = None
        if N > PCA_THRESHOLD:
            if snapshots is None or n_v is None:
                raise ConfigurationError(f"state width {N} > {PCA_THRESHOLD} needs snapshots and n_v for PCA")
            V, s = fit_pca(snapshots, n_v)
        n_in = N if V is None else V.shape[1]
        hidden = list(hidden)
        enc = init_mlp([n_in] + hidden + [r], rng)
        dec = init_mlp([r] + hidden[::-1] + [n_in], rng)
        return cls("nonlinear", N, r, V, enc, dec, s)

    @property
    def n_in(self) -> int:
        """Width seen by the inner networks (``n_v`` with PCA, else ``N``)."""
        return self.N if self.V is None else self.V.shape[1]

    @property
    def n_v(self) -> int | None:
        return None if self.V is None else self.V.shape[1]

    def with_mlps(self, enc: MLPWeights | None, dec: MLPWeights | None) -> "Autoencoder":
        return replace(self, enc_mlp=enc, dec_mlp=dec)

    def bind(self, g: Graph) -> tuple["Autoencoder", dict]:
        if self.mode != "nonlinear":
            return self, {}
        enc, le = self.enc_mlp.bind(g, "enc")
        dec, ld = self.dec_mlp.bind(g, "dec")
        return self.with_mlps(enc, dec), {**le, **ld}

    def segments(self) -> dict[str, np.ndarray]:
        if self.mode != "nonlinear":
            return {}
        return {**self.enc_mlp.segments("enc"), **self.dec_mlp.segments("dec")}

    def with_segments(self, segs) -> "Autoencoder":
        if self.mode != "nonlinear":
            return self
        enc = MLPWeights.from_segments(segs, "enc", self.enc_mlp.activation, self.enc_mlp.final_activation)
        dec = MLPWeights.from_segments(segs, "dec", self.dec_mlp.activation, self.dec_mlp.final_activation)
        return self.with_mlps(enc, dec)

    # -- reduced coordinates (inside the PCA layer) -----------------------------

    def reduce(self, x):
        return x if self.V is None else _right_mul(x, self.V)

    def lift(self, xr):
        return xr if self.V is None else _right_mul(xr, self.V.T)

    def encode_reduced(self, xr):
        return mlp_apply(self.enc_mlp, xr) if self.mode == "nonlinear" else xr

    def decode_reduced(self, z):
        return mlp_apply(self.dec_mlp, z) if self.mode == "nonlinear" else z

    def encode_reduced_jvp(self, xr, v):
        if self.mode == "nonlinear":
            return mlp_apply_with_jvp(self.enc_mlp, xr, v)
        return xr, v

    def decode_reduced_jvp(self, z, v):
        if self.mode == "nonlinear":
            return mlp_apply_with_jvp(self.dec_mlp, z, v)
        return z, v

    # -- full coordinates ------------------------------------------------------

    def _check(self, a, width: int, what: str) -> None:
        w = (a.shape if ops.is_var(a) else np.shape(a))[-1]
        if w != width:
            raise ConfigurationError(f"{what} expects width {width}, got {w}")

    def encode(self, x):
        """``z = enc*(Vᵀx)``; accepts one state or a batch (rows)."""
        self._check(x, self.N, "encoder")
        return self.encode_reduced(self.reduce(x))

    def decode(self, z):
        self._check(z, self.r, "decoder")
        return self.lift(self.decode_reduced(z))

    def encoder_jvp(self, x, v):
        """``(enc(x), D_enc(x) v)``."""
        self._check(x, self.N, "encoder")
        return self.encode_reduced_jvp(self.reduce(x), self.reduce(v))

    def decoder_jvp(self, z, v):
        """``(dec(z), D_dec(z) v)``."""
        self._check(z, self.r, "decoder")
        xr, tr = self.decode_reduced_jvp(z, v)
        return self.lift(xr), self.lift(tr)

    def decoder_jacobian(self, z) -> np.ndarray:
        """``N × r`` Jacobian of the decoder at a single latent point, one JVP per column."""
        z = np.asarray(z, dtype=np.float64)
        if self.mode == "identity":
            return np.eye(self.N)
        if self.mode == "linear":
            return self.V.copy()
        E = np.eye(self.r)
        D = np.stack([self.decoder_jvp(z, E[j])[1] for j in range(self.r)], axis=-1)
        if not np.all(np.isfinite(D)):
            raise FloatingPointError("decoder Jacobian has non-finite entries")
        return D

    def encoder_jacobian(self, x) -> np.ndarray:
        """``r × N`` Jacobian of the encoder at a single state.

        With PCA the inner Jacobian (``n_v`` sweeps) is multiplied by ``Vᵀ``.
        """
        x = np.asarray(x, dtype=np.float64)
        if self.mode == "identity":
            return np.eye(self.N)
        if self.mode == "linear":
            return self.V.T.copy()
        xr = self.reduce(x)
        E = np.eye(self.n_in)
        Dr = np.stack([self.encode_reduced_jvp(xr, E[j])[1] for j in range(self.n_in)], axis=-1)
        return Dr if self.V is None else Dr @ self.V.T

    # -- persistence -----------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "N": self.N,
            "r": self.r,
            "n_v": self.n_v,
            "enc": None if self.enc_mlp is None else self.enc_mlp.to_json(),
            "dec": None if self.dec_mlp is None else self.dec_mlp.to_json(),
        }

    @classmethod
    def from_json(cls, doc: dict, V: np.ndarray | None = None) -> "Autoencoder":
        if (doc.get("n_v") is None) != (V is None):
            raise ConfigurationError("PCA basis presence does not match the stored autoencoder")
        enc = None if doc.get("enc") is None else MLPWeights.from_json(doc["enc"])
        dec = None if doc.get("dec") is None else MLPWeights.from_json(doc["dec"])
        return cls(doc["mode"], int(doc["N"]), int(doc["r"]), V, enc, dec)
