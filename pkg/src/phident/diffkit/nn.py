"""Dense networks built from :mod:`phident.diffkit.graph` primitives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from . import graph as G

ACTIVATIONS = ("elu", "linear")


class ConfigurationError(ValueError):
    """Inconsistent network or model dimensions."""


@dataclass
class MLPWeights:
    """Layer stack ``[(W, b), ...]`` with ``W`` of shape ``(out, in)``.

    Entries may be numpy arrays or graph values (see :meth:`bind`). Hidden
    layers use ``activation``; the last layer is linear unless
    ``final_activation`` is set.
    """

    layers: list[tuple[Any, Any]]
    activation: str = "elu"
    final_activation: bool = False

    def __post_init__(self) -> None:
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {self.activation!r}")
        for k in range(1, len(self.layers)):
            if _shape(self.layers[k][0])[1] != _shape(self.layers[k - 1][0])[0]:
                raise ConfigurationError(
                    f"layer {k} expects input width {_shape(self.layers[k][0])[1]}, "
                    f"previous layer outputs {_shape(self.layers[k - 1][0])[0]}"
                )

    @property
    def in_dim(self) -> int:
        return _shape(self.layers[0][0])[1]

    @property
    def out_dim(self) -> int:
        return _shape(self.layers[-1][0])[0]

    @property
    def sizes(self) -> list[int]:
        return [self.in_dim] + [_shape(W)[0] for W, _ in self.layers]

    def segments(self, prefix: str) -> dict[str, np.ndarray]:
        out = {}
        for k, (W, b) in enumerate(self.layers):
            out[f"{prefix}.{k}.W"] = np.asarray(W)
            out[f"{prefix}.{k}.b"] = np.asarray(b)
        return out

    @classmethod
    def from_segments(cls, segs, prefix: str, activation="elu", final_activation=False):
        layers = []
        k = 0
        while f"{prefix}.{k}.W" in segs:
            layers.append((segs[f"{prefix}.{k}.W"], segs[f"{prefix}.{k}.b"]))
            k += 1
        return cls(layers, activation, final_activation)

    def bind(self, g: G.Graph, prefix: str) -> tuple["MLPWeights", dict[str, G.Var]]:
        """Copy of this network whose weights are leaves of ``g``."""
        leaves: dict[str, G.Var] = {}
        layers = []
        for k, (W, b) in enumerate(self.layers):
            lw = g.leaf(W, f"{prefix}.{k}.W")
            lb = g.leaf(b, f"{prefix}.{k}.b")
            leaves[f"{prefix}.{k}.W"] = lw
            leaves[f"{prefix}.{k}.b"] = lb
            layers.append((lw, lb))
        return MLPWeights(layers, self.activation, self.final_activation), leaves

    def to_json(self) -> dict:
        return {
            "activation": self.activation,
            "final_activation": self.final_activation,
            "layers": [
                {"W": np.asarray(W).tolist(), "b": np.asarray(b).tolist()} for W, b in self.layers
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "MLPWeights":
        layers = [
            (np.array(l["W"], dtype=np.float64).reshape(len(l["b"]), -1), np.array(l["b"], dtype=np.float64))
            for l in doc["layers"]
        ]
        return cls(layers, doc["activation"], doc.get("final_activation", False))


def _shape(x) -> tuple[int, ...]:
    return x.shape if isinstance(x, G.Var) else np.shape(x)


def init_mlp(
    sizes: Sequence[int],
    rng: np.random.Generator,
    activation: str = "elu",
    final_activation: bool = False,
) -> MLPWeights:
    """Glorot-uniform weights, zero biases. ``sizes`` includes input and output widths."""
    if len(sizes) < 2:
        raise ConfigurationError("an MLP needs at least an input and an output width")
    layers = []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (n_in + n_out))
        layers.append((rng.uniform(-limit, limit, size=(n_out, n_in)), np.zeros(n_out)))
    return MLPWeights(layers, activation, final_activation)


def _act(w: MLPWeights, k: int) -> bool:
    last = k == len(w.layers) - 1
    return w.activation == "elu" and (not last or w.final_activation)


def _check_input(w: MLPWeights, x) -> None:
    width = _shape(x)[-1]
    if width != w.in_dim:
        raise ConfigurationError(f"network expects input width {w.in_dim}, got {width}")


def _affine(h, W, b):
    # rows of h are samples
    if G.is_var(h) or G.is_var(W):
        return G.add(G.matmul(h, G.transpose(W)), b)
    return h @ np.asarray(W).T + b


def mlp_apply(w: MLPWeights, x):
    """Evaluate the network on ``x`` of shape ``(in,)`` or ``(batch, in)``."""
    _check_input(w, x)
    single = len(_shape(x)) == 1
    h = G.reshape(x, (1, -1)) if single else x
    for k, (W, b) in enumerate(w.layers):
        h = _affine(h, W, b)
        if _act(w, k):
            h = G.elu(h)
    return G.reshape(h, (-1,)) if single else h


def mlp_apply_with_jvp(w: MLPWeights, x, v):
    """Network output and the directional derivative ``D_x mlp(x) · v``.

    The tangent is pushed through layer by layer with the activation
    derivative as an ordinary primitive, so the result can itself be
    differentiated in reverse mode.
    """
    _check_input(w, x)
    if _shape(v) != _shape(x):
        raise ConfigurationError(f"tangent shape {_shape(v)} does not match input {_shape(x)}")
    single = len(_shape(x)) == 1
    h = G.reshape(x, (1, -1)) if single else x
    t = G.reshape(v, (1, -1)) if single else v
    for k, (W, b) in enumerate(w.layers):
        pre = _affine(h, W, b)
        tp = G.matmul(t, G.transpose(W)) if (G.is_var(t) or G.is_var(W)) else t @ np.asarray(W).T
        if _act(w, k):
            h = G.elu(pre)
            t = G.mul(G.elu_d(pre), tp)
        else:
            h, t = pre, tp
    if single:
        return G.reshape(h, (-1,)), G.reshape(t, (-1,))
    return h, t


def jvp(w: MLPWeights, x, v):
    """``D_x mlp(x) · v``; see :func:`mlp_apply_with_jvp`."""
    return mlp_apply_with_jvp(w, x, v)[1]


def jacobian(w: MLPWeights, x: np.ndarray) -> np.ndarray:
    """Dense Jacobian at a single point, one JVP sweep per input direction."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    cols = [np.asarray(jvp(w, x, np.eye(n)[j])) for j in range(n)]
    return np.stack(cols, axis=-1)
