"""Identification networks: pH layer, hypernetwork and the training losses.

A pH source is either a :class:`PhinModel` (weights used directly) or a
:class:`HyperNetwork` (weights produced per sample from ``mu``). Both expose
``matrices(mu)``; a hypernetwork returns matrices with a leading batch axis.
All functions here run on plain arrays or on graph values, so the same code
evaluates losses and records them for differentiation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .autoencoder import Autoencoder, load_basis, save_basis
from .diffkit import ConfigurationError, Graph, MLPWeights, WeightVector, init_mlp, mlp_apply, ops, reverse_grad
from .ph import EPS_Q, PHSystem, SizeError, build_ph_matrices, ph_matrices, ph_weight_sizes

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class LossWeights:
    rec: float = 1.0
    ph: float = 1.0
    con: float = 1.0
    l1: float = 0.0

    def __post_init__(self) -> None:
        for name in ("rec", "ph", "con", "l1"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ConfigurationError(f"loss weight {name} must be finite and >= 0, got {v}")


def _split_theta(theta, sizes: dict[str, int]) -> dict:
    """Slice the last axis of ``theta`` into the named pH segments."""
    out, start = {}, 0
    v = theta.value if ops.is_var(theta) else np.asarray(theta)
    if v.shape[-1] != sum(sizes.values()):
        raise SizeError(f"pH weight vector needs {sum(sizes.values())} entries, got {v.shape[-1]}")
    for name, n in sizes.items():
        idx = (Ellipsis, slice(start, start + n))
        out[name] = ops.getitem(theta, idx) if ops.is_var(theta) else v[idx]
        start += n
    return out


@dataclass
class PhinModel:
    """pH layer with directly trained segments ``theta[J|R|Q|B]``."""

    r: int
    n_p: int
    theta: dict
    eps: float = EPS_Q
    frozen_Q: bool = False

    def __post_init__(self) -> None:
        sizes = ph_weight_sizes(self.r, self.n_p, self.frozen_Q)
        if set(self.theta) != set(sizes):
            raise SizeError(f"expected segments {sorted(sizes)}, got {sorted(self.theta)}")
        for name, n in sizes.items():
            v = self.theta[name]
            shape = v.shape if ops.is_var(v) else np.shape(v)
            if shape != (n,):
                raise SizeError(f"segment {name} needs {n} entries, got shape {shape}")

    @classmethod
    def init(cls, r: int, n_p: int, rng: np.random.Generator, frozen_Q: bool = False, scale: float = 0.1, eps: float = EPS_Q):
        sizes = ph_weight_sizes(r, n_p, frozen_Q)
        return cls(r, n_p, {k: scale * rng.standard_normal(n) for k, n in sizes.items()}, eps, frozen_Q)

    @property
    def n_mu(self) -> int:
        return 0

    def matrices(self, mu=None):
        t = self.theta
        return ph_matrices(t["J"], t["R"], t.get("Q"), t["B"], self.r, self.n_p, self.eps)

    def system(self) -> PHSystem:
        t = self.theta
        return build_ph_matrices(t["J"], t["R"], t.get("Q"), t["B"], self.r, self.n_p, self.eps)

    def segments(self) -> dict[str, np.ndarray]:
        return {f"ph.{k}": np.asarray(v) for k, v in self.theta.items()}

    def with_segments(self, segs) -> "PhinModel":
        return PhinModel(self.r, self.n_p, {k: segs[f"ph.{k}"] for k in self.theta}, self.eps, self.frozen_Q)

    def bind(self, g: Graph):
        leaves = {f"ph.{k}": g.leaf(v, f"ph.{k}") for k, v in self.theta.items()}
        return self.with_segments(leaves), leaves

    def to_json(self) -> dict:
        return {
            "kind": "phin",
            "r": self.r,
            "n_p": self.n_p,
            "eps": self.eps,
            "frozen_Q": self.frozen_Q,
            "theta": {k: np.asarray(v).tolist() for k, v in self.theta.items()},
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PhinModel":
        theta = {k: np.array(v, dtype=np.float64) for k, v in doc["theta"].items()}
        return cls(int(doc["r"]), int(doc["n_p"]), theta, float(doc["eps"]), bool(doc["frozen_Q"]))


@dataclass
class HyperNetwork:
    """Dense network mapping ``mu`` to the pH weight vector (segments J, R, [Q], B)."""

    mlp: MLPWeights
    r: int
    n_p: int
    eps: float = EPS_Q
    frozen_Q: bool = False

    def __post_init__(self) -> None:
        if self.mlp.out_dim != self.n_theta:
            raise ConfigurationError(
                f"hypernetwork outputs {self.mlp.out_dim} weights, the pH layer needs {self.n_theta}"
            )

    @property
    def sizes(self) -> dict[str, int]:
        return ph_weight_sizes(self.r, self.n_p, self.frozen_Q)

    @property
    def n_theta(self) -> int:
        return sum(self.sizes.values())

    @property
    def n_mu(self) -> int:
        return self.mlp.in_dim

    @classmethod
    def init(
        cls,
        n_mu: int,
        r: int,
        n_p: int,
        hidden: Sequence[int],
        rng: np.random.Generator,
        frozen_Q: bool = False,
        eps: float = EPS_Q,
    ) -> "HyperNetwork":
        n_theta = sum(ph_weight_sizes(r, n_p, frozen_Q).values())
        return cls(init_mlp([n_mu] + list(hidden) + [n_theta], rng), r, n_p, eps, frozen_Q)

    def theta(self, mu) -> dict:
        return _split_theta(mlp_apply(self.mlp, mu), self.sizes)

    def matrices(self, mu):
        t = self.theta(mu)
        return ph_matrices(t["J"], t["R"], t.get("Q"), t["B"], self.r, self.n_p, self.eps)

    def materialize(self, mu) -> PhinModel:
        mu = np.asarray(mu, dtype=np.float64)
        if mu.shape != (self.n_mu,):
            raise ConfigurationError(f"hypernetwork expects a parameter vector of length {self.n_mu}, got {mu.shape}")
        return PhinModel(self.r, self.n_p, dict(self.theta(mu)), self.eps, self.frozen_Q)

    def system(self, mu) -> PHSystem:
        return self.materialize(mu).system()

    def segments(self) -> dict[str, np.ndarray]:
        return self.mlp.segments("hyper")

    def with_segments(self, segs) -> "HyperNetwork":
        mlp = MLPWeights.from_segments(segs, "hyper", self.mlp.activation, self.mlp.final_activation)
        return HyperNetwork(mlp, self.r, self.n_p, self.eps, self.frozen_Q)

    def bind(self, g: Graph):
        mlp, leaves = self.mlp.bind(g, "hyper")
        return HyperNetwork(mlp, self.r, self.n_p, self.eps, self.frozen_Q), leaves

    def to_json(self) -> dict:
        return {
            "kind": "hyper",
            "r": self.r,
            "n_p": self.n_p,
            "eps": self.eps,
            "frozen_Q": self.frozen_Q,
            "mlp": self.mlp.to_json(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "HyperNetwork":
        return cls(MLPWeights.from_json(doc["mlp"]), int(doc["r"]), int(doc["n_p"]), float(doc["eps"]), bool(doc["frozen_Q"]))


PHSource = Union[PhinModel, HyperNetwork]


def hypernet_materialize(h: HyperNetwork, mu) -> PhinModel:
    return h.materialize(mu)


def _rows(a):
    shape = a.shape if ops.is_var(a) else np.shape(a)
    return shape[0] if len(shape) > 1 else None


def phin_rhs(ph: PHSource, z, u=None, mu=None):
    """``(J − R) Q z + B u`` for one state or a batch of states (rows).

    With a hypernetwork every row uses the matrices materialized from its own
    row of ``mu``.
    """
    zshape = z.shape if ops.is_var(z) else np.shape(z)
    if zshape[-1] != ph.r:
        raise ConfigurationError(f"latent state must have width {ph.r}, got {zshape[-1]}")
    single = len(zshape) == 1
    if single:
        z = ops.reshape(z, (1, ph.r))
        u = None if u is None else ops.reshape(u, (1, -1))
        mu = None if mu is None else ops.reshape(mu, (1, -1))
    if u is not None:
        ushape = u.shape if ops.is_var(u) else np.shape(u)
        if ushape[-1] != ph.n_p:
            raise ConfigurationError(f"input must have width {ph.n_p}, got {ushape[-1]}")
    if isinstance(ph, HyperNetwork):
        if mu is None:
            raise ConfigurationError("a hypernetwork needs parameter vectors mu")
        J, R, Q, B = ph.matrices(mu)
        A = ops.matmul(ops.sub(J, R), Q)
        out = ops.einsum("bij,bj->bi", A, z)
        if ph.n_p and u is not None:
            out = ops.add(out, ops.einsum("bij,bj->bi", B, u))
    else:
        J, R, Q, B = ph.matrices()
        A = ops.matmul(ops.sub(J, R), Q)
        out = ops.matmul(z, ops.transpose(A))
        if ph.n_p and u is not None:
            out = ops.add(out, ops.matmul(u, ops.transpose(B)))
    return ops.reshape(out, (ph.r,)) if single else out


def _mean_sq(diff):
    n = (diff.shape if ops.is_var(diff) else np.shape(diff))[0]
    return ops.mul(ops.sum(ops.square(diff)), 1.0 / n)


def _as2d(a):
    a = np.asarray(a, dtype=np.float64)
    return a.reshape(len(a), -1)


@dataclass
class Batch:
    """Rows of a training batch. ``z``/``zdot`` are needed only for latent-only losses."""

    x: np.ndarray | None = None
    xdot: np.ndarray | None = None
    u: np.ndarray | None = None
    mu: np.ndarray | None = None
    z: np.ndarray | None = None
    zdot: np.ndarray | None = None


def loss_ph(ph: PHSource, batch: Batch):
    """Mean over rows of ``‖ż − ((J − R)Qz + Bu)‖²``."""
    z, zdot = batch.z, batch.zdot
    if np.shape(z) != np.shape(zdot):
        raise ValueError(f"latent states {np.shape(z)} and derivatives {np.shape(zdot)} differ in shape")
    return _mean_sq(ops.sub(zdot, phin_rhs(ph, z, batch.u, batch.mu)))


def loss_rec(ae: Autoencoder, batch: Batch):
    """Mean over rows of ``‖x − dec(enc(x))‖²``."""
    x = _as2d(batch.x)
    return _mean_sq(ops.sub(x, ae.decode(ae.encode(x))))


def loss_con(ae: Autoencoder, ph: PHSource, batch: Batch):
    """Mean over rows of ``‖ẋ − D_dec(z) f_pH(z, u)‖²`` with ``z = enc(x)``."""
    x, xdot = _as2d(batch.x), _as2d(batch.xdot)
    if x.shape != xdot.shape:
        raise ValueError(f"states {x.shape} and derivatives {xdot.shape} differ in shape")
    z = ae.encode(x)
    _, dx = ae.decoder_jvp(z, phin_rhs(ph, z, batch.u, batch.mu))
    val = dx.value if ops.is_var(dx) else dx
    if not np.all(np.isfinite(val)):
        raise FloatingPointError("decoder JVP produced non-finite values")
    return _mean_sq(ops.sub(xdot, dx))


def l1_norm(segments: dict):
    total = 0.0
    for v in segments.values():
        total = ops.add(total, ops.sum(ops.abs(v)))
    return total


def loss_total(components: dict, lam: LossWeights, l1=0.0):
    """``λ_rec L_rec + λ_pH L_pH + λ_con L_con + λ_L1 ‖θ‖₁``; absent components count as 0."""
    total = 0.0
    for name, weight in (("rec", lam.rec), ("ph", lam.ph), ("con", lam.con)):
        if weight and name in components:
            total = ops.add(total, ops.mul(components[name], weight))
    if lam.l1:
        total = ops.add(total, ops.mul(l1, lam.l1))
    return total


@dataclass
class ReducedBatch:
    """Training rows in the coordinates seen by the inner networks.

    ``rec_offset``/``con_offset`` hold the batch-mean squared norms of the parts
    of ``x``/``ẋ`` orthogonal to the PCA modes; they complete the full-space
    losses exactly and carry no gradient.
    """

    xr: np.ndarray
    xdr: np.ndarray
    u: np.ndarray
    mu: np.ndarray
    rec_offset: float = 0.0
    con_offset: float = 0.0

    def __len__(self) -> int:
        return len(self.xr)

    def rows(self, idx) -> "ReducedBatch":
        return ReducedBatch(self.xr[idx], self.xdr[idx], self.u[idx], self.mu[idx])


def reduce_rows(ae: Autoencoder, X, Xdot, U, Mu) -> tuple[ReducedBatch, np.ndarray, np.ndarray]:
    """Project data rows onto the PCA modes.

    Returns the reduced rows together with the per-row squared norms of the
    discarded parts of ``x`` and ``ẋ``.
    """
    X, Xdot = _as2d(X), _as2d(Xdot)
    Xr, Xdr = ae.reduce(X), ae.reduce(Xdot)
    if ae.V is None:
        rx = rd = np.zeros(len(X))
    else:
        rx = np.maximum(np.einsum("ij,ij->i", X, X) - np.einsum("ij,ij->i", Xr, Xr), 0.0)
        rd = np.maximum(np.einsum("ij,ij->i", Xdot, Xdot) - np.einsum("ij,ij->i", Xdr, Xdr), 0.0)
    return ReducedBatch(Xr, Xdr, _as2d(U), _as2d(Mu)), rx, rd


@dataclass
class IdentificationModel:
    """Autoencoder plus pH source, trained jointly.

    With the identity autoencoder this is the plain pH identification
    network; the latent targets are then the data themselves.
    """

    ae: Autoencoder
    ph: PHSource
    lam: LossWeights = field(default_factory=LossWeights)

    def __post_init__(self) -> None:
        if self.ae.r != self.ph.r:
            raise ConfigurationError(f"autoencoder latent width {self.ae.r} != pH dimension {self.ph.r}")

    @property
    def parametric(self) -> bool:
        return isinstance(self.ph, HyperNetwork)

    def weights(self) -> WeightVector:
        return WeightVector({**self.ae.segments(), **self.ph.segments()})

    def with_weights(self, w: WeightVector) -> "IdentificationModel":
        segs = w.as_dict()
        return IdentificationModel(self.ae.with_segments(segs), self.ph.with_segments(segs), self.lam)

    def _terms(self, ae: Autoencoder, ph: PHSource, b: ReducedBatch, only_weighted: bool) -> dict:
        lam = self.lam
        need = lambda w: (w > 0) or not only_weighted
        mu = b.mu if self.parametric else None
        z, zdot = ae.encode_reduced_jvp(b.xr, b.xdr)
        f = phin_rhs(ph, z, b.u, mu)
        terms = {}
        if need(lam.ph):
            terms["ph"] = _mean_sq(ops.sub(zdot, f))
        if need(lam.rec) and ae.mode != "identity":
            terms["rec"] = ops.add(_mean_sq(ops.sub(b.xr, ae.decode_reduced(z))), b.rec_offset)
        if need(lam.con):
            _, dx = ae.decode_reduced_jvp(z, f)
            terms["con"] = ops.add(_mean_sq(ops.sub(b.xdr, dx)), b.con_offset)
        return terms

    def loss_and_grad(self, b: ReducedBatch) -> tuple[float, np.ndarray]:
        g = Graph()
        ae, le = self.ae.bind(g)
        ph, lp = self.ph.bind(g)
        terms = self._terms(ae, ph, b, only_weighted=True)
        total = loss_total(terms, self.lam, l1_norm(lp) if self.lam.l1 else 0.0)
        if not ops.is_var(total):
            raise ConfigurationError("all loss weights are zero; nothing to train")
        leaves = {**le, **lp}
        w = self.weights()
        grads = reverse_grad(total, [leaves[k] for k in w.names()])
        return float(total.value), w.pack(dict(zip(w.names(), grads)))

    def loss_terms(self, b: ReducedBatch) -> dict[str, float]:
        """Every loss component plus the weighted total, evaluated without a graph."""
        terms = self._terms(self.ae, self.ph, b, only_weighted=False)
        terms.setdefault("rec", 0.0)
        l1 = l1_norm(self.ph.segments())
        out = {k: float(v) for k, v in terms.items()}
        out["l1"] = float(l1)
        out["total"] = float(loss_total(terms, self.lam, l1))
        return out

    def system(self, mu=None) -> PHSystem:
        return self.ph.system(mu) if self.parametric else self.ph.system()

    # -- persistence -----------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "autoencoder": self.ae.to_json(),
            "ph": self.ph.to_json(),
            "loss_weights": self.lam.__dict__.copy(),
        }

    def save(self, path) -> list[Path]:
        """Write ``<path>`` (JSON) and, with PCA, ``<path stem>_basis.{bin,json}``."""
        p = Path(path)
        written = [p]
        if self.ae.V is not None:
            base = p.with_name(p.stem + "_basis")
            save_basis(base, self.ae.V, self.ae.singular_values)
            written += [base.with_suffix(".bin"), base.with_suffix(".json")]
        p.write_text(json.dumps(self.to_json(), indent=1) + "\n")
        return written

    @classmethod
    def load(cls, path) -> "IdentificationModel":
        p = Path(path)
        doc = json.loads(p.read_text())
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ConfigurationError(f"unsupported model schema {doc.get('schema_version')!r}")
        V = s = None
        if doc["autoencoder"].get("n_v") is not None:
            V, s = load_basis(p.with_name(p.stem + "_basis"))
        ae = Autoencoder.from_json(doc["autoencoder"], V)
        ae.singular_values = s
        phdoc = doc["ph"]
        ph = HyperNetwork.from_json(phdoc) if phdoc["kind"] == "hyper" else PhinModel.from_json(phdoc)
        return cls(ae, ph, LossWeights(**doc["loss_weights"]))
