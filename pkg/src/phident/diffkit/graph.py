"""Tape-based reverse-mode differentiation over dense numpy arrays.

A :class:`Graph` is an append-only list of :class:`Node` records. Every
primitive below accepts either plain arrays or :class:`Var` handles: with
plain arrays it just computes the numpy result, with at least one ``Var`` it
records a node on the owning graph. Model code is therefore written once and
serves both evaluation and training.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

__all__ = [
    "Graph",
    "Node",
    "Var",
    "add",
    "sub",
    "mul",
    "neg",
    "matmul",
    "einsum",
    "transpose",
    "reshape",
    "sum",
    "mean",
    "square",
    "abs",
    "elu",
    "elu_d",
    "elu_dd",
    "getitem",
    "embed",
    "concat",
    "reverse_grad",
    "is_var",
]


@dataclass(eq=False)
class Node:
    op: str
    parents: tuple[int, ...]
    value: np.ndarray
    payload: Any = None
    requires_grad: bool = False
    adjoint: np.ndarray | None = field(default=None, repr=False)


class Graph:
    """Append-only computation record. Parents always precede children."""

    def __init__(self) -> None:
        self.nodes: list[Node] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def _push(self, op, parents, value, payload=None, requires_grad=None) -> "Var":
        idx = len(self.nodes)
        if requires_grad is None:
            requires_grad = any(self.nodes[p].requires_grad for p in parents)
        self.nodes.append(Node(op, tuple(parents), value, payload, requires_grad))
        return Var(self, idx)

    def leaf(self, value, name: str | None = None) -> "Var":
        """Trainable input; gradients are tracked through it."""
        return self._push("leaf", (), np.asarray(value, dtype=np.float64), name, True)

    def const(self, value) -> "Var":
        return self._push("const", (), np.asarray(value, dtype=np.float64), None, False)

    def adjoint(self, v: "Var") -> np.ndarray:
        node = self.nodes[v.index]
        if node.adjoint is None:
            return np.zeros_like(node.value)
        return node.adjoint

    def _lift(self, x) -> int:
        if isinstance(x, Var):
            if x.graph is not self:
                raise ValueError("operands belong to different graphs")
            return x.index
        return self.const(x).index


class Var:
    """Handle to one node of a :class:`Graph`."""

    __slots__ = ("graph", "index")
    __array_priority__ = 1000.0

    def __init__(self, graph: Graph, index: int) -> None:
        self.graph = graph
        self.index = index

    @property
    def node(self) -> Node:
        return self.graph.nodes[self.index]

    @property
    def value(self) -> np.ndarray:
        return self.graph.nodes[self.index].value

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    def __repr__(self) -> str:
        return f"Var(#{self.index} {self.node.op} shape={self.shape})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __truediv__(self, other):
        if isinstance(other, Var):
            raise TypeError("division by a graph value is not supported")
        return mul(self, 1.0 / np.asarray(other, dtype=np.float64))

    def __getitem__(self, idx):
        return getitem(self, idx)

    @property
    def T(self):
        return transpose(self)


def is_var(x) -> bool:
    return isinstance(x, Var)


def _graph_of(*args) -> Graph | None:
    for a in args:
        if isinstance(a, Var):
            return a.graph
    return None


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# -- vector-Jacobian products, keyed by op name ---------------------------------
# Each receives (node, adjoint, parent values, needs) and returns one adjoint per
# parent, or None where ``needs`` is False.

_VJP: dict[str, Callable] = {}


def _register(name):
    def deco(fn):
        _VJP[name] = fn
        return fn

    return deco


@_register("add")
def _vjp_add(node, g, vals, needs):
    a, b = vals
    return (
        _unbroadcast(g, a.shape) if needs[0] else None,
        _unbroadcast(g, b.shape) if needs[1] else None,
    )


@_register("sub")
def _vjp_sub(node, g, vals, needs):
    a, b = vals
    return (
        _unbroadcast(g, a.shape) if needs[0] else None,
        _unbroadcast(-g, b.shape) if needs[1] else None,
    )


@_register("mul")
def _vjp_mul(node, g, vals, needs):
    a, b = vals
    return (
        _unbroadcast(g * b, a.shape) if needs[0] else None,
        _unbroadcast(g * a, b.shape) if needs[1] else None,
    )


@_register("neg")
def _vjp_neg(node, g, vals, needs):
    return (-g,)


@_register("matmul")
def _vjp_matmul(node, g, vals, needs):
    a, b = vals
    ga = gb = None
    if needs[0]:
        ga = _unbroadcast(g @ np.swapaxes(b, -1, -2), a.shape)
    if needs[1]:
        gb = _unbroadcast(np.swapaxes(a, -1, -2) @ g, b.shape)
    return ga, gb


@_register("einsum")
def _vjp_einsum(node, g, vals, needs):
    specs, out = node.payload
    if len(vals) == 1:
        return (np.einsum(f"{out}->{specs[0]}", g),)
    a, b = vals
    sa, sb = specs
    return (
        np.einsum(f"{out},{sb}->{sa}", g, b) if needs[0] else None,
        np.einsum(f"{out},{sa}->{sb}", g, a) if needs[1] else None,
    )


@_register("transpose")
def _vjp_transpose(node, g, vals, needs):
    return (np.swapaxes(g, -1, -2),)


@_register("reshape")
def _vjp_reshape(node, g, vals, needs):
    return (g.reshape(vals[0].shape),)


@_register("sum")
def _vjp_sum(node, g, vals, needs):
    (a,) = vals
    axis, keepdims = node.payload
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return (np.broadcast_to(g, a.shape).copy(),)


@_register("square")
def _vjp_square(node, g, vals, needs):
    return (2.0 * vals[0] * g,)


@_register("abs")
def _vjp_abs(node, g, vals, needs):
    # subgradient with sign(0) = 0
    return (np.sign(vals[0]) * g,)


@_register("elu")
def _vjp_elu(node, g, vals, needs):
    return (_elu_d(vals[0]) * g,)


@_register("elu_d")
def _vjp_elu_d(node, g, vals, needs):
    return (_elu_dd(vals[0]) * g,)


@_register("elu_dd")
def _vjp_elu_dd(node, g, vals, needs):
    # third derivative coincides with the second on both branches
    return (_elu_dd(vals[0]) * g,)


@_register("getitem")
def _vjp_getitem(node, g, vals, needs):
    out = np.zeros_like(vals[0])
    out[node.payload] = g
    return (out,)


@_register("embed")
def _vjp_embed(node, g, vals, needs):
    positions, _ = node.payload
    return (g[..., positions],)


@_register("concat")
def _vjp_concat(node, g, vals, needs):
    bounds = np.cumsum([0] + [v.shape[-1] for v in vals])
    return tuple(
        g[..., bounds[i] : bounds[i + 1]] if needs[i] else None for i in range(len(vals))
    )


# -- elementwise activation kernels --------------------------------------------


def _elu(x):
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def _elu_d(x):
    # right-limit convention at the kink: elu'(0) = 1
    return np.where(x >= 0, 1.0, np.exp(np.minimum(x, 0.0)))


def _elu_dd(x):
    # right-limit convention at the kink: elu''(0) = 0
    return np.where(x >= 0, 0.0, np.exp(np.minimum(x, 0.0)))


# -- public primitives ---------------------------------------------------------


def _binary(op, fn, a, b):
    g = _graph_of(a, b)
    if g is None:
        return fn(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))
    ia, ib = g._lift(a), g._lift(b)
    value = fn(g.nodes[ia].value, g.nodes[ib].value)
    return g._push(op, (ia, ib), value)


def _unary(op, fn, a, payload=None):
    if not isinstance(a, Var):
        return fn(np.asarray(a, dtype=np.float64))
    g = a.graph
    return g._push(op, (a.index,), fn(a.value), payload)


def add(a, b):
    return _binary("add", np.add, a, b)


def sub(a, b):
    return _binary("sub", np.subtract, a, b)


def mul(a, b):
    return _binary("mul", np.multiply, a, b)


def neg(a):
    return _unary("neg", np.negative, a)


def matmul(a, b):
    """``a @ b`` for operands of rank >= 2 (leading axes broadcast)."""
    va = a.value if isinstance(a, Var) else np.asarray(a)
    vb = b.value if isinstance(b, Var) else np.asarray(b)
    if va.ndim < 2 or vb.ndim < 2:
        raise ValueError("matmul operands must have rank >= 2; use einsum for vectors")
    return _binary("matmul", np.matmul, a, b)


def _parse_einsum(subscripts: str, n_ops: int):
    if "..." in subscripts or "->" not in subscripts:
        raise ValueError("einsum needs explicit output subscripts and no ellipsis")
    lhs, out = subscripts.replace(" ", "").split("->")
    specs = lhs.split(",")
    if len(specs) != n_ops or n_ops not in (1, 2):
        raise ValueError("einsum supports one or two operands")
    for s in specs + [out]:
        if len(set(s)) != len(s):
            raise ValueError(f"repeated index in einsum term {s!r}")
    for i, s in enumerate(specs):
        others = set(out).union(*(specs[j] for j in range(n_ops) if j != i))
        if not set(s) <= others:
            raise ValueError(f"index summed within a single operand in {subscripts!r}")
    return tuple(specs), out


def einsum(subscripts: str, *operands):
    specs, out = _parse_einsum(subscripts, len(operands))
    g = _graph_of(*operands)
    if g is None:
        return np.einsum(subscripts, *[np.asarray(o, dtype=np.float64) for o in operands])
    idx = [g._lift(o) for o in operands]
    value = np.einsum(subscripts, *[g.nodes[i].value for i in idx])
    return g._push("einsum", idx, value, (specs, out))


def transpose(a):
    """Swap the last two axes."""
    return _unary("transpose", lambda x: np.swapaxes(x, -1, -2), a)


def reshape(a, shape):
    return _unary("reshape", lambda x: x.reshape(shape), a)


def sum(a, axis=None, keepdims=False):  # noqa: A001 - mirrors numpy naming
    return _unary("sum", lambda x: np.sum(x, axis=axis, keepdims=keepdims), a, (axis, keepdims))


def mean(a, axis=None):
    n = (a.value if isinstance(a, Var) else np.asarray(a)).size
    if axis is not None:
        n = (a.value if isinstance(a, Var) else np.asarray(a)).shape[axis]
    return mul(sum(a, axis=axis), 1.0 / n)


def square(a):
    return _unary("square", np.square, a)


def abs(a):  # noqa: A001
    return _unary("abs", np.abs, a)


def elu(a):
    return _unary("elu", _elu, a)


def elu_d(a):
    return _unary("elu_d", _elu_d, a)


def elu_dd(a):
    return _unary("elu_dd", _elu_dd, a)


def getitem(a, idx):
    """Basic (slice/integer) indexing."""
    return _unary("getitem", lambda x: x[idx], a, idx)


def embed(a, positions, size: int):
    """Scatter the last axis of ``a`` into ``positions`` of a zero last axis of ``size``."""
    positions = np.asarray(positions, dtype=np.intp)

    def fn(x):
        if x.shape[-1] != positions.size:
            raise ValueError(
                f"embed expects last axis of length {positions.size}, got {x.shape[-1]}"
            )
        out = np.zeros(x.shape[:-1] + (size,))
        out[..., positions] = x
        return out

    return _unary("embed", fn, a, (positions, size))


def concat(parts: Sequence):
    """Concatenate along the last axis."""
    g = _graph_of(*parts)
    if g is None:
        return np.concatenate([np.asarray(p, dtype=np.float64) for p in parts], axis=-1)
    idx = [g._lift(p) for p in parts]
    value = np.concatenate([g.nodes[i].value for i in idx], axis=-1)
    return g._push("concat", idx, value)


def reverse_grad(loss: Var, wrt: Sequence[Var]) -> list[np.ndarray]:
    """Back-propagate from the scalar ``loss`` and return adjoints of ``wrt``.

    Adjoints of every intermediate node are left on the graph and can be read
    with :meth:`Graph.adjoint`.
    """
    if not isinstance(loss, Var):
        raise TypeError("loss must be a graph value")
    if loss.value.size != 1:
        raise ValueError(f"reverse_grad needs a scalar seed, got shape {loss.shape}")
    g = loss.graph
    nodes = g.nodes
    for n in nodes[: loss.index + 1]:
        n.adjoint = None
    nodes[loss.index].adjoint = np.ones_like(loss.value)
    for i in range(loss.index, -1, -1):
        node = nodes[i]
        if node.adjoint is None or not node.parents or not node.requires_grad:
            continue
        needs = tuple(nodes[p].requires_grad for p in node.parents)
        vals = tuple(nodes[p].value for p in node.parents)
        grads = _VJP[node.op](node, node.adjoint, vals, needs)
        for p, gp, need in zip(node.parents, grads, needs):
            if not need or gp is None:
                continue
            parent = nodes[p]
            if parent.adjoint is None:
                parent.adjoint = np.array(gp, dtype=np.float64, copy=True)
            else:
                parent.adjoint = parent.adjoint + gp
    return [g.adjoint(v) for v in wrt]
