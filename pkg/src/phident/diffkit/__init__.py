"""Small differentiation engine and optimizer for dense networks."""

from . import graph as ops
from .adam import AdamState, NonFiniteGradientError, adam_step
from .graph import Graph, Node, Var, reverse_grad
from .nn import (
    ConfigurationError,
    MLPWeights,
    init_mlp,
    jacobian,
    jvp,
    mlp_apply,
    mlp_apply_with_jvp,
)
from .weights import WeightVector

__all__ = [
    "AdamState",
    "ConfigurationError",
    "Graph",
    "MLPWeights",
    "Node",
    "NonFiniteGradientError",
    "Var",
    "WeightVector",
    "adam_step",
    "init_mlp",
    "jacobian",
    "jvp",
    "mlp_apply",
    "mlp_apply_with_jvp",
    "ops",
    "reverse_grad",
]
