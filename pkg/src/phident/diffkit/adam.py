from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .weights import WeightVector


class NonFiniteGradientError(FloatingPointError):
    def __init__(self, segment: str) -> None:
        super().__init__(f"non-finite gradient in weight segment {segment!r}")
        self.segment = segment


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, w: WeightVector, **hyper) -> "AdamState":
        return cls(np.zeros_like(w.flat), np.zeros_like(w.flat), **hyper)


def adam_step(
    w: WeightVector, grads: np.ndarray, s: AdamState
) -> tuple[WeightVector, AdamState]:
    """One bias-corrected ADAM update; returns new weights and state."""
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != w.flat.shape:
        raise ValueError(f"gradient length {grads.shape} does not match weights {w.flat.shape}")
    bad = np.flatnonzero(~np.isfinite(grads))
    if bad.size:
        raise NonFiniteGradientError(w.segment_of(int(bad[0])))
    step = s.step + 1
    m = s.beta1 * s.m + (1.0 - s.beta1) * grads
    v = s.beta2 * s.v + (1.0 - s.beta2) * grads * grads
    m_hat = m / (1.0 - s.beta1**step)
    v_hat = v / (1.0 - s.beta2**step)
    new = w.with_flat(w.flat - s.lr * m_hat / (np.sqrt(v_hat) + s.eps))
    return new, replace(s, m=m, v=v, step=step)
