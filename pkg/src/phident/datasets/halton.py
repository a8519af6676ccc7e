from __future__ import annotations

import numpy as np

PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29)


def halton(index: int, base: int) -> float:
    """Radical inverse of ``index`` in ``base`` (index ≥ 1)."""
    if index < 1 or base < 2:
        raise ValueError(f"need index >= 1 and base >= 2, got {index}, {base}")
    f, out = 1.0, 0.0
    i = index
    while i > 0:
        f /= base
        i, digit = divmod(i, base)
        out += f * digit
    return out


def halton_points(n: int, dim: int, start: int = 1) -> np.ndarray:
    """``n`` points of the ``dim``-dimensional Halton sequence from ``start``."""
    if dim > len(PRIMES):
        raise ValueError(f"at most {len(PRIMES)} dimensions supported")
    return np.array(
        [[halton(start + i, PRIMES[d]) for d in range(dim)] for i in range(n)], dtype=np.float64
    ).reshape(n, dim)


def scale_to_box(unit: np.ndarray, lo, hi) -> np.ndarray:
    lo, hi = np.asarray(lo, dtype=np.float64), np.asarray(hi, dtype=np.float64)
    return lo + unit * (hi - lo)
