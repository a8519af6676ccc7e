from __future__ import annotations

from typing import Iterator, Mapping

import numpy as np


class WeightVector:
    """Flat float64 array partitioned into named, shaped segments.

    Segment order is insertion order and defines the flat layout.
    """

    def __init__(self, segments: Mapping[str, np.ndarray]) -> None:
        self._layout: dict[str, tuple[slice, tuple[int, ...]]] = {}
        start = 0
        for name, arr in segments.items():
            arr = np.asarray(arr, dtype=np.float64)
            self._layout[name] = (slice(start, start + arr.size), arr.shape)
            start += arr.size
        self.flat = np.zeros(start)
        for name, arr in segments.items():
            self[name] = arr

    def __getitem__(self, name: str) -> np.ndarray:
        sl, shape = self._layout[name]
        return self.flat[sl].reshape(shape)

    def __setitem__(self, name: str, value) -> None:
        sl, shape = self._layout[name]
        self.flat[sl] = np.asarray(value, dtype=np.float64).reshape(-1)

    def __contains__(self, name: str) -> bool:
        return name in self._layout

    def __iter__(self) -> Iterator[str]:
        return iter(self._layout)

    def __len__(self) -> int:
        return self.flat.size

    def names(self) -> list[str]:
        return list(self._layout)

    def items(self):
        return ((k, self[k]) for k in self._layout)

    def as_dict(self) -> dict[str, np.ndarray]:
        return {k: self[k].copy() for k in self._layout}

    def copy(self) -> "WeightVector":
        out = WeightVector.__new__(WeightVector)
        out._layout = dict(self._layout)
        out.flat = self.flat.copy()
        return out

    def with_flat(self, flat: np.ndarray) -> "WeightVector":
        out = self.copy()
        out.flat = np.asarray(flat, dtype=np.float64).copy()
        return out

    def pack(self, parts: Mapping[str, np.ndarray]) -> np.ndarray:
        """Flat array laid out like this vector; missing segments are zero."""
        flat = np.zeros_like(self.flat)
        for name, val in parts.items():
            sl, _ = self._layout[name]
            flat[sl] = np.asarray(val).reshape(-1)
        return flat

    def segment_of(self, flat_index: int) -> str:
        for name, (sl, _) in self._layout.items():
            if sl.start <= flat_index < sl.stop:
                return name
        raise IndexError(flat_index)

    def segment_slice(self, name: str) -> slice:
        return self._layout[name][0]
