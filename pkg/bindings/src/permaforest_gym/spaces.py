"""Minimal space descriptors with the standard gym surface.

The package mirrors the multi-objective gym API (reset/step signatures,
Box/Discrete spaces, a string registry) without importing the reference
implementation, which keeps the binding dependency-free. Only the pieces the
environment needs are provided.
"""

from __future__ import annotations

import numpy as np


class Space:
    def contains(self, x) -> bool:  # pragma: no cover - abstract
        raise NotImplementedError

    def seed(self, seed=None):
        self._rng = np.random.default_rng(seed)
        return [seed]


class Box(Space):
    def __init__(self, low, high, shape=None, dtype=np.float64):
        self.dtype = np.dtype(dtype)
        low = np.asarray(low, dtype=self.dtype)
        high = np.asarray(high, dtype=self.dtype)
        if shape is not None:
            low = np.broadcast_to(low, shape).copy()
            high = np.broadcast_to(high, shape).copy()
        if low.shape != high.shape:
            raise ValueError("low/high shape mismatch")
        self.low = low
        self.high = high
        self.shape = low.shape
        self._rng = np.random.default_rng()

    def contains(self, x) -> bool:
        arr = np.asarray(x)
        if arr.shape != self.shape:
            return False
        return bool(np.all(arr >= self.low) and np.all(arr <= self.high)
                    and np.all(np.isfinite(arr)))

    def sample(self):
        lo = np.where(np.isfinite(self.low), self.low, -1.0)
        hi = np.where(np.isfinite(self.high), self.high, 1.0)
        return self._rng.uniform(lo, hi).astype(self.dtype)

    def __repr__(self):
        return f"Box(shape={self.shape}, dtype={self.dtype})"


class Discrete(Space):
    def __init__(self, n: int):
        self.n = int(n)
        self.shape = ()
        self.dtype = np.int64
        self._rng = np.random.default_rng()

    def contains(self, x) -> bool:
        try:
            value = int(x)
        except (TypeError, ValueError):
            return False
        return 0 <= value < self.n

    def sample(self) -> int:
        return int(self._rng.integers(self.n))

    def __repr__(self):
        return f"Discrete({self.n})"
