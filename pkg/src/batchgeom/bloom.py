"""Bloom filter over point coordinates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_points, block_ranges, parallel_for

__all__ = ["BloomFilter", "bloom_build", "bloom_may_contain", "BITS_PER_KEY", "NUM_HASHES"]

BITS_PER_KEY = 10
NUM_HASHES = 7

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLD = np.uint64(0x9E3779B97F4A7C15)


def _mix(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


def _keys(X: np.ndarray, seed: int) -> tuple[np.ndarray, np.ndarray]:
    # +0.0 folds -0.0 onto 0.0 so equal coordinates hash equally
    bits = np.ascontiguousarray(X + 0.0).view(np.uint64).reshape(X.shape)
    with np.errstate(over="ignore"):
        h = np.full(len(X), np.uint64(seed) * _GOLD + np.uint64(X.shape[1]), dtype=np.uint64)
        for j in range(X.shape[1]):
            h = _mix(h ^ bits[:, j]) + _GOLD
        h1 = _mix(h)
        h2 = _mix(h ^ _GOLD) | np.uint64(1)
    return h1, h2


@dataclass
class BloomFilter:
    bits: np.ndarray
    num_hashes: int
    capacity: int
    seed: int = 0

    def _positions(self, X: np.ndarray) -> np.ndarray:
        h1, h2 = _keys(X, self.seed)
        m = np.uint64(len(self.bits))
        steps = np.arange(self.num_hashes, dtype=np.uint64)
        with np.errstate(over="ignore"):
            return ((h1[:, None] + steps[None, :] * h2[:, None]) % m).astype(np.int64)

    def may_contain(self, points) -> np.ndarray:
        """Per-point membership test; False is definite, True may be a false positive."""
        X = as_points(points)
        if self.capacity == 0 or len(X) == 0:
            return np.zeros(len(X), dtype=bool)
        out = parallel_for(
            lambda r: self.bits[self._positions(X[r[0]:r[1]])].all(axis=1),
            block_ranges(len(X)),
        )
        return np.concatenate(out)


def bloom_build(points, bits_per_key: int = BITS_PER_KEY, num_hashes: int = NUM_HASHES, seed: int = 0) -> BloomFilter:
    """Filter holding every given point; blocks of points are hashed in parallel."""
    if bits_per_key < 1 or num_hashes < 1:
        raise ValueError("bits_per_key and num_hashes must be positive")
    X = as_points(points)
    n = len(X)
    f = BloomFilter(np.zeros(max(64, bits_per_key * n), dtype=bool), num_hashes, n, seed)
    if n:
        pos = parallel_for(lambda r: f._positions(X[r[0]:r[1]]), block_ranges(n))
        for p in pos:
            f.bits[p.ravel()] = True
    return f


def bloom_may_contain(f: BloomFilter, point) -> bool:
    """Membership test for a single point."""
    return bool(f.may_contain(np.atleast_2d(np.asarray(point, dtype=np.float64)))[0])
