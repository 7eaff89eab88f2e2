"""Geometric predicates, seeded randomness and fork-join primitives.

Every other module builds on the helpers here.  Parallelism is provided by a
process-wide thread pool whose width is set with :func:`set_num_workers` (or
the :func:`workers` context manager).  Nested fork-join calls issued from a
pool thread run inline, so a bounded pool can never deadlock on itself.
"""

from __future__ import annotations

import contextlib
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "DegenerateInputError",
    "MinCell",
    "ReservationTable",
    "INF_ID",
    "as_points",
    "make_rng",
    "spawn_rngs",
    "random_permutation",
    "orient3d",
    "orient_tolerance",
    "parallel_pack",
    "parallel_max_by",
    "parallel_for",
    "fork_join",
    "priority_write_min",
    "num_workers",
    "set_num_workers",
    "workers",
    "block_ranges",
]

# Sentinel for empty reservation cells.
INF_ID = np.iinfo(np.int64).max

# Relative factor of the orientation tolerance (scaled by magnitude**dim).
ORIENT_EPS = 1e-12

_BLOCK = 1 << 14


class DegenerateInputError(ValueError):
    """Input points are affinely dependent where a full-dimensional set is needed."""

    def __init__(self, message: str, extremes: Sequence[int] | None = None):
        super().__init__(message)
        self.extremes = list(extremes) if extremes is not None else []


# --------------------------------------------------------------------------
# points and randomness
# --------------------------------------------------------------------------


def as_points(points: Any, dim: int | None = None) -> np.ndarray:
    """Validate and return a C-contiguous ``(n, d)`` float64 array."""
    arr = np.ascontiguousarray(points, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, dim or 0)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d array of points, got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"expected {dim}-dimensional points, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("points must have finite coordinates")
    return arr


def make_rng(seed: int | np.random.Generator | None = 0) -> np.random.Generator:
    """Counter-based (Philox) generator; the same seed gives the same stream everywhere."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Independent child streams, one per index range; independent of pool width."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.Philox(s)) for s in children]


def random_permutation(n: int, rng: np.random.Generator | int | None = 0) -> np.ndarray:
    """Uniform permutation of ``0..n-1`` (Fisher-Yates under the hood)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return make_rng(rng).permutation(n).astype(np.int64)


# --------------------------------------------------------------------------
# predicates
# --------------------------------------------------------------------------


def orient_tolerance(scale: float, dim: int = 3) -> float:
    """Absolute determinant tolerance for coordinates of magnitude ``scale``."""
    return ORIENT_EPS * max(scale, 1e-300) ** dim


def orient3d(a, b, c, p, scale: float | None = None) -> int:
    """Sign of det(b-a, c-a, p-a); near-zero determinants map to 0.

    Positive when ``p`` lies on the side of plane ``abc`` from which ``a, b, c``
    appear counterclockwise.
    """
    pts = np.asarray([a, b, c, p], dtype=np.float64)
    if pts.shape != (4, 3):
        raise ValueError("orient3d takes four 3-dimensional points")
    if scale is None:
        scale = float(np.max(np.abs(pts)))
    u = pts[1] - pts[0]
    v = pts[2] - pts[0]
    w = pts[3] - pts[0]
    det = (
        u[0] * (v[1] * w[2] - v[2] * w[1])
        - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0])
    )
    tol = orient_tolerance(scale, 3)
    if det > tol:
        return 1
    if det < -tol:
        return -1
    return 0


# --------------------------------------------------------------------------
# fork-join pool
# --------------------------------------------------------------------------

_state = threading.local()
_pool_lock = threading.Lock()
_pool: ThreadPoolExecutor | None = None
_width = 1


def _default_width() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:  # pragma: no cover - non-linux
        return max(1, os.cpu_count() or 1)


_width = _default_width()


def num_workers() -> int:
    """Current fork-join width (``numProc``)."""
    return _width


def set_num_workers(n: int | None) -> None:
    """Bound the pool width; ``None`` or 0 means all available cores."""
    global _pool, _width
    n = _default_width() if not n else int(n)
    if n < 1:
        raise ValueError("worker count must be positive")
    with _pool_lock:
        if n != _width and _pool is not None:
            _pool.shutdown(wait=True)
            _pool = None
        _width = n


@contextlib.contextmanager
def workers(n: int | None) -> Iterator[int]:
    prev = _width
    set_num_workers(n)
    try:
        yield _width
    finally:
        set_num_workers(prev)


def _get_pool() -> ThreadPoolExecutor:
    global _pool
    with _pool_lock:
        if _pool is None:
            _pool = ThreadPoolExecutor(max_workers=_width, initializer=_mark_worker)
        return _pool


def _mark_worker() -> None:
    _state.in_pool = True


def _inline() -> bool:
    return _width == 1 or getattr(_state, "in_pool", False)


def parallel_for(fn: Callable[[Any], Any], items: Iterable[Any]) -> list:
    """Apply ``fn`` to every item, possibly concurrently; results keep item order."""
    items = list(items)
    if len(items) <= 1 or _inline():
        return [fn(x) for x in items]
    pool = _get_pool()
    return list(pool.map(fn, items))


def fork_join(*thunks: Callable[[], Any]) -> list:
    """Run the thunks as sibling tasks and wait for all of them."""
    return parallel_for(lambda t: t(), thunks)


def block_ranges(n: int, block: int = _BLOCK) -> list[tuple[int, int]]:
    """Fixed-size index blocks; the split never depends on the pool width."""
    return [(lo, min(lo + block, n)) for lo in range(0, n, block)]


def parallel_pack(items, keep: Callable) -> Any:
    """Order-preserving filter.

    For a numpy array, ``keep`` is applied to whole blocks and must return a
    boolean mask; for any other sequence it is called once per element.
    """
    if isinstance(items, np.ndarray):
        if len(items) == 0:
            return items[:0]
        parts = parallel_for(
            lambda r: items[r[0]:r[1]][np.asarray(keep(items[r[0]:r[1]]), dtype=bool)],
            block_ranges(len(items)),
        )
        return np.concatenate(parts)
    seq = list(items)
    parts = parallel_for(
        lambda r: [x for x in seq[r[0]:r[1]] if keep(x)], block_ranges(len(seq), 4096)
    )
    return [x for part in parts for x in part]


def parallel_max_by(items, score: Callable) -> int:
    """Index of a maximum-score item, smallest index on ties.

    Numpy inputs are scored block-wise (``score`` maps a block to an array of
    scores); other sequences are scored element by element.
    """
    n = len(items)
    if n == 0:
        raise ValueError("parallel_max_by of an empty sequence")
    if isinstance(items, np.ndarray):

        def best(r):
            s = np.asarray(score(items[r[0]:r[1]]), dtype=np.float64)
            i = int(np.argmax(s))
            return s[i], r[0] + i

    else:

        def best(r):
            bi, bs = r[0], score(items[r[0]])
            for i in range(r[0] + 1, r[1]):
                s = score(items[i])
                if s > bs:
                    bi, bs = i, s
            return bs, bi

    results = parallel_for(best, block_ranges(n))
    top_s, top_i = results[0]
    for s, i in results[1:]:
        if s > top_s:  # strict: earlier block wins ties
            top_s, top_i = s, i
    return int(top_i)


# --------------------------------------------------------------------------
# priority writes
# --------------------------------------------------------------------------


class MinCell:
    """Shared integer cell supporting a linearizable priority write (write-min)."""

    __slots__ = ("value", "_lock")

    def __init__(self, value: int = INF_ID):
        self.value = value
        self._lock = threading.Lock()

    def write_min(self, value: int) -> None:
        if value >= self.value:  # fast path; values only decrease
            return
        with self._lock:
            if value < self.value:
                self.value = value

    def reset(self) -> None:
        self.value = INF_ID


def priority_write_min(cell: MinCell, value: int) -> None:
    cell.write_min(value)


class ReservationTable:
    """A growable array of write-min cells guarded by lock striping."""

    _STRIPES = 64

    def __init__(self) -> None:
        self.values: list[int] = []
        self._locks = [threading.Lock() for _ in range(self._STRIPES)]

    def grow(self, size: int) -> None:
        if size > len(self.values):
            self.values.extend([INF_ID] * (size - len(self.values)))

    def write_min(self, i: int, value: int) -> None:
        if value >= self.values[i]:
            return
        with self._locks[i % self._STRIPES]:
            if value < self.values[i]:
                self.values[i] = value

    def clear(self, indices: Iterable[int]) -> None:
        for i in indices:
            self.values[i] = INF_ID

