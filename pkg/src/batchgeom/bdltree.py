"""Batch-dynamic kd-tree built with the logarithmic method.

Points live in a small buffer tree (fewer than ``X`` points) and in static
vEB kd-trees of exactly ``X * 2**i`` points each.  Bit ``i`` of the
fullness mask ``F`` is set when tree ``i`` exists, so inserting ``m * X``
points amounts to adding ``m`` to ``F``: trees whose bits clear are torn
down and trees whose bits appear are rebuilt from the gathered points.
Erasing tombstones points in every tree and sends the survivors of any
tree that has lost half its points back through insertion.
"""

from __future__ import annotations

import numpy as np

from .bloom import BloomFilter, bloom_build
from .core import as_points, parallel_for
from .kdtree import OBJECT_MEDIAN, KnnBuffer, StaticTree, build_veb, erase_static, knn_batch

__all__ = ["BUFFER_SIZE", "BDLTree", "bdl_build", "bdl_insert", "bdl_erase", "bdl_knn"]

BUFFER_SIZE = 1024


class BDLTree:
    """Buffer tree plus static trees indexed by the fullness bitmask.

    Attributes are readable for inspection: ``statics[i]`` is a
    :class:`StaticTree` or ``None``, ``buffer_points``/``buffer_ids`` hold the
    buffer contents and ``blooms[i]`` is built on the first erase that
    touches tree ``i``.
    """

    def __init__(self, d: int, X: int = BUFFER_SIZE, heuristic: str = OBJECT_MEDIAN):
        if X < 1:
            raise ValueError("buffer size must be positive")
        self.d = d
        self.X = X
        self.heuristic = heuristic
        self.statics: list[StaticTree | None] = []
        self.blooms: list[BloomFilter | None] = []
        self.buffer_points = np.zeros((0, d))
        self.buffer_ids = np.zeros(0, dtype=np.int64)
        self.buffer_tree = build_veb(self.buffer_points, heuristic)
        self.next_id = 0

    @property
    def F(self) -> int:
        return sum(1 << i for i, t in enumerate(self.statics) if t is not None)

    def capacity(self, i: int) -> int:
        return self.X << i

    def __len__(self) -> int:
        return len(self.buffer_ids) + sum(t.live for t in self.statics if t is not None)

    def live_points(self) -> tuple[np.ndarray, np.ndarray]:
        pts = [self.buffer_points]
        ids = [self.buffer_ids]
        for t in self.statics:
            if t is not None:
                p, q = t.live_points()
                pts.append(p)
                ids.append(q)
        return np.concatenate(pts), np.concatenate(ids)

    def trees(self) -> list[StaticTree]:
        """Nonempty trees from largest to smallest, buffer last."""
        out = [t for t in reversed(self.statics) if t is not None and t.live]
        if len(self.buffer_ids):
            out.append(self.buffer_tree)
        return out

    # -- internals ---------------------------------------------------------

    def _set_buffer(self, pts, ids):
        self.buffer_points, self.buffer_ids = pts, ids
        self.buffer_tree = build_veb(pts, self.heuristic, ids=ids)

    def _drop(self, i):
        t = self.statics[i]
        self.statics[i] = None
        self.blooms[i] = None
        while self.statics and self.statics[-1] is None:
            self.statics.pop()
            self.blooms.pop()
        return t.live_points()

    def _place(self, pts, ids):
        """Insert points (with ids) following the bitmask protocol."""
        X = self.X
        buf_p, buf_i = self.buffer_points, self.buffer_ids
        buf_changed = False
        while True:
            r = len(ids) % X
            if r:
                buf_p = np.concatenate((buf_p, pts[len(pts) - r:]))
                buf_i = np.concatenate((buf_i, ids[len(ids) - r:]))
                pts, ids = pts[:len(pts) - r], ids[:len(ids) - r]
                buf_changed = True
            if len(buf_i) >= X:
                # a full buffer drains X points into the batch
                pts = np.concatenate((pts, buf_p[:X]))
                ids = np.concatenate((ids, buf_i[:X]))
                buf_p, buf_i = buf_p[X:], buf_i[X:]
                buf_changed = True
            k = len(ids) // X
            if k == 0:
                break
            F = self.F
            F_new = F + k
            gone = [i for i in range(len(self.statics)) if F >> i & 1 and not F_new >> i & 1]
            dirty = [i for i in gone if self.statics[i].live < self.statics[i].size]
            if not dirty:
                break
            # trees holding tombstones cannot fill an exact capacity; recycle their survivors
            for i in dirty:
                p, q = self._drop(i)
                pts = np.concatenate((pts, p))
                ids = np.concatenate((ids, q))
        if buf_changed:
            self._set_buffer(buf_p, buf_i)
        if k == 0:
            return
        gathered_p, gathered_i = [pts], [ids]
        for i in gone:
            p, q = self._drop(i)
            gathered_p.append(p)
            gathered_i.append(q)
        allp = np.concatenate(gathered_p)
        alli = np.concatenate(gathered_i)
        new = [i for i in range(F_new.bit_length()) if F_new >> i & 1 and not F >> i & 1]
        jobs = []
        off = 0
        for i in new:
            c = self.capacity(i)
            jobs.append((i, off, off + c))
            off += c
        if off != len(alli):
            raise AssertionError("bitmask arithmetic does not match the gathered point count")
        built = parallel_for(lambda j: build_veb(allp[j[1]:j[2]], self.heuristic, ids=alli[j[1]:j[2]]), jobs)
        for (i, _, _), t in zip(jobs, built):
            while len(self.statics) <= i:
                self.statics.append(None)
                self.blooms.append(None)
            self.statics[i] = t
            self.blooms[i] = None

    def _bloom(self, i):
        if self.blooms[i] is None:
            self.blooms[i] = bloom_build(self.statics[i].points)
        return self.blooms[i]


def bdl_build(points, X: int = BUFFER_SIZE, heuristic: str = OBJECT_MEDIAN) -> BDLTree:
    """A structure holding ``points``; equivalent to one insert into an empty one."""
    P = as_points(points)
    T = BDLTree(P.shape[1], X, heuristic)
    bdl_insert(T, P)
    return T


def bdl_insert(T: BDLTree, points, ids=None) -> np.ndarray:
    """Insert a batch; returns the ids given to the new points."""
    P = as_points(points, T.d)
    if ids is None:
        ids = np.arange(T.next_id, T.next_id + len(P), dtype=np.int64)
    else:
        ids = np.asarray(ids, dtype=np.int64)
        if len(ids) != len(P):
            raise ValueError("ids must match the number of points")
    if len(ids):
        T.next_id = max(T.next_id, int(ids.max()) + 1)
        T._place(P, ids)
    return ids


def bdl_erase(T: BDLTree, points) -> int:
    """Remove every stored point coordinate-equal to one of ``points``.

    Returns the number of points removed.
    """
    Q = as_points(points, T.d)
    if len(Q) == 0:
        return 0
    live = [i for i, t in enumerate(T.statics) if t is not None and t.live]

    def erase_one(i):
        t = T.statics[i]
        sub = Q[T._bloom(i).may_contain(Q)]
        before = t.live
        if len(sub):
            erase_static(t, sub)
        return before - t.live

    removed = sum(parallel_for(erase_one, live))
    if len(T.buffer_ids):
        bp = T.buffer_points
        hit = np.zeros(len(bp), dtype=bool)
        for s in range(0, len(Q), 256):
            hit |= (bp[:, None, :] == Q[None, s:s + 256, :]).all(axis=2).any(axis=1)
        if hit.any():
            removed += int(hit.sum())
            T._set_buffer(bp[~hit], T.buffer_ids[~hit])
    # a tree at or below half its build size is rebuilt from smaller pieces
    low = [i for i, t in enumerate(T.statics) if t is not None and 2 * t.live <= t.size]
    if low:
        parts = [T._drop(i) for i in low]
        R = np.concatenate([p for p, _ in parts])
        Ri = np.concatenate([q for _, q in parts])
        if len(Ri):
            T._place(R, Ri)
    return removed


def bdl_knn(T: BDLTree, queries, k: int) -> tuple[np.ndarray, np.ndarray]:
    """k nearest stored points for each query.

    One buffer per query is reused across trees, visited from largest to
    smallest.  Returns ``(ids, squared distances)`` arrays of shape
    ``(len(queries), k)``, padded with -1 / inf when fewer than k points
    are stored.  Ties are broken by id.
    """
    if k < 1:
        raise ValueError("k must be positive")
    Q = as_points(queries, T.d)
    bufs = [KnnBuffer(k) for _ in range(len(Q))]
    for t in T.trees():
        knn_batch(t, Q, k, bufs)
    ids = np.full((len(Q), k), -1, dtype=np.int64)
    dists = np.full((len(Q), k), np.inf)
    for j, b in enumerate(bufs):
        i, dd = b.extract()
        ids[j, :len(i)] = i
        dists[j, :len(i)] = dd
    return ids, dists
