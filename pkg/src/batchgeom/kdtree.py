"""Static kd-tree stored in van Emde Boas order.

Construction runs in two passes.  The first splits the points recursively
(children forked in parallel above a size cutoff) and records the tree
shape; each node owns a contiguous range of the reordered point store.
The second pass assigns slots with the vEB recursion: a tree of ``l``
levels is cut into a top part of ``l - l_b`` levels and bottom subtrees of
``l_b = hyperceiling((l + 1) // 2)`` levels; the top part is laid out first
and the bottom subtrees follow at offsets given by a prefix sum of their
sizes.

Erase tombstones points and collapses internal nodes left with one child.
Nearest-neighbour queries accumulate into a reusable :class:`KnnBuffer`, so
one buffer can be threaded through several trees.
"""

from __future__ import annotations

import numpy as np

from .core import as_points, fork_join, parallel_for

__all__ = [
    "LEAF_CAP",
    "SERIAL_CUTOFF",
    "OBJECT_MEDIAN",
    "SPATIAL_MEDIAN",
    "hyperceiling",
    "StaticTree",
    "build_veb",
    "erase_static",
    "KnnBuffer",
    "knn_single",
    "knn_batch",
]

LEAF_CAP = 16
SERIAL_CUTOFF = 1000
OBJECT_MEDIAN = "object"
SPATIAL_MEDIAN = "spatial"

_ALIASES = {
    "object": OBJECT_MEDIAN,
    "objectmedian": OBJECT_MEDIAN,
    "spatial": SPATIAL_MEDIAN,
    "spatialmedian": SPATIAL_MEDIAN,
}


def hyperceiling(x: int) -> int:
    """Smallest power of two that is >= ``x``."""
    x = int(x)
    if x < 1:
        raise ValueError("hyperceiling needs a positive integer")
    return 1 << (x - 1).bit_length()


def _heuristic(name: str) -> str:
    try:
        return _ALIASES[name.replace("_", "").replace("-", "").lower()]
    except (KeyError, AttributeError):
        raise ValueError(f"unknown split heuristic {name!r}") from None


# --------------------------------------------------------------------------
# pass 1: shape
# --------------------------------------------------------------------------


class _Node:
    __slots__ = ("lo", "hi", "dim", "val", "left", "right", "height", "size")

    def __init__(self, lo, hi):
        self.lo, self.hi = lo, hi
        self.dim = -1
        self.val = 0.0
        self.left = self.right = None
        self.height = 1
        self.size = 1


def _object_split(v, ids, m):
    kth = np.partition(v, m)[m]
    left = v < kth
    need = m - int(left.sum())
    if need:
        eq = np.flatnonzero(v == kth)
        eq = eq[np.argsort(ids[eq], kind="stable")]
        left[eq[:need]] = True
    return left, float(kth)


def _plan(P, order, lo, hi, depth, spatial, cap):
    node = _Node(lo, hi)
    size = hi - lo
    if size <= cap:
        return node
    d = P.shape[1]
    dim = depth % d
    ids = order[lo:hi]
    v = P[ids, dim]
    left = None
    if spatial:
        val = 0.5 * (float(v.min()) + float(v.max()))
        left = v < val
        nl = int(left.sum())
        if nl == 0 or nl == size:
            left = None
    if left is None:
        left, val = _object_split(v, ids, size // 2)
    nl = int(left.sum())
    order[lo:hi] = np.concatenate((ids[left], ids[~left]))
    node.dim, node.val = dim, val
    mid = lo + nl
    if size >= SERIAL_CUTOFF:
        node.left, node.right = fork_join(
            lambda: _plan(P, order, lo, mid, depth + 1, spatial, cap),
            lambda: _plan(P, order, mid, hi, depth + 1, spatial, cap),
        )
    else:
        node.left = _plan(P, order, lo, mid, depth + 1, spatial, cap)
        node.right = _plan(P, order, mid, hi, depth + 1, spatial, cap)
    node.height = 1 + max(node.left.height, node.right.height)
    node.size = 1 + node.left.size + node.right.size
    return node


# --------------------------------------------------------------------------
# pass 2: vEB slots
# --------------------------------------------------------------------------


def _top(node, levels):
    """Node count of the first ``levels`` levels and the nodes just below them."""
    count = 0
    frontier = [node]
    for _ in range(levels):
        nxt = []
        for x in frontier:
            count += 1
            if x.left is not None:
                nxt.append(x.left)
                nxt.append(x.right)
        frontier = nxt
    return count, frontier


def _truncated_size(node, levels):
    if levels >= node.height:
        return node.size
    return _top(node, levels)[0]


def _layout(node, levels, idx, slots):
    if levels == 1 or node.left is None:
        slots.append((idx, node))
        return
    lb = hyperceiling((levels + 1) // 2)
    lt = levels - lb
    count, bottoms = _top(node, lt)
    _layout(node, lt, idx, slots)
    off = idx + count
    jobs = []
    for b in bottoms:
        jobs.append((b, off))
        off += _truncated_size(b, lb)
    for b, o in jobs:
        _layout(b, lb, o, slots)


# --------------------------------------------------------------------------
# the tree
# --------------------------------------------------------------------------


class StaticTree:
    """A kd-tree whose nodes occupy one contiguous slot array in vEB order.

    Slot arrays: ``is_leaf``, ``dim``, ``val``, ``left``/``right`` (slot
    indices, -1 for leaves), ``lo``/``hi`` (range of the point store the
    node covers) and ``box_lo``/``box_hi``.  ``points``, ``ids`` and
    ``dead`` form the point store; ``ids`` are caller-provided payloads.
    """

    def __init__(self, d: int, heuristic: str, leaf_cap: int):
        self.d = d
        self.heuristic = heuristic
        self.leaf_cap = leaf_cap
        self.root = -1
        self.size = 0
        self.live = 0
        self.points = np.zeros((0, d))
        self.ids = np.zeros(0, dtype=np.int64)
        self.dead = np.zeros(0, dtype=bool)
        self.is_leaf = np.zeros(0, dtype=bool)
        self.dim = np.zeros(0, dtype=np.int64)
        self.val = np.zeros(0)
        self.left = np.zeros(0, dtype=np.int64)
        self.right = np.zeros(0, dtype=np.int64)
        self.lo = np.zeros(0, dtype=np.int64)
        self.hi = np.zeros(0, dtype=np.int64)
        self.box_lo = np.zeros((0, d))
        self.box_hi = np.zeros((0, d))
        self.height = 0

    @property
    def num_slots(self) -> int:
        return len(self.is_leaf)

    def live_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates and ids of the non-tombstoned points."""
        keep = ~self.dead
        return self.points[keep], self.ids[keep]

    def __len__(self) -> int:
        return self.live


def build_veb(points, heuristic: str = OBJECT_MEDIAN, leaf_cap: int = LEAF_CAP, ids=None) -> StaticTree:
    """Build a kd-tree over ``points`` in vEB slot order.

    ``heuristic`` is ``"object"`` (split at the median point, ties broken by
    input position) or ``"spatial"`` (split at the midpoint of the
    coordinate range, falling back to the median when one side would be
    empty).  ``ids`` are payloads reported by queries (default: row index).
    """
    P = as_points(points)
    n, d = P.shape
    if leaf_cap < 1:
        raise ValueError("leaf capacity must be positive")
    spatial = _heuristic(heuristic) == SPATIAL_MEDIAN
    payload = np.arange(n, dtype=np.int64) if ids is None else np.asarray(ids, dtype=np.int64)
    if len(payload) != n:
        raise ValueError("ids must match the number of points")
    tree = StaticTree(d, SPATIAL_MEDIAN if spatial else OBJECT_MEDIAN, leaf_cap)
    if n == 0:
        return tree
    order = np.arange(n, dtype=np.int64)
    root = _plan(P, order, 0, n, 0, spatial, leaf_cap)
    placed: list = []
    _layout(root, root.height, 0, placed)
    m = root.size
    if len(placed) != m:
        raise AssertionError("vEB layout did not cover every node")
    slot_of = {}
    used = np.zeros(m, dtype=bool)
    for idx, node in placed:
        if used[idx]:
            raise AssertionError("slot written twice")
        used[idx] = True
        slot_of[id(node)] = idx
    tree.points = P[order]
    tree.ids = payload[order]
    tree.dead = np.zeros(n, dtype=bool)
    tree.size = tree.live = n
    tree.height = root.height
    is_leaf = np.zeros(m, dtype=bool)
    dim = np.full(m, -1, dtype=np.int64)
    val = np.zeros(m)
    left = np.full(m, -1, dtype=np.int64)
    right = np.full(m, -1, dtype=np.int64)
    lo = np.zeros(m, dtype=np.int64)
    hi = np.zeros(m, dtype=np.int64)
    for idx, node in placed:
        lo[idx], hi[idx] = node.lo, node.hi
        if node.left is None:
            is_leaf[idx] = True
        else:
            dim[idx], val[idx] = node.dim, node.val
            left[idx] = slot_of[id(node.left)]
            right[idx] = slot_of[id(node.right)]
    # leaf boxes from their ranges, internal boxes from the children
    box_lo = np.empty((m, d))
    box_hi = np.empty((m, d))
    leaves = np.flatnonzero(is_leaf)
    starts = lo[leaves]
    rank = np.argsort(starts)
    box_lo[leaves[rank]] = np.minimum.reduceat(tree.points, starts[rank], axis=0)
    box_hi[leaves[rank]] = np.maximum.reduceat(tree.points, starts[rank], axis=0)
    # a child's range is strictly shorter than its parent's
    internal = np.flatnonzero(~is_leaf)
    internal = internal[np.argsort(hi[internal] - lo[internal], kind="stable")]
    for idx in internal.tolist():
        box_lo[idx] = np.minimum(box_lo[left[idx]], box_lo[right[idx]])
        box_hi[idx] = np.maximum(box_hi[left[idx]], box_hi[right[idx]])
    tree.is_leaf, tree.dim, tree.val = is_leaf, dim, val
    tree.left, tree.right, tree.lo, tree.hi = left, right, lo, hi
    tree.box_lo, tree.box_hi = box_lo, box_hi
    tree.root = 0
    return tree


# --------------------------------------------------------------------------
# erase
# --------------------------------------------------------------------------


def _erase_leaf(tree, idx, Q):
    lo, hi = tree.lo[idx], tree.hi[idx]
    dead = tree.dead[lo:hi]
    pts = tree.points[lo:hi]
    hit = np.zeros(hi - lo, dtype=bool)
    for s in range(0, len(Q), 256):
        blk = Q[s:s + 256]
        hit |= (pts[:, None, :] == blk[None, :, :]).all(axis=2).any(axis=1)
    newly = hit & ~dead
    k = int(newly.sum())
    if k:
        dead |= newly
    return k, bool(dead.all())


def _erase(tree, idx, Q):
    """Returns (points removed, replacement slot or -1)."""
    if tree.is_leaf[idx]:
        k, empty = _erase_leaf(tree, idx, Q)
        return k, -1 if empty else idx
    dim, val = tree.dim[idx], tree.val[idx]
    col = Q[:, dim]
    Ql = Q[col <= val]
    Qr = Q[col >= val]
    L, R = tree.left[idx], tree.right[idx]

    def go(child, sub):
        if len(sub) == 0:
            return 0, child
        return _erase(tree, child, sub)

    if len(Q) >= SERIAL_CUTOFF:
        (kl, nl), (kr, nr) = fork_join(lambda: go(L, Ql), lambda: go(R, Qr))
    else:
        kl, nl = go(L, Ql)
        kr, nr = go(R, Qr)
    if nl < 0 and nr < 0:
        return kl + kr, -1
    if nl < 0:
        return kl + kr, nr
    if nr < 0:
        return kl + kr, nl
    tree.left[idx], tree.right[idx] = nl, nr
    return kl + kr, idx


def erase_static(tree: StaticTree, points) -> int:
    """Tombstone every tree point coordinate-equal to one of ``points``.

    Empty subtrees are unlinked and internal nodes left with one child are
    replaced by that child.  Returns the new root slot (-1 once empty).
    """
    if tree.root < 0:
        return -1
    Q = as_points(points, tree.d)
    if len(Q) == 0:
        return tree.root
    removed, root = _erase(tree, tree.root, Q)
    tree.live -= removed
    tree.root = root
    return root


# --------------------------------------------------------------------------
# kNN
# --------------------------------------------------------------------------


class KnnBuffer:
    """Accumulates (id, squared distance) candidates and keeps the k best.

    Storage has room for ``2k`` entries; when it fills, a selection keeps
    the ``k`` smallest (by distance, then id) and drops the rest, giving
    amortized O(1) inserts.
    """

    __slots__ = ("k", "ids", "dists", "count", "compactions", "_bound")

    def __init__(self, k: int):
        if k < 1:
            raise ValueError("k must be positive")
        self.k = k
        self.ids = np.empty(2 * k, dtype=np.int64)
        self.dists = np.empty(2 * k)
        self.count = 0
        self.compactions = 0
        self._bound = None

    def _compact(self):
        c = self.count
        sel = np.lexsort((self.ids[:c], self.dists[:c]))[: self.k]
        self.ids[: self.k] = self.ids[:c][sel]
        self.dists[: self.k] = self.dists[:c][sel]
        self.count = min(c, self.k)
        self.compactions += 1

    def insert(self, pid: int, dist: float) -> None:
        self.ids[self.count] = pid
        self.dists[self.count] = dist
        self.count += 1
        self._bound = None
        if self.count == 2 * self.k:
            self._compact()

    def insert_many(self, ids: np.ndarray, dists: np.ndarray) -> None:
        """Insert a batch in order, compacting each time the buffer fills."""
        if self.full():
            b = self.bound()
            keep = dists <= b
            ids, dists = ids[keep], dists[keep]
        cap = 2 * self.k
        i, n = 0, len(ids)
        while i < n:
            take = min(n - i, cap - self.count)
            self.ids[self.count:self.count + take] = ids[i:i + take]
            self.dists[self.count:self.count + take] = dists[i:i + take]
            self.count += take
            i += take
            self._bound = None
            if self.count == cap:
                self._compact()

    def full(self) -> bool:
        """True once at least k candidates are held."""
        return self.count >= self.k

    def bound(self) -> float:
        """k-th smallest distance seen so far (infinity while fewer than k)."""
        if self.count < self.k:
            return np.inf
        if self._bound is None:
            self._bound = float(np.partition(self.dists[: self.count], self.k - 1)[self.k - 1])
        return self._bound

    def extract(self) -> tuple[np.ndarray, np.ndarray]:
        """The (at most k) best ids and squared distances, nearest first."""
        c = self.count
        sel = np.lexsort((self.ids[:c], self.dists[:c]))[: self.k]
        return self.ids[:c][sel].copy(), self.dists[:c][sel].copy()


def _add_range(tree, lo, hi, q, buf):
    dead = tree.dead[lo:hi]
    pts = tree.points[lo:hi]
    ids = tree.ids[lo:hi]
    if dead.any():
        pts, ids = pts[~dead], ids[~dead]
    if len(ids) == 0:
        return
    diff = pts - q
    buf.insert_many(ids, np.einsum("ij,ij->i", diff, diff))


# Box distances are summed in a different order than point distances, so a
# box holding a point exactly at the bound can round to just above it.
_PRUNE_SLACK = 1.0 + 1e-12


def _box_dist2(tree, idx, q):
    g = np.maximum(tree.box_lo[idx] - q, 0.0) + np.maximum(q - tree.box_hi[idx], 0.0)
    return float(g @ g)


def _box_far2(tree, idx, q):
    g = np.maximum(np.abs(q - tree.box_lo[idx]), np.abs(tree.box_hi[idx] - q))
    return float(g @ g)


def _visit(tree, idx, q, buf):
    if tree.is_leaf[idx]:
        _add_range(tree, tree.lo[idx], tree.hi[idx], q, buf)
        return
    if q[tree.dim[idx]] < tree.val[idx]:
        near, far = tree.left[idx], tree.right[idx]
    else:
        near, far = tree.right[idx], tree.left[idx]
    _visit(tree, near, q, buf)
    if not buf.full():
        _add_range(tree, tree.lo[far], tree.hi[far], q, buf)
        return
    b = buf.bound()
    if _box_dist2(tree, far, q) > b * _PRUNE_SLACK:
        return
    if _box_far2(tree, far, q) <= b:
        _add_range(tree, tree.lo[far], tree.hi[far], q, buf)
        return
    _visit(tree, far, q, buf)


def knn_single(tree: StaticTree, q, k: int, buf: KnnBuffer | None = None) -> KnnBuffer:
    """Feed the k nearest live tree points to ``q`` into ``buf`` (created if absent)."""
    if k < 1:
        raise ValueError("k must be positive")
    buf = KnnBuffer(k) if buf is None else buf
    if tree.root >= 0 and tree.live > 0:
        _visit(tree, tree.root, np.asarray(q, dtype=np.float64), buf)
    return buf


def knn_batch(tree: StaticTree, queries, k: int, bufs=None) -> list[KnnBuffer]:
    """:func:`knn_single` for every query, queries in parallel."""
    Q = as_points(queries, tree.d)
    if bufs is None:
        bufs = [KnnBuffer(k) for _ in range(len(Q))]
    if len(bufs) != len(Q):
        raise ValueError("need one buffer per query")

    def run(r):
        for i in range(r[0], r[1]):
            knn_single(tree, Q[i], k, bufs[i])

    parallel_for(run, [(lo, min(lo + 64, len(Q))) for lo in range(0, len(Q), 64)])
    return bufs
