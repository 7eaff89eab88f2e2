"""Smallest enclosing ball.

Two families are provided.  The orthant-scan family repeatedly scans the
input for the furthest outside point in every orthant around the current
center and re-solves on the small candidate set; the sampling variant
first runs that loop over short random segments to get a good start.  The
Welzl family is the randomized incremental algorithm, serial or with
exponentially growing prefixes scanned in parallel, optionally with
move-to-front and pivoting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import as_points, block_ranges, make_rng, parallel_for, parallel_max_by

__all__ = [
    "EPS_BALL",
    "DEFAULT_SEGMENT",
    "PARALLEL_CUTOFF",
    "Ball",
    "ScanResult",
    "SebStats",
    "ball_from_support",
    "miniball",
    "orthant_scan",
    "seb_update",
    "seb_orthant",
    "seb_sampling",
    "welzl_seq",
    "welzl_parallel",
]

# Relative radius slack for "outside the ball".
EPS_BALL = 1e-9
DEFAULT_SEGMENT = 1024
PARALLEL_CUTOFF = 500_000

_SCAN_BLOCK = 1 << 15


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float
    support: tuple = ()

    def outside(self, X: np.ndarray, eps: float = EPS_BALL) -> np.ndarray:
        """Mask of rows of ``X`` strictly outside the ball (with relative slack)."""
        diff = X - self.center
        d2 = np.einsum("ij,ij->i", diff, diff)
        lim = self.radius * (1.0 + eps)
        return d2 > lim * lim

    def encloses(self, X: np.ndarray, eps: float = EPS_BALL) -> bool:
        for lo, hi in block_ranges(len(X), _SCAN_BLOCK):
            if self.outside(X[lo:hi], eps).any():
                return False
        return True


@dataclass(frozen=True)
class ScanResult:
    has_outlier: bool
    extrema: tuple = ()


@dataclass
class SebStats:
    """Counters filled in by the orthant-scan family."""

    sample_scanned: int = 0
    rounds: int = 0
    updates: int = 0
    radii: list = field(default_factory=list)


# --------------------------------------------------------------------------
# balls from boundary points
# --------------------------------------------------------------------------


def _circumball(S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Center of the smallest ball with every row of ``S`` on its boundary.

    Returns the center and the indices of rows that were actually used
    (affinely dependent rows are dropped).
    """
    s0 = S[0]
    keep = [0]
    basis: list[np.ndarray] = []
    scale = max(float(np.max(np.abs(S - s0))), 1e-300)
    for i in range(1, len(S)):
        v = S[i] - s0
        r = v.copy()
        for q in basis:
            r -= (r @ q) * q
        nr = float(np.linalg.norm(r))
        if nr > 1e-10 * scale:
            basis.append(r / nr)
            keep.append(i)
    if len(keep) == 1:
        return s0.copy(), np.array(keep)
    A = S[keep[1:]] - s0
    rhs = 0.5 * np.einsum("ij,ij->i", A, A)
    lam = np.linalg.solve(A @ A.T, rhs)
    return s0 + lam @ A, np.array(keep)


def ball_from_support(S, ids=None) -> Ball:
    """Smallest ball with all given points (at most d+1) on its boundary.

    Affinely dependent points are dropped from the system; the radius is
    still taken over every given point so the ball encloses them all.
    """
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    if S.shape[0] == 0:
        raise ValueError("support set must not be empty")
    if S.shape[0] > S.shape[1] + 1:
        raise ValueError("support set has more than d+1 points")
    ids = tuple(range(len(S))) if ids is None else tuple(int(i) for i in ids)
    center, used = _circumball(S)
    diff = S - center
    radius = float(np.sqrt(np.max(np.einsum("ij,ij->i", diff, diff))))
    return Ball(center, radius, tuple(ids[i] for i in used))


# --------------------------------------------------------------------------
# Welzl
# --------------------------------------------------------------------------


def _first_outside_serial(X, order, ball, lo, hi):
    """Position of the first point in ``order[lo:hi]`` outside ``ball``, or -1."""
    step = 256
    while lo < hi:
        top = min(hi, lo + step)
        mask = ball.outside(X[order[lo:top]])
        if mask.any():
            return lo + int(np.argmax(mask))
        lo = top
        step = min(step * 2, _SCAN_BLOCK)
    return -1


class _Welzl:
    """Randomized incremental miniball over a mutable order of point ids."""

    def __init__(self, X, order, mtf=False, pivot=False, finder=None):
        self.X = X
        self.order = order
        self.mtf = mtf
        self.pivot = pivot
        self.find = finder or (lambda ball, lo, hi: _first_outside_serial(self.X, self.order, ball, lo, hi))
        self.outliers = 0

    def _move(self, src, dst):
        # shift order[dst:src] right by one and put order[src] at dst
        if src != dst:
            p = self.order[src]
            self.order[dst + 1:src + 1] = self.order[dst:src].copy()
            self.order[dst] = p

    def solve(self, end: int, R: tuple) -> Ball:
        """Miniball of the first ``end`` ids of the order with ``R`` on the boundary."""
        d = self.X.shape[1]
        if R:
            ball = ball_from_support(self.X[list(R)], R)
        else:
            if end == 0:
                raise ValueError("empty point set")
            first = int(self.order[0])
            ball = Ball(self.X[first].copy(), 0.0, (first,))
        if len(R) == d + 1:
            return ball
        i = 0 if R else 1
        while True:
            i = self.find(ball, i, end)
            if i < 0:
                return ball
            self.outliers += 1
            if self.pivot and not R:
                ids = self.order[i:end]
                c = ball.center
                j = i + parallel_max_by(ids, lambda blk: np.einsum("ij,ij->i", self.X[blk] - c, self.X[blk] - c))
                self._move(j, i)
            p = int(self.order[i])
            ball = self.solve(i, R + (p,))
            if self.mtf:
                self._move(i, 0)
            i += 1


def _permuted(n, seed):
    return make_rng(seed).permutation(n).astype(np.int64)


def welzl_seq(points, mtf: bool = False, pivot: bool = False, seed=0) -> Ball:
    """Exact miniball by Welzl's randomized incremental algorithm.

    With ``mtf`` an outlier is moved to the front of the order after it is
    handled; with ``pivot`` the furthest remaining point is handled instead
    of the first outlier found at the top level.
    """
    X = as_points(points)
    if len(X) == 0:
        raise ValueError("empty point set")
    return _Welzl(X, _permuted(len(X), seed), mtf, pivot).solve(len(X), ())


def welzl_parallel(points, mtf: bool = False, pivot: bool = False, seed=0,
                   cutoff: int = PARALLEL_CUTOFF) -> Ball:
    """Welzl's algorithm over prefixes of doubling size.

    Prefixes shorter than ``cutoff`` are scanned serially exactly as in
    :func:`welzl_seq`; longer ones are split into fixed blocks searched in
    parallel for the earliest outlier.
    """
    X = as_points(points)
    n = len(X)
    if n == 0:
        raise ValueError("empty point set")
    order = _permuted(n, seed)

    def find(ball, lo, hi):
        if hi <= cutoff:
            return _first_outside_serial(X, order, ball, lo, hi)
        head = min(cutoff, hi)
        if lo < head:
            k = _first_outside_serial(X, order, ball, lo, head)
            if k >= 0:
                return k
            lo = head
        size = max(head, 1)
        while lo < hi:
            top = min(hi, 2 * size)

            def first(r, lo=lo):
                a, b = r
                mask = ball.outside(X[order[lo + a:lo + b]])
                return lo + a + int(np.argmax(mask)) if mask.any() else -1

            hits = [k for k in parallel_for(first, block_ranges(top - lo, _SCAN_BLOCK)) if k >= 0]
            if hits:
                return min(hits)
            lo, size = top, top
        return -1

    return _Welzl(X, order, mtf, pivot, find).solve(n, ())


def miniball(points) -> Ball:
    """Exact miniball of a small point set in its given order (no shuffling)."""
    X = as_points(points)
    return _Welzl(X, np.arange(len(X), dtype=np.int64), mtf=True).solve(len(X), ())


# --------------------------------------------------------------------------
# orthant scan
# --------------------------------------------------------------------------


def _scan_block(X, ids, center, lim2):
    diff = X[ids] - center
    d2 = np.einsum("ij,ij->i", diff, diff)
    out = d2 > lim2
    if not out.any():
        return None
    d = X.shape[1]
    codes = ((diff[out] < 0) * (1 << np.arange(d))).sum(axis=1)
    oid = ids[out]
    od = d2[out]
    # within an orthant: larger distance first, then lower id
    sel = np.lexsort((oid, -od, codes))
    codes, oid, od = codes[sel], oid[sel], od[sel]
    firsts = np.concatenate(([True], codes[1:] != codes[:-1]))
    return codes[firsts], oid[firsts], od[firsts]


def orthant_scan(points, ball: Ball, ids=None, eps: float = EPS_BALL) -> ScanResult:
    """Furthest outside point of every orthant around ``ball.center``.

    A zero coordinate difference counts as positive.  Blocks are scanned in
    parallel and merged in block order, ties going to the lower id, so the
    result does not depend on the pool width.  ``extrema`` lists point ids
    ordered by orthant.
    """
    X = as_points(points)
    ids = np.arange(len(X), dtype=np.int64) if ids is None else np.asarray(ids, dtype=np.int64)
    lim = ball.radius * (1.0 + eps)
    parts = parallel_for(
        lambda r: _scan_block(X, ids[r[0]:r[1]], ball.center, lim * lim),
        block_ranges(len(ids), _SCAN_BLOCK),
    )
    best: dict[int, tuple[float, int]] = {}
    for part in parts:
        if part is None:
            continue
        for code, pid, dist in zip(part[0].tolist(), part[1].tolist(), part[2].tolist()):
            cur = best.get(code)
            if cur is None or dist > cur[0] or (dist == cur[0] and pid < cur[1]):
                best[code] = (dist, pid)
    extrema = tuple(best[k][1] for k in sorted(best))
    return ScanResult(bool(extrema), extrema)


def seb_update(points, ball: Ball, scan: ScanResult) -> Ball:
    """Miniball of the current support together with the scan's extrema."""
    X = as_points(points)
    cand = list(dict.fromkeys(list(ball.support) + list(scan.extrema)))
    sub = miniball(X[cand])
    return Ball(sub.center, sub.radius, tuple(cand[i] for i in sub.support))


def _initial_ball(X, ids) -> Ball:
    head = [int(i) for i in ids[: X.shape[1] + 1]]
    sub = miniball(X[head])
    return Ball(sub.center, sub.radius, tuple(head[i] for i in sub.support))


def _orthant_loop(X, ball, stats):
    while True:
        stats.rounds += 1
        scan = orthant_scan(X, ball)
        if not scan.has_outlier:
            return ball
        ball = seb_update(X, ball, scan)
        stats.updates += 1
        stats.radii.append(ball.radius)


def seb_orthant(points, stats: SebStats | None = None) -> Ball:
    """Orthant-scan miniball, starting from the first d+1 points."""
    X = as_points(points)
    if len(X) == 0:
        raise ValueError("empty point set")
    stats = SebStats() if stats is None else stats
    ball = _initial_ball(X, np.arange(len(X)))
    stats.radii.append(ball.radius)
    return _orthant_loop(X, ball, stats)


def seb_sampling(points, c: int = DEFAULT_SEGMENT, seed=0, stats: SebStats | None = None) -> Ball:
    """Orthant-scan miniball preceded by a sampling phase.

    Segments of ``c`` points from a random permutation are scanned in turn,
    updating the ball, until a segment has no outside point; the full scan
    loop then finishes from that ball.  ``stats.sample_scanned`` records
    how many points the sampling phase looked at.
    """
    if c < 1:
        raise ValueError("segment size must be positive")
    X = as_points(points)
    n = len(X)
    if n == 0:
        raise ValueError("empty point set")
    stats = SebStats() if stats is None else stats
    perm = _permuted(n, seed)
    ball = _initial_ball(X, perm)
    stats.radii.append(ball.radius)
    scanned = 0
    while scanned < n:
        seg = perm[scanned:scanned + c]
        scanned += len(seg)
        scan = orthant_scan(X, ball, seg)
        if not scan.has_outlier:
            break
        ball = seb_update(X, ball, scan)
        stats.updates += 1
        stats.radii.append(ball.radius)
    stats.sample_scanned = scanned
    return _orthant_loop(X, ball, stats)
