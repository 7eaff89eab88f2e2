"""Recursive parallel quickhull in the plane."""

from __future__ import annotations

import numpy as np

from ..core import DegenerateInputError, as_points, fork_join, orient_tolerance

__all__ = ["hull2d_quickhull"]

# Subproblems smaller than this are solved without forking.
_SERIAL_CUTOFF = 2048


def _cross(P, a, b, ids):
    pa = P[a]
    pb = P[b]
    Q = P[ids]
    return (pb[0] - pa[0]) * (Q[:, 1] - pa[1]) - (pb[1] - pa[1]) * (Q[:, 0] - pa[0])


def _chain(P, a, b, ids, tol):
    """Hull vertices strictly right of the directed chord a->b, in order from a to b."""
    if len(ids) == 0:
        return []
    cr = -_cross(P, a, b, ids)
    k = int(np.argmax(cr))
    if cr[k] <= tol:
        return []
    c = int(ids[k])
    out = ids[cr > tol]
    left = out[-_cross(P, a, c, out) > tol]
    right = out[-_cross(P, c, b, out) > tol]
    if len(out) < _SERIAL_CUTOFF:
        lo = _chain(P, a, c, left, tol)
        hi = _chain(P, c, b, right, tol)
    else:
        lo, hi = fork_join(lambda: _chain(P, a, c, left, tol), lambda: _chain(P, c, b, right, tol))
    return lo + [c] + hi


def hull2d_quickhull(points) -> list[int]:
    """Counterclockwise hull cycle of 2D points, starting at the lexicographic minimum.

    Points on hull edges (within tolerance) are not reported as vertices.
    Raises :class:`DegenerateInputError` carrying the two extreme ids when
    every point is collinear.
    """
    P = as_points(points, 2)
    n = len(P)
    if n < 3:
        raise ValueError("a planar hull needs at least 3 points")
    order = np.lexsort((P[:, 1], P[:, 0]))
    a, b = int(order[0]), int(order[-1])
    tol = orient_tolerance(float(np.max(np.abs(P))), 2)
    ids = np.arange(n, dtype=np.int64)
    cr = _cross(P, a, b, ids)
    if not np.any(np.abs(cr) > tol):
        raise DegenerateInputError("all points are collinear", extremes=[a, b])
    lower = ids[cr < -tol]
    upper = ids[cr > tol]
    below, above = fork_join(lambda: _chain(P, a, b, lower, tol), lambda: _chain(P, b, a, upper, tol))
    return [a] + below + [b] + above
