"""Divide-and-conquer hulls and pseudohull culling of interior points."""

from __future__ import annotations

import numpy as np

from ..core import DegenerateInputError, as_points, num_workers, orient_tolerance, parallel_for
from .incremental import DEFAULT_ROUND_MULTIPLIER, hull_quickhull, serial_quickhull
from .mesh import HullMesh, _pick_simplex

__all__ = ["hull_divide_conquer", "pseudohull_cull", "hull_pseudo_quickhull", "DEFAULT_CULL_THRESHOLD"]

DEFAULT_CULL_THRESHOLD = 128


def _rotate_to_lexmin(P: np.ndarray, cycle: list[int]) -> list[int]:
    k = min(range(len(cycle)), key=lambda i: (P[cycle[i], 0], P[cycle[i], 1]))
    return cycle[k:] + cycle[:k]


def _chunk_vertices(P: np.ndarray, ids: np.ndarray) -> np.ndarray:
    d = P.shape[1]
    if len(ids) <= d + 1:
        return ids
    try:
        return serial_quickhull(P, ids).vertices()
    except DegenerateInputError:
        # a flat chunk cannot discard anything safely
        return ids


def hull_divide_conquer(points, num_proc: int | None = None, c: int = DEFAULT_ROUND_MULTIPLIER):
    """Hull of the union of chunk hulls.

    The input is cut into ``c * num_proc`` contiguous chunks whose hulls are
    computed serially (chunks in parallel); the surviving vertices then go
    through the reservation-based quickhull.  Returns the mesh in 3D and
    the counterclockwise cycle (from the lexicographic minimum) in 2D.
    """
    P = as_points(points)
    num_proc = num_workers() if num_proc is None else int(num_proc)
    if num_proc < 1 or c < 1:
        raise ValueError("num_proc and c must be positive")
    n, d = P.shape
    if n < d + 1:
        raise DegenerateInputError(f"need at least {d + 1} points for a {d}D hull")
    chunks = min(c * num_proc, n)
    bounds = np.linspace(0, n, chunks + 1).astype(np.int64)
    parts = parallel_for(
        lambda k: _chunk_vertices(P, np.arange(bounds[k], bounds[k + 1], dtype=np.int64)),
        range(chunks),
    )
    union = np.unique(np.concatenate(parts))
    mesh = hull_quickhull(P, c=c, ids=union)
    if d == 2:
        return _rotate_to_lexmin(P, mesh.cycle())
    return mesh


def _outward(P, verts, opposite):
    """Plane of ``verts`` oriented so that ``opposite`` is on the negative side."""
    if len(verts) == 3:
        a, b, cc = P[verts[0]], P[verts[1]], P[verts[2]]
        n = np.cross(b - a, cc - a)
    else:
        a, b = P[verts[0]], P[verts[1]]
        n = np.array([b[1] - a[1], a[0] - b[0]])
    off = float(n @ a)
    if float(n @ P[opposite]) - off > 0:
        verts = (verts[1], verts[0]) + tuple(verts[2:])
        n, off = -n, -off
    return verts, n, off


def _grow(P, face, tol, t):
    """Replace one pseudohull face by the cone through its furthest point.

    ``face`` is ``(verts, normal, offset, bucket)``.  Returns the new apex
    (or ``None`` when the bucket is below threshold) and the child faces.
    """
    verts, n, off, bucket = face
    if len(bucket) < t:
        return None, []
    det = P[bucket] @ n - off
    apex = int(bucket[int(np.argmax(det))])
    rest = bucket[bucket != apex]
    k = len(verts)
    children = []
    for i in range(k):
        if k == 3:
            cv = (verts[i], verts[(i + 1) % 3], apex)
            opposite = verts[(i + 2) % 3]
        else:
            cv = (verts[0], apex) if i == 0 else (apex, verts[1])
            opposite = verts[1 - i]
        children.append(_outward(P, cv, opposite))
    N = np.array([ch[1] for ch in children])
    O = np.array([ch[2] for ch in children])
    D = P[rest] @ N.T - O
    vis = D > tol
    lens = np.linalg.norm(N, axis=1)
    lens[lens == 0] = 1.0
    choice = np.argmax(np.where(vis, D / lens, -np.inf), axis=1)
    hit = vis.any(axis=1)
    out = []
    for i, (cv, cn, co) in enumerate(children):
        out.append((cv, cn, co, rest[hit & (choice == i)]))
    return apex, out


def pseudohull_cull(points, t: int = DEFAULT_CULL_THRESHOLD) -> np.ndarray:
    """Sorted ids of the points not strictly inside a pseudohull.

    Faces of an initial simplex are grown recursively through their
    furthest bucket point until their buckets hold fewer than ``t`` points.
    The survivors always contain every hull vertex.
    """
    if t < 1:
        raise ValueError("threshold must be positive")
    P = as_points(points)
    n, d = P.shape
    if d not in (2, 3):
        raise ValueError("pseudohull culling is supported in 2 and 3 dimensions")
    if n < d + 1:
        raise DegenerateInputError(f"need at least {d + 1} points for a {d}D hull")
    tol = orient_tolerance(float(np.max(np.abs(P))), d)
    ids = np.arange(n, dtype=np.int64)
    corners = _pick_simplex(P, ids, tol, d)
    rest = ids[~np.isin(ids, corners)]
    faces = []
    for i in range(d + 1):
        verts = tuple(corners[j] for j in range(d + 1) if j != i)
        faces.append(_outward(P, verts, corners[i]))
    N = np.array([f[1] for f in faces])
    O = np.array([f[2] for f in faces])
    D = P[rest] @ N.T - O
    vis = D > tol
    lens = np.linalg.norm(N, axis=1)
    choice = np.argmax(np.where(vis, D / lens, -np.inf), axis=1)
    hit = vis.any(axis=1)
    work = [(v, nn, o, rest[hit & (choice == i)]) for i, (v, nn, o) in enumerate(faces)]
    apexes = list(corners)
    leaves = []
    # breadth-first waves stand in for the recursion, so depth never matters
    while work:
        grown = parallel_for(lambda f: _grow(P, f, tol, t), work)
        nxt = []
        for face, (apex, kids) in zip(work, grown):
            if apex is None:
                leaves.append(face[3])
            else:
                apexes.append(apex)
                nxt.extend(kids)
        work = nxt
    keep = np.concatenate([np.asarray(apexes, dtype=np.int64)] + leaves)
    return np.unique(keep)


def hull_pseudo_quickhull(points, t: int = DEFAULT_CULL_THRESHOLD, c: int = DEFAULT_ROUND_MULTIPLIER) -> HullMesh:
    """Cull with a pseudohull, then run the reservation-based quickhull on the survivors."""
    P = as_points(points)
    return hull_quickhull(P, c=c, ids=pseudohull_cull(P, t))
