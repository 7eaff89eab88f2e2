"""Reservation-based parallel incremental hulls.

Each round takes a batch of visible points, lets them compete for their
facet neighbourhoods with priority writes, applies the winners (their
neighbourhoods are disjoint, so they commute) and packs away points that
are no longer visible.  The batch comes either from a random order
(randomized incremental) or from the furthest points of the fullest
facets (quickhull).
"""

from __future__ import annotations

import heapq

import numpy as np

from ..core import make_rng, num_workers, parallel_for, parallel_pack
from .mesh import HullConsistencyError, HullMesh, init_simplex, mesh_problems

__all__ = [
    "DEFAULT_ROUND_MULTIPLIER",
    "FALLBACK_FACETS",
    "visible_facets",
    "reserve_round",
    "process_point",
    "single_point_fallback",
    "hull3d_randinc",
    "hull3d_quickhull",
    "hull_quickhull",
    "hull_randinc",
    "serial_quickhull",
]

DEFAULT_ROUND_MULTIPLIER = 4
# Below this many live facets a round inserts one point without reserving.
FALLBACK_FACETS = 64


def visible_facets(q: int, mesh: HullMesh) -> set[int]:
    """Connected set of live facets that point ``q`` sees."""
    region, _ = mesh.visible_facets(q)
    return set(region)


def reserve_round(batch, mesh: HullMesh) -> list[int]:
    """Ids of the batch points that win every facet they need this round."""
    return [q for q, _, _ in mesh.reserve(list(batch))]


def process_point(q: int, mesh: HullMesh) -> list[int]:
    """Insert one visible point; returns the new facet ids."""
    return mesh.process_point(q)


def single_point_fallback(mesh: HullMesh) -> int | None:
    """Furthest point of the largest bucket (lowest facet id on ties).

    ``None`` means every bucket is empty and the hull is finished.
    """
    best_f, best_size = -1, 0
    for f, alive in enumerate(mesh.alive):
        if alive:
            b = mesh.buckets[f]
            size = 0 if b is None else len(b)
            if size > best_size:
                best_f, best_size = f, size
    return None if best_f < 0 else mesh.far[best_f]


class _FacetQueue:
    """Live facets with nonempty buckets, largest bucket first."""

    def __init__(self, mesh: HullMesh):
        self.mesh = mesh
        self.heap: list[tuple[int, int]] = []
        self.push(mesh.live_facets())

    def push(self, fids) -> None:
        for f in fids:
            b = self.mesh.buckets[f]
            if b is not None and len(b):
                heapq.heappush(self.heap, (-len(b), f))

    def take(self, count: int) -> list[int]:
        """Furthest points of up to ``count`` of the fullest live facets."""
        out = []
        held = []
        alive = self.mesh.alive
        while self.heap and len(out) < count:
            item = heapq.heappop(self.heap)
            if not alive[item[1]]:
                continue
            held.append(item)
            out.append(self.mesh.far[item[1]])
        for item in held:
            heapq.heappush(self.heap, item)
        return out

    def empty(self) -> bool:
        alive = self.mesh.alive
        while self.heap and not alive[self.heap[0][1]]:
            heapq.heappop(self.heap)
        return not self.heap


def _apply(mesh: HullMesh, winners) -> list[int]:
    sizes = [len(h) for _, _, h in winners]
    base = mesh._reserve_slots(sum(sizes))
    offsets = np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(int) + base if winners else []
    jobs = [(q, r, h, int(o)) for (q, r, h), o in zip(winners, offsets)]
    made = parallel_for(lambda j: mesh.process_point(j[0], j[1], j[2], j[3]), jobs)
    return [f for fs in made for f in fs]


def _audit(mesh: HullMesh) -> None:
    problems = mesh_problems(mesh)
    if problems:
        raise HullConsistencyError("; ".join(problems[:5]))


def _run(mesh: HullMesh, batch_size: int, order: np.ndarray | None, reserve: bool = True,
         debug: bool = False) -> HullMesh:
    """Round loop.  ``order`` selects randomized-incremental batching.

    With ``debug`` the full invariant suite runs after every round.
    """
    queue = _FacetQueue(mesh)
    stats = mesh.stats
    active = order
    while True:
        if active is not None:
            active = parallel_pack(active, lambda blk: mesh.seed[blk] >= 0)
            if len(active) == 0:
                break
        elif queue.empty():
            break
        stats.rounds += 1
        if not reserve or mesh.live_count < FALLBACK_FACETS:
            q = queue.take(1)
            if not q:
                break
            stats.attempted += 1
            stats.inserted += 1
            stats.batches.append(1)
            queue.push(mesh.process_point(q[0]))
            if debug:
                _audit(mesh)
            continue
        if active is not None:
            batch = [int(x) for x in active[:batch_size]]
        else:
            batch = queue.take(batch_size)
        winners = mesh.reserve(batch)
        if not winners:
            raise HullConsistencyError("no point won its reservation")
        stats.attempted += len(batch)
        stats.inserted += len(winners)
        stats.failed += len(batch) - len(winners)
        stats.batches.append(len(batch))
        queue.push(_apply(mesh, winners))
        if debug:
            _audit(mesh)
    return mesh


def _batch_size(c: int) -> int:
    if c < 1:
        raise ValueError("round multiplier must be positive")
    return c * num_workers()


def hull_randinc(points, c: int = DEFAULT_ROUND_MULTIPLIER, seed=0, ids=None,
                 debug: bool = False) -> HullMesh:
    """Parallel randomized incremental hull (2D or 3D)."""
    batch = _batch_size(c)
    mesh = init_simplex(points, ids)
    rng = make_rng(seed)
    perm = mesh.active_ids[rng.permutation(len(mesh.active_ids))]
    return _run(mesh, batch, perm, debug=debug)


def hull_quickhull(points, c: int = DEFAULT_ROUND_MULTIPLIER, ids=None,
                   debug: bool = False) -> HullMesh:
    """Parallel reservation-based quickhull (2D or 3D)."""
    batch = _batch_size(c)
    mesh = init_simplex(points, ids)
    return _run(mesh, batch, None, debug=debug)


def serial_quickhull(points, ids=None, debug: bool = False) -> HullMesh:
    """Quickhull without reservations: one furthest point per round."""
    mesh = init_simplex(points, ids)
    return _run(mesh, 1, None, reserve=False, debug=debug)


def _as3d(points) -> np.ndarray:
    P = np.asarray(points, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != 3:
        raise ValueError("expected 3-dimensional points")
    return P


def hull3d_randinc(points, rng=0, c: int = DEFAULT_ROUND_MULTIPLIER, debug: bool = False) -> HullMesh:
    return hull_randinc(_as3d(points), c=c, seed=rng, debug=debug)


def hull3d_quickhull(points, c: int = DEFAULT_ROUND_MULTIPLIER, ids=None, debug: bool = False) -> HullMesh:
    return hull_quickhull(_as3d(points), c=c, ids=ids, debug=debug)
