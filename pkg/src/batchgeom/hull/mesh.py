"""Facet mesh shared by the incremental hull algorithms (2D and 3D).

A facet is a directed edge in 2D and an outward-oriented triangle in 3D.
Facets live in an append-only slab: a dead facet is never reused within a
run.  Every point still outside the hull sits in the bucket of exactly one
live facet that it sees (``seed[p]``); points known to be inside have
``seed[p] == -1``.

Neighbour slot ``i`` of a facet is the facet across ridge ``i``: in 3D the
edge ``(v[i], v[i+1])``, in 2D the vertex ``v[i]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import DegenerateInputError, ReservationTable, as_points, orient_tolerance

__all__ = ["HullMesh", "HullConsistencyError", "HullStats", "init_simplex", "mesh_problems"]


class HullConsistencyError(RuntimeError):
    """The mesh was asked to do something that only a caller bug can cause."""


@dataclass
class HullStats:
    """Work counters for one hull run."""

    rounds: int = 0
    attempted: int = 0
    inserted: int = 0
    failed: int = 0
    points_touched: int = 0
    facets_touched: int = 0
    batches: list = field(default_factory=list)


def _ridge(verts: tuple, i: int):
    if len(verts) == 2:
        return verts[i]
    a, b = verts[i], verts[(i + 1) % 3]
    return (a, b) if a < b else (b, a)


class HullMesh:
    """Convex hull under construction.

    Attributes are public for inspection and testing; mutate them only
    through the methods below.
    """

    def __init__(self, points: np.ndarray, active: np.ndarray | None = None):
        self.points = as_points(points)
        self.dim = self.points.shape[1]
        if self.dim not in (2, 3):
            raise ValueError("hulls are supported in 2 and 3 dimensions")
        n = len(self.points)
        self.active_ids = np.arange(n, dtype=np.int64) if active is None else np.asarray(active, dtype=np.int64)
        sub = self.points[self.active_ids] if len(self.active_ids) else self.points[:0]
        scale = float(np.max(np.abs(sub))) if len(sub) else 1.0
        self.scale = scale
        self.tol = orient_tolerance(scale, self.dim)
        self.verts: list[tuple] = []
        self.nbrs: list[list[int]] = []
        self.normals: list[tuple] = []
        self.offsets: list[float] = []
        self.norm_len: list[float] = []
        self.alive: list[bool] = []
        self.buckets: list[np.ndarray | None] = []
        self.far: list[int] = []
        self.live_count = 0
        self.seed = np.full(n, -1, dtype=np.int64)
        self.interior: np.ndarray | None = None
        self.reservations = ReservationTable()
        self.hull_vertices: set[int] = set()
        self.stats = HullStats()
        self._coords = None

    # -- geometry -------------------------------------------------------

    def coords(self, p: int) -> tuple:
        if self._coords is None:
            self._coords = self.points.tolist()
        return self._coords[p]

    def _plane(self, verts: tuple) -> tuple[tuple, float]:
        P = self.points
        if self.dim == 3:
            a, b, c = P[verts[0]], P[verts[1]], P[verts[2]]
            u = b - a
            v = c - a
            n = (
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            )
            off = n[0] * a[0] + n[1] * a[1] + n[2] * a[2]
        else:
            a, b = P[verts[0]], P[verts[1]]
            n = (b[1] - a[1], a[0] - b[0])
            off = n[0] * a[0] + n[1] * a[1]
        return tuple(float(x) for x in n), float(off)

    def side(self, f: int, p: int) -> float:
        """Signed orientation determinant of point ``p`` against facet ``f``."""
        n = self.normals[f]
        x = self.coords(p)
        if self.dim == 3:
            return n[0] * x[0] + n[1] * x[1] + n[2] * x[2] - self.offsets[f]
        return n[0] * x[0] + n[1] * x[1] - self.offsets[f]

    def sees(self, p: int, f: int) -> bool:
        return self.side(f, p) > self.tol

    # -- slab -------------------------------------------------------------

    def _reserve_slots(self, count: int) -> int:
        base = len(self.verts)
        self.verts.extend([()] * count)
        self.nbrs.extend([None] * count)
        self.normals.extend([()] * count)
        self.offsets.extend([0.0] * count)
        self.norm_len.extend([0.0] * count)
        self.alive.extend([False] * count)
        self.buckets.extend([None] * count)
        self.far.extend([-1] * count)
        self.reservations.grow(base + count)
        return base

    def _put_facet(self, fid: int, verts: tuple) -> None:
        n, off = self._plane(verts)
        self.verts[fid] = verts
        self.nbrs[fid] = [-1] * self.dim
        self.normals[fid] = n
        self.offsets[fid] = off
        self.norm_len[fid] = float(np.sqrt(sum(x * x for x in n))) or 1.0
        self.alive[fid] = True

    # -- point assignment -------------------------------------------------

    def _assign(self, ids: np.ndarray, fids: list[int]) -> None:
        """Put each point in the bucket of the new facet it is furthest above.

        Points above none of ``fids`` are marked inside (seed -1).
        """
        if len(ids) == 0 or not fids:
            if len(ids):
                self.seed[ids] = -1
            return
        N = np.array([self.normals[f] for f in fids])
        off = np.array([self.offsets[f] for f in fids])
        det = self.points[ids] @ N.T - off
        vis = det > self.tol
        hit = vis.any(axis=1)
        self.seed[ids[~hit]] = -1
        if not hit.any():
            return
        ids = ids[hit]
        det = det[hit]
        if len(fids) == 1:
            choice = np.zeros(len(ids), dtype=np.int64)
        else:
            lens = np.array([self.norm_len[f] for f in fids])
            dist = np.where(vis[hit], det / lens, -np.inf)
            choice = np.argmax(dist, axis=1)
        fid_arr = np.asarray(fids, dtype=np.int64)
        self.seed[ids] = fid_arr[choice]
        order = np.argsort(choice, kind="stable")
        choice_sorted = choice[order]
        cuts = np.flatnonzero(np.diff(choice_sorted)) + 1
        starts = np.concatenate(([0], cuts))
        ends = np.concatenate((cuts, [len(order)]))
        for s, e in zip(starts, ends):
            k = int(choice_sorted[s])
            rows = order[s:e]
            f = fids[k]
            self.buckets[f] = ids[rows]
            self.far[f] = int(ids[rows[int(np.argmax(det[rows, k]))]])

    # -- queries ----------------------------------------------------------

    def live_facets(self) -> list[int]:
        return [f for f, a in enumerate(self.alive) if a]

    def facet_array(self) -> np.ndarray:
        live = self.live_facets()
        return np.array([self.verts[f] for f in live], dtype=np.int64).reshape(len(live), self.dim)

    def vertices(self) -> np.ndarray:
        """Sorted ids of the points that are vertices of the live facets."""
        fa = self.facet_array()
        return np.unique(fa) if fa.size else np.zeros(0, dtype=np.int64)

    def visible_ids(self) -> np.ndarray:
        return np.flatnonzero(self.seed >= 0)

    def has_visible(self) -> bool:
        return bool((self.seed >= 0).any())

    def cycle(self) -> list[int]:
        """Counterclockwise vertex cycle of a 2D mesh, starting at its smallest id."""
        if self.dim != 2:
            raise ValueError("cycle() is only defined for 2D meshes")
        live = self.live_facets()
        start = min(live, key=lambda f: self.verts[f][0])
        out = []
        f = start
        while True:
            out.append(self.verts[f][0])
            f = self.nbrs[f][1]
            if f == start:
                break
            if len(out) > len(live):
                raise HullConsistencyError("2D facet chain does not close")
        return out

    # -- visibility -------------------------------------------------------

    def visible_facets(self, q: int) -> tuple[list[int], list[tuple[int, int]]]:
        """Visible region of ``q`` by BFS from its seed facet, and its horizon.

        The horizon is returned as ``(facet, slot)`` pairs where ``facet`` is
        visible and its neighbour in ``slot`` is not.
        """
        f0 = int(self.seed[q])
        if f0 < 0 or not self.alive[f0] or not self.sees(q, f0):
            raise HullConsistencyError(f"point {q} has no live visible seed facet")
        seen = {f0: True}
        region = [f0]
        horizon = []
        i = 0
        while i < len(region):
            f = region[i]
            i += 1
            for slot, g in enumerate(self.nbrs[f]):
                vis = seen.get(g)
                if vis is None:
                    vis = self.sees(q, g)
                    seen[g] = vis
                    if vis:
                        region.append(g)
                if not vis:
                    horizon.append((f, slot))
        self.stats.facets_touched += len(seen)
        return region, horizon

    # -- mutation ---------------------------------------------------------

    def process_point(self, q: int, region=None, horizon=None, base: int | None = None) -> list[int]:
        """Add visible point ``q``: replace its visible facets by a cone to ``q``.

        Returns the ids of the new facets.  ``base`` is a preallocated slab
        offset with room for one facet per horizon ridge.
        """
        if region is None:
            region, horizon = self.visible_facets(q)
        if base is None:
            base = self._reserve_slots(len(horizon))
        new = []
        open_ridges: dict = {}
        for j, (f, slot) in enumerate(horizon):
            fid = base + j
            fv = self.verts[f]
            if self.dim == 3:
                verts = (fv[slot], fv[(slot + 1) % 3], q)
                hslot = 0
            elif slot == 0:
                verts, hslot = (fv[0], q), 0
            else:
                verts, hslot = (q, fv[1]), 1
            self._put_facet(fid, verts)
            g = self.nbrs[f][slot]
            self.nbrs[fid][hslot] = g
            gn = self.nbrs[g]
            gn[gn.index(f)] = fid
            for i in range(self.dim):
                if i == hslot:
                    continue
                key = _ridge(verts, i)
                other = open_ridges.pop(key, None)
                if other is None:
                    open_ridges[key] = (fid, i)
                else:
                    ofid, oi = other
                    self.nbrs[fid][i] = ofid
                    self.nbrs[ofid][oi] = fid
            new.append(fid)
        if open_ridges:
            raise HullConsistencyError("horizon of point %d is not a closed cycle" % q)
        gathered = []
        for f in region:
            self.alive[f] = False
            b = self.buckets[f]
            if b is not None and len(b):
                gathered.append(b)
            self.buckets[f] = None
        self.live_count += len(new) - len(region)
        pts = np.concatenate(gathered) if gathered else np.zeros(0, dtype=np.int64)
        pts = pts[pts != q]
        self.seed[q] = -1
        self.hull_vertices.add(int(q))
        self.stats.points_touched += len(pts) + 1
        self.stats.facets_touched += len(new)
        self._assign(pts, new)
        return new

    def reserve(self, batch: list[int]):
        """Two-phase reservation over the batch.

        Each point write-mins its id into every facet of its visible region
        and every facet across its horizon; a point succeeds when it holds
        all of them.  Returns ``(point, region, horizon)`` for the winners.
        """
        from ..core import parallel_for

        found = parallel_for(self.visible_facets, batch)
        claims = []
        for q, (region, horizon) in zip(batch, found):
            touched = list(region)
            touched.extend(self.nbrs[f][s] for f, s in horizon)
            claims.append(touched)
        table = self.reservations

        def claim(k):
            q = batch[k]
            for f in claims[k]:
                table.write_min(f, q)

        parallel_for(claim, range(len(batch)))

        def check(k):
            q = batch[k]
            return all(table.values[f] == q for f in claims[k])

        ok = parallel_for(check, range(len(batch)))
        for touched in claims:
            table.clear(touched)
        winners = [(q, r, h) for q, good, (r, h) in zip(batch, ok, found) if good]
        return winners


def _pick_simplex(P: np.ndarray, ids: np.ndarray, tol: float, dim: int) -> list[int]:
    X = P[ids]
    order = np.lexsort(X.T[::-1])
    i0 = int(order[0])
    d0 = np.einsum("ij,ij->i", X - X[i0], X - X[i0])
    i1 = int(np.argmax(d0))
    if d0[i1] == 0.0:
        raise DegenerateInputError("all points coincide", extremes=[int(ids[i0])])
    u = X[i1] - X[i0]
    W = X - X[i0]
    if dim == 2:
        cr = u[0] * W[:, 1] - u[1] * W[:, 0]
        i2 = int(np.argmax(np.abs(cr)))
        if abs(cr[i2]) <= tol:
            raise DegenerateInputError("all points are collinear", extremes=[int(ids[i0]), int(ids[i1])])
        return [int(ids[i0]), int(ids[i1]), int(ids[i2])]
    cr = np.cross(u, W)
    c2 = np.einsum("ij,ij->i", cr, cr)
    i2 = int(np.argmax(c2))
    scale2 = tol ** (2.0 / 3.0)
    if np.sqrt(c2[i2]) <= scale2:
        raise DegenerateInputError("all points are collinear", extremes=[int(ids[i0]), int(ids[i1])])
    nrm = np.cross(u, X[i2] - X[i0])
    det = W @ nrm
    i3 = int(np.argmax(np.abs(det)))
    if abs(det[i3]) <= tol:
        raise DegenerateInputError("all points are coplanar", extremes=[int(ids[i0]), int(ids[i1])])
    return [int(ids[i0]), int(ids[i1]), int(ids[i2]), int(ids[i3])]


def init_simplex(points, ids=None) -> HullMesh:
    """Start a hull from a full-dimensional simplex of extreme points.

    The simplex centroid becomes the fixed interior reference point; every
    other point is dropped (inside) or bucketed on one facet it sees.
    """
    mesh = HullMesh(points, ids)
    P, d = mesh.points, mesh.dim
    ids = mesh.active_ids
    if len(ids) < d + 1:
        raise DegenerateInputError(f"need at least {d + 1} points for a {d}D hull")
    corners = _pick_simplex(P, ids, mesh.tol, d)
    mesh.interior = P[corners].mean(axis=0)
    if d == 3:
        faces = [(corners[0], corners[1], corners[2]), (corners[0], corners[3], corners[1]),
                 (corners[1], corners[3], corners[2]), (corners[0], corners[2], corners[3])]
    else:
        faces = [(corners[0], corners[1]), (corners[1], corners[2]), (corners[2], corners[0])]
    base = mesh._reserve_slots(len(faces))
    c = mesh.interior
    for j, verts in enumerate(faces):
        n, off = mesh._plane(verts)
        if float(np.dot(n, c)) - off > 0:
            verts = (verts[1], verts[0]) + verts[2:]
        mesh._put_facet(base + j, verts)
    fids = list(range(base, base + len(faces)))
    owner = {}
    for f in fids:
        v = mesh.verts[f]
        for i in range(d):
            owner.setdefault(_ridge(v, i), []).append((f, i))
    for pair in owner.values():
        (f, i), (g, k) = pair
        mesh.nbrs[f][i] = g
        mesh.nbrs[g][k] = f
    mesh.live_count = len(fids)
    mesh.hull_vertices.update(corners)
    rest = ids[~np.isin(ids, corners)]
    mesh._assign(rest, fids)
    return mesh



def mesh_problems(mesh: HullMesh, all_points: bool = False) -> list[str]:
    """Invariant violations of a mesh (empty list when it is consistent).

    Checks symmetric neighbour links across shared ridges, outward
    orientation against the interior point, the single-bucket rule, Euler
    counts in 3D and, with ``all_points``, that no active point lies
    outside any live facet.
    """
    out = []
    live = mesh.live_facets()
    d = mesh.dim
    for f in live:
        v = mesh.verts[f]
        for i, g in enumerate(mesh.nbrs[f]):
            if g < 0 or not mesh.alive[g]:
                out.append(f"facet {f} has a dead neighbour across slot {i}")
                continue
            gv = mesh.verts[g]
            slots = [k for k in range(d) if mesh.nbrs[g][k] == f]
            if not slots or _ridge(gv, slots[0]) != _ridge(v, i):
                out.append(f"facets {f} and {g} disagree on their shared ridge")
        n, off = mesh.normals[f], mesh.offsets[f]
        if float(np.dot(n, mesh.interior)) - off > mesh.tol:
            out.append(f"facet {f} faces the interior point")
    if d == 3 and live:
        V = len(np.unique(mesh.facet_array()))
        F = len(live)
        E = 3 * F // 2
        if 3 * F != 2 * E:
            out.append("2E != 3F")
        if V - E + F != 2:
            out.append(f"Euler characteristic is {V - E + F}")
    owner = np.full(len(mesh.seed), -1, dtype=np.int64)
    for f in live:
        b = mesh.buckets[f]
        if b is None:
            continue
        if np.any(owner[b] >= 0):
            out.append(f"facet {f} shares bucket points with another facet")
        owner[b] = f
        for p in b.tolist():
            if mesh.seed[p] != f or not mesh.sees(p, f):
                out.append(f"point {p} is in the bucket of facet {f} but does not see it")
    stray = np.flatnonzero((mesh.seed >= 0) & (owner < 0))
    if len(stray):
        out.append(f"{len(stray)} visible points sit in no bucket")
    if all_points and live:
        N = np.array([mesh.normals[f] for f in live])
        O = np.array([mesh.offsets[f] for f in live])
        ids = mesh.active_ids
        for lo in range(0, len(ids), 1 << 14):
            blk = ids[lo:lo + (1 << 14)]
            if np.any(mesh.points[blk] @ N.T - O > mesh.tol):
                out.append("some input point lies outside the hull")
                break
    return out
