"""Slow, obviously-correct reference implementations used only by the tests.

Nothing here imports the package under test.
"""

from __future__ import annotations

import itertools

import numpy as np


def hull3d_vertices_brute(P, rel_tol=1e-12):
    """Vertices of the 3D hull by enumerating every supporting triple (O(n^4))."""
    P = np.asarray(P, dtype=np.float64)
    n = len(P)
    scale = float(np.max(np.abs(P)))
    tol = rel_tol * scale**3
    triples = np.array(list(itertools.combinations(range(n), 3)), dtype=np.int64)
    verts = set()
    for lo in range(0, len(triples), 20000):
        T = triples[lo:lo + 20000]
        a, b, c = P[T[:, 0]], P[T[:, 1]], P[T[:, 2]]
        nrm = np.cross(b - a, c - a)
        ok = np.linalg.norm(nrm, axis=1) > 1e-9 * scale**2
        T, a, nrm = T[ok], a[ok], nrm[ok]
        s = P @ nrm.T - np.einsum("ij,ij->i", nrm, a)[None, :]
        support = np.all(s <= tol, axis=0) | np.all(s >= -tol, axis=0)
        verts.update(T[support].ravel().tolist())
    return verts


def monotone_chain(P):
    """Counterclockwise hull from the lexicographic minimum, collinear points dropped."""
    P = np.asarray(P, dtype=np.float64)
    idx = sorted(range(len(P)), key=lambda i: (P[i, 0], P[i, 1]))

    def cross(o, a, b):
        return (P[a, 0] - P[o, 0]) * (P[b, 1] - P[o, 1]) - (P[a, 1] - P[o, 1]) * (P[b, 0] - P[o, 0])

    lower, upper = [], []
    for i in idx:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], i) <= 0:
            lower.pop()
        lower.append(i)
    for i in reversed(idx):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], i) <= 0:
            upper.pop()
        upper.append(i)
    return lower[:-1] + upper[:-1]


def mesh_report(P, facets):
    """Independent structural audit of a closed triangle mesh.

    Returns a dict with V, E, F, whether every directed edge is matched by
    its reverse exactly once, and the largest signed distance of any input
    point above any facet plane (relative to the coordinate scale cubed).
    """
    P = np.asarray(P, dtype=np.float64)
    F = np.asarray(facets, dtype=np.int64)
    directed = {}
    for a, b, c in F.tolist():
        for u, v in ((a, b), (b, c), (c, a)):
            directed[(u, v)] = directed.get((u, v), 0) + 1
    manifold = all(cnt == 1 and directed.get((v, u), 0) == 1 for (u, v), cnt in directed.items())
    E = len(directed) // 2
    V = len(np.unique(F))
    a, b, c = P[F[:, 0]], P[F[:, 1]], P[F[:, 2]]
    nrm = np.cross(b - a, c - a)
    off = np.einsum("ij,ij->i", nrm, a)
    worst = -np.inf
    for lo in range(0, len(P), 4096):
        s = P[lo:lo + 4096] @ nrm.T - off
        worst = max(worst, float(s.max()))
    scale = float(np.max(np.abs(P)))
    return {"V": V, "E": E, "F": len(F), "manifold": manifold, "outside": worst / scale**3}


def miniball_brute(P, eps=1e-9):
    """Radius of the smallest enclosing ball by enumerating support subsets (size <= d+1)."""
    P = np.asarray(P, dtype=np.float64)
    n, d = P.shape
    best = np.inf
    scale = max(float(np.max(np.abs(P))), 1.0)
    for k in range(1, min(n, d + 1) + 1):
        subs = np.array(list(itertools.combinations(range(n), k)), dtype=np.int64)
        S = P[subs]
        s0 = S[:, 0, :]
        if k == 1:
            centers = s0
        else:
            A = S[:, 1:, :] - s0[:, None, :]
            G = A @ A.transpose(0, 2, 1)
            rhs = 0.5 * np.einsum("mij,mij->mi", A, A)
            det = np.linalg.det(G)
            good = np.abs(det) > 1e-12 * np.maximum(np.abs(G).max(axis=(1, 2)), 1e-300) ** (k - 1)
            if not good.any():
                continue
            A, G, rhs, s0 = A[good], G[good], rhs[good], s0[good]
            lam = np.linalg.solve(G, rhs[..., None])[..., 0]
            centers = s0 + np.einsum("mi,mij->mj", lam, A)
        r = np.linalg.norm(centers - s0, axis=1)
        dist = np.linalg.norm(P[None, :, :] - centers[:, None, :], axis=2)
        ok = np.all(dist <= r[:, None] * (1 + eps) + 1e-12 * scale, axis=1)
        if ok.any():
            best = min(best, float(r[ok].min()))
    return best


def knn_linear(P, ids, q, k):
    """k nearest by squared distance, ties broken by id."""
    P = np.asarray(P, dtype=np.float64)
    ids = np.asarray(ids, dtype=np.int64)
    d2 = np.einsum("ij,ij->i", P - q, P - q)
    sel = np.lexsort((ids, d2))[:k]
    return ids[sel].tolist(), d2[sel].tolist()
