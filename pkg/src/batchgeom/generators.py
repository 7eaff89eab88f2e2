"""Synthetic benchmark point sets.

All generators work over fixed-size index blocks, each with its own child
random stream, so the output depends only on ``(n, d, seed)`` and never on
how many workers produced it.
"""

from __future__ import annotations

import math

import numpy as np

from .core import parallel_for, spawn_rngs

__all__ = [
    "DISTRIBUTIONS",
    "gen_uniform_cube",
    "gen_in_sphere",
    "gen_on_sphere",
    "gen_on_cube",
    "generate",
    "SHELL_FRACTION",
]

_GEN_BLOCK = 1 << 15

# Shell thickness as a fraction of the diameter (sphere) or side length (cube).
SHELL_FRACTION = 0.1


def _check(n: int, d: int) -> None:
    if n <= 0:
        raise ValueError("n must be positive")
    if d < 2:
        raise ValueError("dimension must be at least 2")


def _blocked(n: int, d: int, seed: int, fill) -> np.ndarray:
    sizes = [min(_GEN_BLOCK, n - lo) for lo in range(0, n, _GEN_BLOCK)]
    rngs = spawn_rngs(seed, len(sizes))
    parts = parallel_for(lambda job: fill(job[0], job[1]), list(zip(rngs, sizes)))
    out = np.concatenate(parts, axis=0)
    assert out.shape == (n, d)
    return out


def gen_uniform_cube(n: int, d: int, seed: int = 0) -> np.ndarray:
    """``n`` points uniform in the cube ``[0, sqrt(n)]^d``."""
    _check(n, d)
    side = math.sqrt(n)
    return _blocked(n, d, seed, lambda rng, m: rng.uniform(0.0, side, size=(m, d)))


def gen_in_sphere(n: int, d: int, seed: int = 0) -> np.ndarray:
    """``n`` points uniform in the ball of radius ``sqrt(n)`` about the origin."""
    _check(n, d)
    radius = math.sqrt(n)

    def fill(rng, m):
        got = []
        have = 0
        while have < m:
            cand = rng.uniform(-radius, radius, size=(2 * (m - have) + 16, d))
            cand = cand[np.einsum("ij,ij->i", cand, cand) <= radius * radius]
            got.append(cand)
            have += len(cand)
        return np.concatenate(got)[:m]

    return _blocked(n, d, seed, fill)


def _directions(rng, m, d):
    g = rng.standard_normal(size=(m, d))
    norms = np.linalg.norm(g, axis=1)
    bad = norms == 0
    while bad.any():
        g[bad] = rng.standard_normal(size=(int(bad.sum()), d))
        norms = np.linalg.norm(g, axis=1)
        bad = norms == 0
    return g / norms[:, None]


def gen_on_sphere(n: int, d: int, seed: int = 0, shell: float = SHELL_FRACTION) -> np.ndarray:
    """Points in a spherical shell of outer radius ``R = sqrt(n)``.

    The shell is ``shell * diameter`` thick (default 0.1, so radii are
    uniform in ``[0.8 R, R]``); directions are uniform on the sphere.
    """
    _check(n, d)
    if not 0.0 <= shell <= 0.5:
        raise ValueError("shell must be a fraction of the diameter in [0, 0.5]")
    outer = math.sqrt(n)
    inner = outer - shell * 2.0 * outer

    def fill(rng, m):
        u = _directions(rng, m, d)
        r = rng.uniform(inner, outer, size=m)
        return u * r[:, None]

    return _blocked(n, d, seed, fill)


def gen_on_cube(n: int, d: int, seed: int = 0, shell: float = SHELL_FRACTION) -> np.ndarray:
    """Points near the surface of the cube ``[0, sqrt(n)]^d``.

    Each point picks a face uniformly and sits at a uniform inward offset in
    ``[0, shell * side]`` from it.
    """
    _check(n, d)
    if not 0.0 <= shell <= 0.5:
        raise ValueError("shell must be a fraction of the side in [0, 0.5]")
    side = math.sqrt(n)
    depth = shell * side

    def fill(rng, m):
        pts = rng.uniform(0.0, side, size=(m, d))
        axis = rng.integers(0, d, size=m)
        upper = rng.integers(0, 2, size=m).astype(bool)
        off = rng.uniform(0.0, depth, size=m)
        rows = np.arange(m)
        pts[rows, axis] = np.where(upper, side - off, off)
        return pts

    return _blocked(n, d, seed, fill)


DISTRIBUTIONS = {
    "U": gen_uniform_cube,
    "IS": gen_in_sphere,
    "OS": gen_on_sphere,
    "OC": gen_on_cube,
}


def generate(kind: str, n: int, d: int, seed: int = 0) -> np.ndarray:
    """Dispatch on the short distribution code (``U``, ``IS``, ``OS``, ``OC``)."""
    try:
        fn = DISTRIBUTIONS[kind.upper()]
    except KeyError:
        raise ValueError(f"unknown distribution {kind!r}") from None
    return fn(n, d, seed)
