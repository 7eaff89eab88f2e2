import math

import numpy as np
import pytest

from batchgeom.core import workers
from batchgeom.generators import (
    gen_in_sphere,
    gen_on_cube,
    gen_on_sphere,
    gen_uniform_cube,
    generate,
)


def test_uniform_cube_bounds():
    p = gen_uniform_cube(1, 2, seed=3)
    assert p.shape == (1, 2) and np.all((p >= 0) & (p <= 1))
    q = gen_uniform_cube(100, 3)
    assert np.all((q >= 0) & (q <= 10))


def test_uniform_cube_mean():
    p = gen_uniform_cube(10**4, 2, seed=1)
    assert np.all(np.abs(p.mean(axis=0) - 50.0) <= 0.05 * 50.0)


def test_in_sphere_membership_and_area_ratio():
    n = 10**4
    p = gen_in_sphere(n, 2, seed=2)
    r = np.linalg.norm(p, axis=1)
    assert np.all(r <= math.sqrt(n))
    frac = np.mean(r <= math.sqrt(n) / 2)
    assert abs(frac - 0.25) <= 0.03


@pytest.mark.parametrize("fn", [gen_uniform_cube, gen_in_sphere, gen_on_sphere, gen_on_cube])
def test_determinism(fn):
    assert np.array_equal(fn(5000, 3, seed=11), fn(5000, 3, seed=11))
    assert not np.array_equal(fn(5000, 3, seed=11), fn(5000, 3, seed=12))


def test_determinism_across_widths():
    with workers(1):
        a = gen_in_sphere(100000, 3, seed=4)
    with workers(4):
        b = gen_in_sphere(100000, 3, seed=4)
    assert np.array_equal(a, b)


def test_on_sphere_shell():
    n = 10**4
    r = np.linalg.norm(gen_on_sphere(n, 3, seed=5), axis=1)
    R = math.sqrt(n)
    # shell thickness is a tenth of the diameter
    assert np.all((r >= 0.8 * R - 1e-9) & (r <= R + 1e-9))
    thin = np.linalg.norm(gen_on_sphere(n, 3, seed=5, shell=0.05), axis=1)
    assert np.all((thin >= 0.9 * R - 1e-9) & (thin <= R + 1e-9))


def test_on_sphere_direction_uniformity():
    p = gen_on_sphere(10**4, 3, seed=6)
    octant = ((p > 0) * np.array([1, 2, 4])).sum(axis=1)
    counts = np.bincount(octant, minlength=8)
    expected = counts.sum() / 8
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    # 1% critical value of chi-square with 7 degrees of freedom
    assert chi2 < 18.48


def test_on_cube_near_a_face():
    n = 10**4
    p = gen_on_cube(n, 3, seed=7)
    side = math.sqrt(n)
    assert np.all((p >= 0) & (p <= side))
    gap = np.minimum(p, side - p).min(axis=1)
    assert np.all(gap <= 0.1 * side + 1e-9)


def test_generate_dispatch_and_errors():
    assert generate("os", 10, 2).shape == (10, 2)
    with pytest.raises(ValueError):
        generate("XX", 10, 2)
    with pytest.raises(ValueError):
        gen_uniform_cube(0, 2)
    with pytest.raises(ValueError):
        gen_uniform_cube(10, 1)
