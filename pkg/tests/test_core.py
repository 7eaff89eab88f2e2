import random
import threading

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from batchgeom.core import (
    INF_ID,
    DegenerateInputError,
    MinCell,
    ReservationTable,
    as_points,
    block_ranges,
    fork_join,
    make_rng,
    num_workers,
    orient3d,
    parallel_for,
    parallel_max_by,
    parallel_pack,
    priority_write_min,
    random_permutation,
    spawn_rngs,
    workers,
)

O, X, Y = (0, 0, 0), (1, 0, 0), (0, 1, 0)


def test_orient3d_examples():
    assert orient3d(O, X, Y, (0, 0, 1)) == 1
    assert orient3d(O, X, Y, (5, 5, 0)) == 0
    assert orient3d(O, X, Y, (0, 0, -1)) == -1


def test_orient3d_rejects_wrong_dimension():
    with pytest.raises(ValueError):
        orient3d((0, 0), (1, 0), (0, 1), (1, 1))


def test_orient3d_tolerance_scales_with_magnitude():
    big = 1e6
    a, b, c = (0, 0, 0), (big, 0, 0), (0, big, 0)
    # a lift far below the tolerance 1e-12 * big**3 reads as coplanar
    assert orient3d(a, b, c, (1, 1, 1e-9)) == 0
    assert orient3d(a, b, c, (1, 1, 1.0)) == 1


coord = st.floats(-100, 100, allow_nan=False)
pt3 = st.tuples(coord, coord, coord)


@given(pt3, pt3, pt3, pt3)
def test_orient3d_antisymmetric(a, b, c, p):
    s, t = orient3d(a, b, c, p), orient3d(a, c, b, p)
    if s != 0 and t != 0:
        assert s == -t


def test_as_points_validation():
    assert as_points([[1, 2], [3, 4]]).dtype == np.float64
    with pytest.raises(ValueError):
        as_points([[1, np.nan]])
    with pytest.raises(ValueError):
        as_points([[1, np.inf]])
    with pytest.raises(ValueError):
        as_points([1, 2, 3])
    with pytest.raises(ValueError):
        as_points([[1, 2]], dim=3)


def test_random_permutation_examples():
    assert random_permutation(0).tolist() == []
    assert random_permutation(1).tolist() == [0]
    p = random_permutation(4, 7)
    assert sorted(p.tolist()) == [0, 1, 2, 3]
    assert p.tolist() == random_permutation(4, 7).tolist()
    with pytest.raises(ValueError):
        random_permutation(-1)


@given(st.integers(0, 500), st.integers(0, 2**32))
def test_random_permutation_is_bijection(n, seed):
    assert sorted(random_permutation(n, seed).tolist()) == list(range(n))


def test_rng_streams_are_reproducible():
    a = make_rng(5).random(10)
    b = make_rng(5).random(10)
    assert np.array_equal(a, b)
    s1 = [g.random(3) for g in spawn_rngs(9, 4)]
    s2 = [g.random(3) for g in spawn_rngs(9, 4)]
    assert all(np.array_equal(x, y) for x, y in zip(s1, s2))
    assert not np.array_equal(s1[0], s1[1])


def test_parallel_pack_examples():
    assert parallel_pack([], lambda x: True) == []
    assert parallel_pack([3, 1, 4, 1, 5], lambda x: x % 2 == 1) == [3, 1, 1, 5]


def test_parallel_pack_matches_serial_filter_on_large_input():
    x = np.random.default_rng(0).integers(-1000, 1000, size=10**5)
    with workers(4):
        got = parallel_pack(x, lambda blk: blk > 0)
    assert np.array_equal(got, x[x > 0])


@given(st.lists(st.integers(-50, 50)), st.integers(1, 7))
def test_parallel_pack_property(xs, m):
    assert parallel_pack(xs, lambda v: v % m == 0) == [v for v in xs if v % m == 0]


def test_parallel_max_by_examples():
    assert parallel_max_by([5], lambda v: v) == 0
    assert parallel_max_by([1, 9, 9, 2], lambda v: v) == 1
    with pytest.raises(ValueError):
        parallel_max_by([], lambda v: v)


def test_parallel_max_by_matches_argmax():
    x = np.random.default_rng(1).random(10**6)
    with workers(3):
        assert parallel_max_by(x, lambda blk: blk) == int(np.argmax(x))
    # ties across blocks resolve to the first occurrence
    y = np.zeros(100000)
    y[[20000, 70000]] = 1.0
    assert parallel_max_by(y, lambda blk: blk) == 20000


def test_priority_write_min_examples():
    c = MinCell()
    assert c.value == INF_ID
    priority_write_min(c, 5)
    assert c.value == 5
    c = MinCell(3)
    priority_write_min(c, 5)
    assert c.value == 3


def test_priority_write_min_concurrent_stress():
    for trial in range(1000):
        cell = MinCell()
        vals = list(range(64))
        random.Random(trial).shuffle(vals)
        if trial % 50 == 0:
            ts = [threading.Thread(target=priority_write_min, args=(cell, v)) for v in vals]
            for t in ts:
                t.start()
            for t in ts:
                t.join()
        else:
            with workers(8):
                parallel_for(lambda v: priority_write_min(cell, v), vals)
        assert cell.value == 0


@given(st.lists(st.integers(0, 10**6), min_size=1))
def test_priority_write_min_order_independent(vals):
    a, b = MinCell(), MinCell()
    for v in vals:
        a.write_min(v)
    for v in reversed(vals):
        b.write_min(v)
    assert a.value == b.value == min(vals)


def test_reservation_table():
    t = ReservationTable()
    t.grow(4)
    t.write_min(2, 7)
    t.write_min(2, 3)
    t.write_min(2, 9)
    assert t.values == [INF_ID, INF_ID, 3, INF_ID]
    t.clear([2])
    assert t.values[2] == INF_ID


def test_fork_join_and_nesting():
    with workers(2):
        assert num_workers() == 2
        inner = lambda: fork_join(lambda: 1, lambda: 2)
        assert fork_join(inner, inner, lambda: 3) == [[1, 2], [1, 2], 3]


def test_block_ranges_do_not_depend_on_width():
    with workers(1):
        a = block_ranges(100000)
    with workers(5):
        b = block_ranges(100000)
    assert a == b and a[0][0] == 0 and a[-1][1] == 100000


def test_degenerate_error_carries_extremes():
    e = DegenerateInputError("flat", extremes=[3, 9])
    assert isinstance(e, ValueError) and e.extremes == [3, 9]
