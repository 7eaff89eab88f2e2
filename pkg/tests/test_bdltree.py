import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from batchgeom.bdltree import BDLTree, bdl_build, bdl_erase, bdl_insert, bdl_knn
from batchgeom.core import workers
from batchgeom.generators import gen_uniform_cube
from batchgeom.kdtree import SPATIAL_MEDIAN

from oracles import knn_linear


def shape(T):
    """(F, buffer count, [tree build sizes or None])"""
    return T.F, len(T.buffer_ids), [None if t is None else t.size for t in T.statics]


def check_invariants(T):
    assert len(T.buffer_ids) < T.X
    for i, t in enumerate(T.statics):
        assert (T.F >> i & 1) == (t is not None)
        if t is not None:
            assert t.size == T.capacity(i)
            assert 2 * t.live > t.size
    pts, ids = T.live_points()
    assert len(ids) == len(T) == len(set(ids.tolist()))


@pytest.mark.parametrize("X", [4, 1024])
def test_build_examples(X):
    assert shape(bdl_build(np.zeros((0, 2)), X=X)) == (0, 0, [])
    assert shape(bdl_build(gen_uniform_cube(X, 2), X=X)) == (1, 0, [X])
    assert shape(bdl_build(gen_uniform_cube(3 * X + 1, 2), X=X)) == (3, 1, [X, 2 * X])


@pytest.mark.parametrize("X", [4, 1024])
def test_insert_scenario(X):
    P = gen_uniform_cube(4 * X + 1, 3, seed=1)
    T = bdl_build(P[:X], X=X)
    assert shape(T) == (1, 0, [X])
    bdl_insert(T, P[X:2 * X + 1])
    assert shape(T) == (2, 1, [None, 2 * X])
    bdl_insert(T, P[2 * X + 1:3 * X + 2])
    assert shape(T) == (3, 2, [X, 2 * X])
    bdl_insert(T, P[3 * X + 2:4 * X + 1])
    assert shape(T) == (4, 1, [None, None, 4 * X])
    assert sorted(T.live_points()[1].tolist()) == list(range(4 * X + 1))


def test_erase_examples():
    X = 8
    P = gen_uniform_cube(2 * X, 2, seed=2)
    T = bdl_build(P, X=X)
    before = shape(T)
    assert bdl_erase(T, P + 1000) == 0
    assert shape(T) == before
    # tree 1 holds all 2X points; losing X+1 of them sends X-1 back
    assert shape(T) == (2, 0, [None, 2 * X])
    assert bdl_erase(T, P[: X + 1]) == X + 1
    check_invariants(T)
    assert len(T) == X - 1 and shape(T) == (0, X - 1, [])


def test_knn_examples():
    T = bdl_build([[1.0, 2.0]], X=4)
    ids, d2 = bdl_knn(T, [[0.0, 0.0], [5.0, 5.0]], 1)
    assert ids.tolist() == [[0], [0]]
    ids, d2 = bdl_knn(T, [[0.0, 0.0]], 3)
    assert ids.tolist() == [[0, -1, -1]] and np.isinf(d2[0, 1:]).all()


def test_knn_matches_linear_over_batches():
    P = gen_uniform_cube(10**4, 3, seed=3)
    Q = gen_uniform_cube(100, 3, seed=4)
    T = BDLTree(3, X=64)
    for lo in range(0, len(P), 1300):
        bdl_insert(T, P[lo:lo + 1300])
    ids, d2 = bdl_knn(T, Q, 5)
    for j, q in enumerate(Q):
        assert (ids[j].tolist(), d2[j].tolist()) == knn_linear(P, np.arange(len(P)), q, 5)
    # batching does not change answers
    one = bdl_build(P, X=64)
    assert np.array_equal(bdl_knn(one, Q, 5)[0], ids)


def test_knn_width_independence():
    P = gen_uniform_cube(5000, 5, seed=5)
    with workers(1):
        a = bdl_knn(bdl_build(P, X=128), P[:200], 4)[0]
    with workers(4):
        b = bdl_knn(bdl_build(P, X=128), P[:200], 4)[0]
    assert np.array_equal(a, b)


op = st.one_of(
    st.tuples(st.just("insert"), st.integers(0, 40)),
    st.tuples(st.just("erase"), st.integers(0, 40)),
    st.tuples(st.just("knn"), st.integers(1, 6)),
)


@settings(max_examples=80)
@given(st.lists(op, max_size=30), st.integers(0, 10**6), st.sampled_from(["object", SPATIAL_MEDIAN]))
def test_model_equivalence(script, seed, heur):
    rng = np.random.default_rng(seed)
    universe = rng.integers(0, 6, size=(25, 2)).astype(float)
    T = BDLTree(2, X=4, heuristic=heur)
    model = {}
    for kind, m in script:
        if kind == "insert":
            pts = universe[rng.integers(0, len(universe), size=m)]
            for i, p in zip(bdl_insert(T, pts).tolist(), pts):
                model[i] = p
        elif kind == "erase":
            pts = universe[rng.integers(0, len(universe), size=m)]
            keys = {tuple(p) for p in pts.tolist()}
            dead = [i for i, p in model.items() if tuple(p.tolist()) in keys]
            assert bdl_erase(T, pts) == len(dead)
            for i in dead:
                del model[i]
            check_invariants(T)
        else:
            q = rng.random((3, 2)) * 6
            ids, d2 = bdl_knn(T, q, m)
            mids = np.array(sorted(model), dtype=np.int64)
            mp = np.array([model[i] for i in mids]).reshape(-1, 2)
            for j in range(3):
                ref_ids, ref_d = knn_linear(mp, mids, q[j], m)
                got = ids[j][: len(ref_ids)]
                assert got.tolist() == ref_ids and d2[j][: len(ref_d)].tolist() == ref_d
        assert sorted(T.live_points()[1].tolist()) == sorted(model)
