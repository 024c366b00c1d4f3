import numpy as np
import pytest

from setnewton.cone import Cone, leq
from setnewton.minimal import (MinimalDecomposition, PartitionBlowUp, decompose, minimal_indices,
                               partition_tuples, weakly_minimal_indices)
from setnewton.problem import make_example, quadratic_family

R2 = Cone.nonnegative_orthant(2)


def brute_minimal(V, K):
    keep = []
    for i, v in enumerate(V):
        if not any(leq(K, V[j], v) and not np.array_equal(V[j], v) for j in range(len(V))):
            keep.append(i)
    return keep


def test_small_cloud():
    V = [[0, 0], [1, 1], [0, 1], [1, 0], [-1, 2]]
    assert minimal_indices(V, R2) == [0, 4]


def test_singletons():
    assert minimal_indices([[3.0, 4.0]], R2) == [0]
    assert weakly_minimal_indices([[3.0, 4.0]], R2) == [0]


def test_weak_versus_strict():
    V = [[0, 0], [0, 1]]
    assert weakly_minimal_indices(V, R2) == [0, 1]
    assert minimal_indices(V, R2) == [0]


def test_empty_rejected():
    with pytest.raises(ValueError):
        minimal_indices(np.zeros((0, 2)), R2)


def test_matches_definition_and_wmin_on_random_clouds():
    rng = np.random.default_rng(0)
    cones = [Cone.nonnegative_orthant(2), Cone.nonnegative_orthant(3), Cone([[5, -1], [-9, 10]], [1, 1])]
    for _ in range(60):
        K = cones[rng.integers(3)]
        V = rng.integers(-5, 6, size=(int(rng.integers(1, 40)), K.m)).astype(float)
        mins = minimal_indices(V, K)
        assert mins == brute_minimal(V, K)
        assert set(mins) <= set(weakly_minimal_indices(V, K))
        for v in V:
            assert any(leq(K, V[i], v) for i in mins)


def test_wmin_equals_min_without_shared_coordinates():
    rng = np.random.default_rng(1)
    for _ in range(50):
        cols = [rng.permutation(40)[:15] for _ in range(2)]
        V = np.column_stack(cols).astype(float)
        assert minimal_indices(V, R2) == weakly_minimal_indices(V, R2)


def _family(vals):
    vals = np.array(vals, dtype=float)
    p, m = vals.shape
    return quadratic_family("fixed", vals, np.zeros((p, m, 1)), np.zeros((p, m, 1, 1)))


def test_duplicate_class():
    P = _family([[0, 0], [0, 0], [1, 1]])
    dec = decompose(P, R2, [0.0])
    assert dec.w == 1 and dec.classes[0][1] == (0, 1) and dec.partition_cardinality == 2
    assert list(partition_tuples(dec)) == [(0,), (1,)]


def test_all_equal_values():
    P = _family([[2, 3]] * 5)
    dec = decompose(P, R2, [0.0])
    assert dec.w == 1 and dec.classes[0][1] == (0, 1, 2, 3, 4)


def _dec(classes):
    return MinimalDecomposition(np.zeros(1), np.zeros((1, 1)), (), (),
                                tuple((np.zeros(1), c) for c in classes))


def test_partition_order_and_cap():
    assert list(partition_tuples(_dec([(1,), (3, 4)]))) == [(1, 3), (1, 4)]
    assert list(partition_tuples(_dec([(0,), (2,), (5,)]))) == [(0, 2, 5)]
    assert list(partition_tuples(_dec([(1, 2), (3, 4)]))) == [(1, 3), (1, 4), (2, 3), (2, 4)]
    with pytest.raises(PartitionBlowUp) as info:
        partition_tuples(_dec([(1, 2), (3, 4)]), cap=3)
    assert info.value.cardinality == 4


def test_ex5_5_start_has_single_minimal_value():
    # f^1 (offset (-1,-1)) is componentwise below every other grid value at (-5,-5)
    P, K = make_example("ex5_5")
    dec = decompose(P, K, [-5.0, -5.0])
    assert dec.min_indices == (0,) and dec.w == 1 and dec.partition_cardinality == 1
    assert np.all(dec.values[0] <= dec.values.min(axis=0))


def test_ex5_1_minimal_arc_at_shifted_point():
    P, K = make_example("ex5_1")
    dec = decompose(P, K, [2.5102, 0.0])
    assert dec.min_indices == (10, 11, 12, 13, 14, 15)
    assert dec.regular
