import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from seqbalance.core import Subject
from seqbalance.errors import EmptyGroup, OddCount, SizeMismatch, SpaceMismatch, TooLarge
from seqbalance.matching import (
    discrepancy,
    discrepancy_bruteforce,
    discrepancy_cost,
    min_weight_pairing,
    pairing_bruteforce,
)

TOL = 1e-9


def pts(n, d):
    return arrays(np.float64, (n, d), elements=st.floats(0.0, 1.0, allow_nan=False))


def test_one_dimensional_example():
    m = discrepancy([0.1, 0.4], [0.7, 0.9])
    assert m.cost == pytest.approx(1.1, abs=TOL)
    assert m.pairs == ((0, 0), (1, 1))


def test_coincident_groups_cost_zero():
    A = [Subject((0.3, 0.2)), Subject((0.5, 0.5))]
    assert discrepancy(A, list(reversed(A))).cost == 0.0


def test_unit_diagonal():
    assert discrepancy([[0.0, 0.0]], [[1.0, 1.0]]).cost == pytest.approx(math.sqrt(2), abs=TOL)


def test_group_errors():
    with pytest.raises(SizeMismatch):
        discrepancy([0.1, 0.2], [0.3])
    with pytest.raises(EmptyGroup):
        discrepancy(np.zeros((0, 1)), np.zeros((0, 1)))
    with pytest.raises(SpaceMismatch):
        discrepancy([[0.1, 0.2]], [[0.1, 0.2, 0.3]])
    with pytest.raises(TooLarge):
        discrepancy_bruteforce(np.zeros((9, 1)), np.zeros((9, 1)))


def test_pairing_errors():
    with pytest.raises(OddCount):
        min_weight_pairing(np.zeros((3, 2)))
    with pytest.raises(TooLarge):
        pairing_bruteforce(np.zeros((12, 2)))


@given(st.integers(1, 6).flatmap(lambda n: st.tuples(pts(n, 2), pts(n, 2))))
def test_matches_bruteforce(groups):
    A, B = groups
    assert discrepancy_cost(A, B) == pytest.approx(discrepancy_bruteforce(A, B).cost, abs=TOL)


@given(st.integers(1, 8).flatmap(lambda n: st.tuples(pts(n, 1), pts(n, 1))))
def test_sorted_order_is_optimal_in_one_dimension(groups):
    A, B = groups
    sorted_cost = discrepancy(A, B, method="sorted").cost
    assert sorted_cost == pytest.approx(discrepancy(A, B, method="assignment").cost, abs=TOL)
    assert sorted_cost == pytest.approx(float(np.abs(np.sort(A[:, 0]) - np.sort(B[:, 0])).sum()), abs=TOL)


@given(st.integers(1, 5).flatmap(lambda n: pts(2 * n, 2)))
def test_pairing_matches_bruteforce(X):
    assert min_weight_pairing(X).cost == pytest.approx(pairing_bruteforce(X).cost, abs=TOL)


@given(st.sampled_from([4, 6]).flatmap(lambda n: pts(n, 2)))
def test_pairing_never_exceeds_any_split(X):
    n = X.shape[0]
    best = min_weight_pairing(X).cost
    for ctrl in itertools.combinations(range(n), n // 2):
        rest = [i for i in range(n) if i not in ctrl]
        assert best <= discrepancy_cost(X[list(ctrl)], X[rest]) + TOL


@given(st.integers(1, 6).flatmap(lambda n: st.tuples(pts(n, 3), pts(n, 3))), st.sampled_from([0.25, 0.5]))
def test_scale_equivariance(groups, s):
    A, B = groups
    assert discrepancy_cost(s * A, s * B) == pytest.approx(s * discrepancy_cost(A, B), abs=TOL)


@given(st.integers(1, 6).flatmap(lambda n: st.tuples(pts(n, 2), pts(n, 2))))
def test_symmetric_in_groups(groups):
    A, B = groups
    assert discrepancy_cost(A, B) == pytest.approx(discrepancy_cost(B, A), abs=TOL)


def test_pairing_is_a_perfect_matching(rng):
    X = rng.random((60, 2))
    m = min_weight_pairing(X)
    flat = sorted(i for p in m.pairs for i in p)
    assert flat == list(range(60)) and m.exact


def test_pairing_with_duplicates(rng):
    base = rng.random((7, 3))
    X = np.vstack([base, base, rng.random((2, 3))])
    m = min_weight_pairing(X)
    assert sorted(i for p in m.pairs for i in p) == list(range(16))
    assert m.cost <= pairing_bruteforce(X[[0, 7, 1, 8, 14, 15]]).cost + TOL


def test_sparse_path_matches_dense(rng, monkeypatch):
    import seqbalance.matching as mm

    X = rng.random((260, 2))
    sparse = mm.min_weight_pairing(X).cost
    monkeypatch.setattr(mm, "_DENSE_BLOSSOM_MAX", 10_000)
    assert mm.min_weight_pairing(X).cost == pytest.approx(sparse, abs=1e-8)


def test_guard_and_greedy_fallback(rng):
    X = rng.random((40, 2))
    with pytest.raises(TooLarge):
        min_weight_pairing(X, max_nodes=20)
    approx = min_weight_pairing(X, max_nodes=20, approximate=True)
    assert not approx.exact
    assert approx.cost >= min_weight_pairing(X).cost - TOL
