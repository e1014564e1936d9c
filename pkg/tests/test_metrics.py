import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from softflow.assignment import assignment_cost, linear_sum_assignment
from softflow.metrics import (
    EMD_EXACT_LIMIT,
    chamfer,
    distance_matrix,
    emd,
    nearest_manifold_gap,
    one_nna,
    one_nna_from_matrix,
)


def brute_chamfer(x, y):
    ab = sum(min(float(np.sum((p - q) ** 2)) for q in y) for p in x) / len(x)
    ba = sum(min(float(np.sum((q - p) ** 2)) for p in x) for q in y) / len(y)
    return ab + ba


def brute_emd(x, y):
    n = len(x)
    return min(sum(math.dist(x[i], y[p[i]]) for i in range(n)) / n for p in itertools.permutations(range(n)))


# -- assignment -------------------------------------------------------------------------
def test_assignment_matches_exhaustive_on_8x8():
    rng = np.random.default_rng(0)
    perms = np.array(list(itertools.permutations(range(8))))
    for _ in range(200):
        cost = rng.uniform(0, 10, size=(8, 8))
        best = cost[np.arange(8), perms].sum(1).min()
        rows, cols = linear_sum_assignment(cost)
        assert sorted(cols) == list(range(8))
        assert cost[rows, cols].sum() == pytest.approx(best, abs=1e-12)


@settings(max_examples=60)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_assignment_rectangular_and_integer_costs(n, m, seed):
    rng = np.random.default_rng(seed)
    cost = rng.integers(0, 5, size=(n, m)).astype(float)
    k = min(n, m)
    if n <= m:
        best = min(sum(cost[i, p[i]] for i in range(k)) for p in itertools.permutations(range(m), k))
    else:
        best = min(sum(cost[p[j], j] for j in range(k)) for p in itertools.permutations(range(n), k))
    rows, cols = linear_sum_assignment(cost)
    assert len(rows) == k and len(set(rows)) == k and len(set(cols)) == k
    assert cost[rows, cols].sum() == best
    assert assignment_cost(cost) == best


def test_assignment_validation():
    with pytest.raises(ValueError):
        linear_sum_assignment(np.zeros(3))
    with pytest.raises(ValueError):
        linear_sum_assignment(np.array([[np.inf, 1.0], [1.0, 2.0]]))
    rows, cols = linear_sum_assignment(np.zeros((0, 3)))
    assert len(rows) == len(cols) == 0


# -- chamfer ------------------------------------------------------------------------------
def test_chamfer_examples():
    x = np.random.default_rng(1).normal(size=(20, 3))
    assert chamfer(x, x) == 0
    assert chamfer(np.zeros((1, 3)), np.array([[1.0, 0, 0]])) == 2.0


@pytest.mark.parametrize("m", [64, 200])
def test_chamfer_matches_brute_force(m):
    rng = np.random.default_rng(2)
    for _ in range(3):
        x, y = rng.normal(size=(m, 3)), rng.normal(size=(m + 7, 3))
        assert abs(chamfer(x, y) - brute_chamfer(x, y)) < 1e-10


@settings(max_examples=30)
@given(st.integers(1, 40), st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_chamfer_is_exactly_symmetric(n, m, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=(n, 3)), rng.normal(size=(m, 3))
    assert chamfer(x, y) == chamfer(y, x)


def test_chamfer_rejects_empty():
    with pytest.raises(ValueError):
        chamfer(np.zeros((0, 3)), np.zeros((2, 3)))


def test_vectorised_matrix_matches_pairwise_loop():
    rng = np.random.default_rng(3)
    a = list(rng.normal(size=(7, 10, 3)))
    b = list(rng.normal(size=(5, 10, 3)))
    d = distance_matrix(a, b, "cd")
    loop = np.array([[chamfer(p, q) for q in b] for p in a])
    np.testing.assert_allclose(d, loop, atol=1e-12, rtol=0)
    sym = distance_matrix(a, a, "cd", symmetric=True)
    assert np.all(np.diag(sym) == 0) and np.array_equal(sym, sym.T) and np.all(sym >= 0)


# -- EMD ------------------------------------------------------------------------------------
def test_emd_examples():
    x = np.random.default_rng(4).normal(size=(10, 3))
    assert emd(x, x) == 0
    assert emd(np.array([[0.0, 0, 0], [1, 0, 0]]), np.array([[1.0, 0, 0], [0, 0, 0]])) == 0


def test_emd_matches_exhaustive_permutations_at_six():
    rng = np.random.default_rng(5)
    for _ in range(20):
        x, y = rng.normal(size=(6, 3)), rng.normal(size=(6, 3))
        assert abs(emd(x, y) - brute_emd(x, y)) < 1e-10


def test_emd_errors_and_approximation():
    with pytest.raises(ValueError):
        emd(np.zeros((3, 3)), np.zeros((4, 3)))
    big = np.random.default_rng(6).normal(size=(EMD_EXACT_LIMIT + 1, 3))
    with pytest.raises(ValueError):
        emd(big, big + 1)
    # each set is subsampled independently, so a pure shift of 0.5 is only approximately recovered
    approx = emd(big, big + [0.3, 0.4, 0], approximate=True)
    assert abs(approx - 0.5) < 0.05
    assert approx == emd(big, big + [0.3, 0.4, 0], approximate=True)


def test_emd_is_a_metric():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        x, y, z = rng.normal(size=(3, 8, 3))
        xy, yz, xz = emd(x, y), emd(y, z), emd(x, z)
        assert abs(xy - emd(y, x)) < 1e-10
        assert xz <= xy + yz + 1e-12
    x = rng.normal(size=(8, 3))
    assert emd(x, x[rng.permutation(8)]) == 0
    assert emd(x, x + 1e-3) > 0


# -- 1-NNA ------------------------------------------------------------------------------------
def test_duplicates_give_zero():
    sets = list(np.random.default_rng(8).normal(size=(10, 16, 3)))
    assert one_nna([s.copy() for s in sets], sets, "cd") == 0.0
    assert one_nna([s.copy() for s in sets], sets, "emd") == 0.0


def test_separated_lists_give_hundred():
    rng = np.random.default_rng(9)
    ref = list(rng.normal(size=(10, 16, 3)))
    gen = list(rng.normal(size=(10, 16, 3)) + 20)
    assert one_nna(gen, ref, "cd") == 100.0


def test_same_distribution_fifty_fifty_is_near_half():
    # the accuracy of 100 pooled sets has a standard deviation of roughly 5 points
    accs = []
    for seed in range(20):
        sets = list(np.random.default_rng(seed).normal(size=(100, 8, 3)))
        accs.append(one_nna(sets[:50], sets[50:], "cd"))
    assert 44 < np.mean(accs) < 56
    assert np.mean([(40 <= a <= 60) for a in accs]) >= 0.8


def test_ties_go_to_lowest_index():
    d = np.array([[0, 1, 1, 1], [1, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]], dtype=float)
    acc, nn, correct = one_nna_from_matrix(d, np.array([0, 0, 1, 1]), return_details=True)
    assert list(nn) == [1, 0, 0, 0]
    assert acc == 50.0


def test_one_nna_is_rigid_invariant():
    rng = np.random.default_rng(10)
    gen = list(rng.normal(size=(6, 12, 3)))
    ref = list(rng.normal(size=(6, 12, 3)) * 1.3)
    rot = Rotation.random(random_state=11).as_matrix()
    shift = rng.normal(size=3)
    moved = lambda ss: [s @ rot.T + shift for s in ss]  # noqa: E731
    for metric in ("cd", "emd"):
        a, nn_a, _ = one_nna(gen, ref, metric, return_details=True)
        b, nn_b, _ = one_nna(moved(gen), moved(ref), metric, return_details=True)
        assert a == b and np.array_equal(nn_a, nn_b)


def test_one_nna_rejects_empty_lists():
    with pytest.raises(ValueError):
        one_nna([], [np.zeros((2, 3))])
    with pytest.raises(ValueError):
        distance_matrix([np.zeros((2, 3))], [np.zeros((2, 3))], metric="hausdorff")


# -- nearest manifold gap ----------------------------------------------------------------------
def test_gap_examples():
    ref = np.random.default_rng(12).normal(size=(30, 3))
    assert nearest_manifold_gap(ref[:10], ref) == 0
    assert nearest_manifold_gap(np.array([[0.0, 3, 4]]), np.zeros((1, 3))) == 5.0
    with pytest.raises(ValueError):
        nearest_manifold_gap(np.zeros((0, 3)), ref)


def test_gap_matches_brute_force():
    rng = np.random.default_rng(13)
    gen, ref = rng.normal(size=(50, 3)), rng.normal(size=(80, 3))
    brute = np.mean([min(math.dist(p, q) for q in ref) for p in gen])
    assert abs(nearest_manifold_gap(gen, ref) - brute) < 1e-10
