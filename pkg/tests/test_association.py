import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from uavbeam.association import (SCORE_FLOOR, CovarianceWindow, FeatureSet, characteristic_distance,
                                 characteristic_distances, cost_from_distances, cost_matrix, distinguishability,
                                 dynamic_weights, fixed_weights, mahalanobis_covariance, normalize_weights,
                                 pairwise_distances, sameness_score, solve_assignment)

OPTIMAL = ("hungarian", "lapjv", "bruteforce", "scipy")
vec3 = arrays(float, 3, elements=st.floats(-100, 100))


def brute_objective(D):
    n = D.shape[0]
    return min(sum(D[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


@pytest.mark.parametrize("metric", ["ed", "md", "emd"])
def test_identity_of_indiscernibles(metric):
    assert characteristic_distance([1.0, -2, 3], [1.0, -2, 3], metric) == 0.0


def test_md_examples():
    a, b = np.array([3.0, 4, 5]), np.array([1.0, 1, 1])
    assert characteristic_distance(a, b, "md", np.eye(3)) == pytest.approx(characteristic_distance(a, b, "ed"), abs=1e-12)
    assert characteristic_distance([2.0, 0], [0.0, 0], "md", np.diag([4.0, 1])) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        characteristic_distance([1.0, 0], [0.0, 0], "md", np.zeros((2, 2)))
    with pytest.raises(ValueError):
        characteristic_distance([1.0, 0], [0.0, 0, 0], "ed")
    with pytest.raises(ValueError):
        characteristic_distance([1.0], [0.0], "cosine")


def test_emd_is_sorted_component_transport():
    assert characteristic_distance([3.0, 1, 2], [1.0, 2, 3], "emd") == 0.0
    assert characteristic_distance([0.0, 0, 0], [1.0, 2, 3], "emd") == pytest.approx(2.0)


@given(vec3, vec3, st.sampled_from(["ed", "md", "emd"]))
def test_metric_symmetric_nonnegative(a, b, metric):
    sigma = np.diag([2.0, 0.5, 3.0])
    d1 = characteristic_distance(a, b, metric, sigma)
    d2 = characteristic_distance(b, a, metric, sigma)
    assert d1 >= 0 and d1 == pytest.approx(d2, abs=1e-9)


@given(arrays(float, (5, 3), elements=st.floats(-50, 50)), arrays(float, (4, 3), elements=st.floats(-50, 50)))
def test_pairwise_matches_scalar(A, B):
    sigma = np.array([[2.0, 0.3, 0], [0.3, 1.0, 0.1], [0, 0.1, 0.5]])
    for metric in ("ed", "md", "emd"):
        D = pairwise_distances(A, B, metric, sigma)
        for i, j in [(0, 0), (4, 3), (2, 1)]:
            assert D[i, j] == pytest.approx(characteristic_distance(A[i], B[j], metric, sigma), abs=1e-9)


def test_sameness_score():
    assert sameness_score(0.0) == 1.0
    assert sameness_score(1.0) == 0.5
    assert sameness_score(1e300) == SCORE_FLOOR
    with pytest.raises(ValueError):
        sameness_score(-0.1)


def test_distinguishability_examples():
    fs = FeatureSet((np.array([[0.0, 0, 0], [1.0, 0, 0]]),))
    c12 = sameness_score(1.0)
    assert distinguishability(fs, 0, 0, "one-match", metric="ed") == pytest.approx(c12)
    same = FeatureSet((np.ones((4, 3)),))
    assert distinguishability(same, 2, 0, "all-distinct", metric="ed") == 0.0
    far = FeatureSet((np.array([[0.0, 0, 0], [1e9, 0, 0], [0, 1e9, 0], [0, 0, 1e9]]),))
    assert distinguishability(far, 0, 0, "all-distinct", metric="ed") == pytest.approx(1.0, abs=1e-5)
    with pytest.raises(ValueError):
        distinguishability(FeatureSet((np.ones((1, 3)),)), 0, 0)


def test_dynamic_weight_examples():
    rng = np.random.default_rng(0)
    one = FeatureSet((rng.normal(size=(5, 3)),))
    np.testing.assert_allclose(dynamic_weights(one, metric="ed").normalized, [1.0])
    fs = FeatureSet((np.zeros((5, 3)), rng.normal(0, 30, (5, 3))))
    for metric in ("ed", "md"):
        w = dynamic_weights(fs, metric=metric).normalized
        assert w[1] > w[0]
    P, V = rng.normal(0, 5, (6, 3)), rng.normal(0, 1, (6, 3))
    w1 = dynamic_weights(FeatureSet((P, V)), metric="ed").normalized
    w2 = dynamic_weights(FeatureSet((V, P)), metric="ed").normalized
    np.testing.assert_allclose(w1, w2[::-1])
    with pytest.raises(ValueError):
        dynamic_weights(FeatureSet((np.ones((1, 3)),)))


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["ed", "md", "emd"]), st.sampled_from(["all-distinct", "one-match"]))
@settings(max_examples=40, deadline=None)
def test_weights_invariant_to_relabeling(seed, metric, mode):
    rng = np.random.default_rng(seed)
    P, V = rng.normal(0, 3, (7, 3)), rng.normal(0, 1, (7, 3))
    perm = rng.permutation(7)
    sig = [mahalanobis_covariance(P), mahalanobis_covariance(V)] if metric == "md" else None
    a = dynamic_weights(FeatureSet((P, V)), mode, metric, sig)
    b = dynamic_weights(FeatureSet((P[perm], V[perm])), mode, metric, sig)
    np.testing.assert_allclose(a.normalized, b.normalized, rtol=1e-12)


def test_normalize_and_fixed_weights():
    np.testing.assert_allclose(normalize_weights([0.0, 0.0]).normalized, [0.5, 0.5])
    np.testing.assert_allclose(normalize_weights([1.0, 3.0]).normalized, [0.25, 0.75])
    np.testing.assert_allclose(fixed_weights("position").normalized, [1, 0])
    np.testing.assert_allclose(fixed_weights("velocity").normalized, [0, 1])
    np.testing.assert_allclose(fixed_weights("static").normalized, [0.5, 0.5])
    with pytest.raises(ValueError):
        normalize_weights([-1.0, 2.0])
    with pytest.raises(ValueError):
        fixed_weights("acceleration")


def test_cost_matrix_examples():
    rng = np.random.default_rng(1)
    P, V = rng.normal(0, 5, (4, 3)), rng.normal(0, 1, (4, 3))
    fs = FeatureSet((P, V))
    D = cost_matrix(fs, fs, normalize_weights([0.3, 0.7]), metric="ed")
    np.testing.assert_allclose(np.diag(D), 1.0)
    one = FeatureSet((P,))
    d = pairwise_distances(P, P, "ed")
    np.testing.assert_allclose(cost_matrix(one, one, normalize_weights([1.0]), "ed"), 1 + d)
    other = FeatureSet((rng.normal(0, 5, (4, 3)), rng.normal(0, 1, (4, 3))))
    Dw = cost_matrix(fs, other, normalize_weights([1.0, 1.0]), "ed", mode="weighted-distance")
    dists = characteristic_distances(fs, other, "ed")
    np.testing.assert_allclose(Dw, (dists[0] + dists[1]) / 2)
    with pytest.raises(ValueError):
        cost_matrix(fs, one, normalize_weights([1.0, 1.0]))
    with pytest.raises(ValueError):
        cost_from_distances(dists, normalize_weights([1.0, 1.0]), mode="bogus")


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=40, deadline=None)
def test_harmonic_and_weighted_modes_share_argmin(seed):
    rng = np.random.default_rng(seed)
    A = FeatureSet((rng.normal(0, 5, (6, 3)), rng.normal(0, 1, (6, 3))))
    B = FeatureSet((rng.normal(0, 5, (6, 3)), rng.normal(0, 1, (6, 3))))
    w = normalize_weights(rng.uniform(0.1, 1, 2))
    h = solve_assignment(cost_matrix(A, B, w, "ed", "harmonic"), "hungarian")
    wd = solve_assignment(cost_matrix(A, B, w, "ed", "weighted-distance"), "hungarian")
    np.testing.assert_array_equal(h.cols, wd.cols)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=40, deadline=None)
def test_self_cost_argmin_on_diagonal(seed):
    rng = np.random.default_rng(seed)
    fs = FeatureSet((rng.normal(0, 5, (6, 3)), rng.normal(0, 1, (6, 3))))
    for mode in ("harmonic", "weighted-distance"):
        D = cost_matrix(fs, fs, normalize_weights(rng.uniform(0.1, 1, 2)), "ed", mode)
        np.testing.assert_array_equal(np.argmin(D, axis=1), np.arange(6))


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 100))
@settings(max_examples=40, deadline=None)
def test_md_scale_invariance_of_assignment(seed, scale):
    rng = np.random.default_rng(seed)
    P, V = rng.normal(0, 5, (6, 3)), rng.normal(0, 1, (6, 3))
    Pm, Vm = P + rng.normal(0, 0.5, P.shape), V + rng.normal(0, 0.1, V.shape)

    def solve(s):
        meas, pred = FeatureSet((Pm * s, Vm)), FeatureSet((P * s, V))
        sig = [mahalanobis_covariance(np.vstack([P * s, Pm * s])), mahalanobis_covariance(np.vstack([V, Vm]))]
        w = dynamic_weights(meas, metric="md", sigmas=sig)
        D = cost_matrix(meas, pred, w, "md", "weighted-distance", sig)
        return solve_assignment(D, "hungarian").cols

    np.testing.assert_array_equal(solve(1.0), solve(scale))


def test_mahalanobis_covariance():
    rng = np.random.default_rng(2)
    S = mahalanobis_covariance(rng.standard_normal((400, 3)))
    assert np.max(np.abs(S - np.eye(3))) < 0.1 * 1.0 + 0.05
    np.testing.assert_allclose(np.diag(S), 1.0, rtol=0.1)
    np.testing.assert_allclose(mahalanobis_covariance(np.ones((20, 3))), 1e-6 * np.eye(3), atol=1e-18)
    X = rng.normal(0, 2, (50, 3))
    ridge = 1e-6 * np.eye(3)
    np.testing.assert_allclose(mahalanobis_covariance(2 * X) - ridge, 4 * (mahalanobis_covariance(X) - ridge))
    np.testing.assert_array_equal(mahalanobis_covariance(np.ones((3, 3))), np.eye(3))


def test_covariance_window_pools_slots():
    rng = np.random.default_rng(3)
    win = CovarianceWindow(3)
    sets = [FeatureSet((rng.normal(0, s, (10, 3)), rng.normal(0, 1, (10, 3)))) for s in (1, 2, 3, 4)]
    for fs in sets:
        sig = win.push(fs)
    pooled = np.vstack([fs.chars[0] for fs in sets[1:]])
    np.testing.assert_allclose(sig[0], mahalanobis_covariance(pooled))


def test_solver_examples():
    for algo in OPTIMAL + ("greedy", "auction"):
        a = solve_assignment([[1.0, 2], [2, 1]], algo)
        assert list(a.cols) == [0, 1] and a.cost == 2
        b = solve_assignment([[0.0, 1], [1, 0]], algo)
        assert list(b.cols) == [0, 1] and b.cost == 0
        assert list(a.matrix().sum(axis=0)) == [1, 1]


def test_solver_errors():
    with pytest.raises(ValueError):
        solve_assignment(np.ones((2, 3)))
    with pytest.raises(ValueError):
        solve_assignment([[1.0, np.inf], [0, 1]])
    with pytest.raises(ValueError):
        solve_assignment(np.ones((9, 9)), "bruteforce")
    with pytest.raises(ValueError):
        solve_assignment(np.ones((2, 2)), "simplex")


def test_ties_break_lowest_index_first():
    Z = np.zeros((5, 5))
    for algo in OPTIMAL + ("greedy",):
        np.testing.assert_array_equal(solve_assignment(Z, algo).cols, np.arange(5))


def test_optimal_solvers_agree_with_bruteforce():
    rng = np.random.default_rng(4)
    for _ in range(300):
        D = rng.uniform(0, 1, (6, 6))
        ref = solve_assignment(D, "bruteforce")
        assert ref.cost == pytest.approx(brute_objective(D), abs=0)
        for algo in ("hungarian", "lapjv", "scipy"):
            a = solve_assignment(D, algo)
            assert a.cost == ref.cost
            np.testing.assert_array_equal(a.cols, ref.cols)


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 8))
@settings(max_examples=150, deadline=None)
def test_greedy_and_auction_bounds(seed, K):
    rng = np.random.default_rng(seed)
    D = rng.uniform(0, 10, (K, K))
    opt = solve_assignment(D, "hungarian").cost
    assert solve_assignment(D, "greedy").cost >= opt - 1e-12
    eps = 1e-3 * (D.max() - D.min()) / K if K > 1 else 0.0
    a = solve_assignment(D, "auction")
    assert sorted(a.cols) == list(range(K))
    assert a.cost <= opt + K * eps + 1e-9


def test_auction_explicit_epsilon():
    rng = np.random.default_rng(5)
    D = rng.uniform(0, 10, (6, 6))
    loose = solve_assignment(D, "auction", epsilon=5.0)
    assert sorted(loose.cols) == list(range(6))
    assert loose.cost <= solve_assignment(D, "hungarian").cost + 6 * 5.0
