import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tabddpm.metrics import (
    dcr,
    dim_stats,
    dimwise_prediction,
    dimwise_prediction_rmse,
    dimwise_probability_rmse,
    median_heuristic,
    mir,
    mmd_rbf,
    nearest_distances,
)


def brute_mmd(X, Y, sigma):
    def k(a, b):
        return math.exp(-np.sum((a - b) ** 2) / (2 * sigma**2))
    kxx = np.mean([k(a, b) for a in X for b in X])
    kyy = np.mean([k(a, b) for a in Y for b in Y])
    kxy = np.mean([k(a, b) for a in X for b in Y])
    return kxx + kyy - 2 * kxy


def test_dim_stats():
    assert dim_stats(np.array([0, 1, 1, 1.0]))[0] == 0.75
    assert dim_stats(np.full(5, 0.3))[0] == pytest.approx(0.3)
    block = np.eye(3)[[0, 1, 1, 2, 2, 2]]
    assert dim_stats(block).sum() == pytest.approx(1.0)


def test_dimwise_probability():
    X = np.array([[0.0, 0.5], [1.0, 0.5]])
    assert dimwise_probability_rmse(X, X) == 0.0
    Y = np.array([[0.5, 0.7], [0.5, 0.7]])
    assert dimwise_probability_rmse(X, Y) == pytest.approx(math.sqrt(0.02))
    assert dimwise_probability_rmse(X[::-1], Y) == pytest.approx(math.sqrt(0.02))


def test_mmd_examples():
    X = np.random.default_rng(0).normal(size=(30, 3))
    assert mmd_rbf(X, X) == pytest.approx(0.0, abs=1e-12)
    assert mmd_rbf([[0.0]], [[1.0]], 1.0) == pytest.approx(2 - 2 * math.exp(-0.5), abs=1e-9)
    assert mmd_rbf(np.zeros((3, 2)), np.zeros((4, 2))) == 0.0


def test_mmd_matches_brute_force(rng):
    X, Y = rng.normal(size=(15, 2)), rng.normal(loc=0.5, size=(12, 2))
    sigma = median_heuristic(X, Y)
    assert mmd_rbf(X, Y) == pytest.approx(brute_mmd(X, Y, sigma), rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_mmd_nonnegative_and_permutation_invariant(seed):
    r = np.random.default_rng(seed)
    X, Y = r.normal(size=(20, 3)), r.normal(size=(25, 3))
    v = mmd_rbf(X, Y)
    assert v >= 0
    assert mmd_rbf(X[r.permutation(20)], Y[r.permutation(25)]) == pytest.approx(v, rel=1e-9, abs=1e-15)


def test_mmd_orders_shift():
    for seed in range(5):
        r = np.random.default_rng(seed)
        A, B = r.normal(size=(500, 2)), r.normal(size=(500, 2))
        assert mmd_rbf(A, B) < mmd_rbf(A, B + 1.0)


def test_dcr_examples():
    R = np.random.default_rng(1).normal(size=(20, 3))
    assert dcr(R, R[:7]) == 0.0
    assert dcr([[3.0, 4.0]], [[0.0, 0.0]]) == 5.0
    # nearest distances 1, 2, 9 -> median 2
    assert dcr([[0.0]], [[1.0], [-2.0], [9.0]]) == 2.0


def test_dcr_decreases_as_synth_moves_onto_real():
    real = np.array([[0.0, 0.0], [1.0, 1.0]])
    start = np.array([[3.0, -1.0], [-2.0, 4.0]])
    vals = [dcr(real, (1 - a) * start + a * real) for a in np.linspace(0, 1, 11)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] == 0.0


def test_nearest_distances_brute_force(rng):
    Q, R = rng.normal(size=(10, 4)), rng.normal(size=(15, 4))
    brute = np.array([min(np.linalg.norm(q - r) for r in R) for q in Q])
    np.testing.assert_allclose(nearest_distances(Q, R), brute, rtol=1e-12)


def test_mir_edge_cases():
    members = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    non_members = members + 10.0
    assert mir(members, non_members, members, threshold=1e-6) == 1.0
    assert mir(members, non_members, members, threshold=0.0) == 0.0
    assert mir(members, non_members, members) == 1.0  # auto threshold
    # every record within threshold -> precision 0.5, recall 1
    assert mir(members, non_members, members, threshold=1e3) == pytest.approx(2 * 0.5 / 1.5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.one_of(st.none(), st.floats(0, 3)))
def test_mir_range(seed, thr):
    r = np.random.default_rng(seed)
    v = mir(r.normal(size=(10, 2)), r.normal(size=(8, 2)), r.normal(size=(12, 2)), thr)
    assert 0.0 <= v <= 1.0


def _correlated(n, seed):
    r = np.random.default_rng(seed)
    a = r.normal(size=n)
    b = a + 0.3 * r.normal(size=n)
    c = (a + 0.3 * r.normal(size=n) > 0).astype(float)
    return np.column_stack([a, b, c, 1 - c])


def test_dimwise_prediction_identity_is_zero():
    real, test = _correlated(400, 0), _correlated(200, 1)
    assert dimwise_prediction_rmse(real, real, test, blocks=[(2, 4)], seed=0) == 0.0


def test_dimwise_prediction_detects_broken_dependence():
    real, test = _correlated(400, 0), _correlated(200, 1)
    synth = real.copy()
    r = np.random.default_rng(3)
    synth[:, 0] = r.permutation(synth[:, 0])
    f_real, f_synth, dims, skipped = dimwise_prediction(real, synth, test, blocks=[(2, 4)], seed=0)
    assert f_real[dims.index(0)] > f_synth[dims.index(0)]
    v = dimwise_prediction_rmse(real, synth, test, blocks=[(2, 4)], seed=0)
    assert 0.0 < v <= 1.0


def test_dimwise_prediction_skips_single_class():
    real = _correlated(100, 0)
    real[:, 2], real[:, 3] = 1.0, 0.0
    _, _, dims, skipped = dimwise_prediction(real, real, real, blocks=[(2, 4)])
    assert skipped == [2, 3]
    assert dims == [0, 1]


def test_quality_privacy_ordering():
    r = np.random.default_rng(0)
    real = r.uniform(0.3, 0.7, size=(300, 3)) ** 2
    holdout = r.uniform(0.3, 0.7, size=(300, 3)) ** 2
    noise = r.uniform(size=(300, 3))
    assert dimwise_probability_rmse(real, real) < dimwise_probability_rmse(real, noise)
    assert dcr(real, real) < dcr(real, noise)
    assert mir(real, holdout, real) >= mir(real, holdout, noise)


def test_width_mismatch():
    with pytest.raises(ValueError):
        mmd_rbf(np.zeros((2, 2)), np.zeros((2, 3)))
