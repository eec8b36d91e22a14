import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from tabddpm.multinomial import (
    cat_kl_loss,
    cat_kl_terms,
    cat_posterior,
    marginal_probs,
    p_sample_cat,
    q_sample_cat,
    q_step_probs,
    sample_categorical,
    softmax,
)
from tabddpm.schedule import make_schedule

from helpers import custom_schedule, numeric_grad


def onehot(idx, K):
    out = np.zeros((len(idx), K))
    out[np.arange(len(idx)), idx] = 1.0
    return out


def test_q_sample_no_noise_returns_x0(rng):
    s = custom_schedule([0.0])
    x0 = onehot(rng.integers(0, 4, 500), 4)
    np.testing.assert_array_equal(q_sample_cat(x0, 1, s, rng), x0)


def test_q_sample_full_noise_is_uniform(rng):
    s = custom_schedule([1.0])
    x0 = onehot(np.zeros(10000, int), 4)
    counts = q_sample_cat(x0, 1, s, rng).sum(axis=0)
    assert chisquare(counts).pvalue > 1e-3


def test_marginal_half_noise_binary():
    s = custom_schedule([0.5])
    np.testing.assert_allclose(marginal_probs(np.array([[1.0, 0.0]]), 1, s), [[0.75, 0.25]])


def test_iterated_kernel_matches_marginal(rng):
    s = make_schedule(100)
    K, t, n = 5, 50, 10000
    x = onehot(np.full(n, 2), K)
    for k in range(1, t + 1):
        x = sample_categorical(q_step_probs(x, k, s), rng)
    emp = x.mean(axis=0)
    closed = marginal_probs(onehot([2], K), t, s)[0]
    assert 0.5 * np.abs(emp - closed).sum() < 0.02


@pytest.mark.parametrize("K", [2, 5, 10])
def test_prior_convergence_analytic(K):
    s = make_schedule(1000, "linear", 1e-4, 0.02)
    assert s.alpha_bar[1000] * (1 - 1 / K) < 0.01


def test_posterior_noiseless_returns_clean():
    s = custom_schedule([0.0, 0.0])
    np.testing.assert_allclose(cat_posterior(np.array([[0.0, 1.0]]), np.array([[0.0, 1.0]]), 2, s), [[0.0, 1.0]])


def test_posterior_uniform_inputs():
    s = make_schedule(10)
    u = np.full((1, 3), 1 / 3)
    np.testing.assert_allclose(cat_posterior(u, u, 4, s), u, atol=1e-15)


def test_posterior_hand_computed():
    # alpha_2 = 0.9, abar_1 = 0.8: (0.95, 0.05) * (0.1, 0.9), normalised
    s = custom_schedule([0.2, 0.1])
    out = cat_posterior(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]), 2, s)
    np.testing.assert_allclose(out, [[0.6785714285714285, 0.3214285714285714]], atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.integers(2, 100), st.integers(0, 2**31 - 1))
def test_posterior_normalised_and_relabel_invariant(K, t, seed):
    s = make_schedule(100)
    r = np.random.default_rng(seed)
    x_t = onehot(r.integers(0, K, 3), K)
    x0 = r.dirichlet(np.ones(K), size=3)
    out = cat_posterior(x_t, x0, t, s)
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-9)
    assert np.all(out >= 0)
    perm = r.permutation(K)
    np.testing.assert_allclose(cat_posterior(x_t[:, perm], x0[:, perm], t, s), out[:, perm], atol=1e-12)


def test_kl_zero_when_prediction_is_exact():
    s = make_schedule(100)
    x0 = onehot([0, 2, 1], 3)
    x_t = onehot([1, 2, 0], 3)
    assert cat_kl_loss(x0, x_t, 60.0 * x0, 30, s) < 1e-12


def test_nll_at_first_step_uniform():
    s = make_schedule(100)
    assert cat_kl_loss(onehot([3], 4), onehot([1], 4), np.zeros((1, 4)), 1, s) == pytest.approx(math.log(4), abs=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.integers(1, 100), st.integers(0, 2**31 - 1))
def test_loss_nonnegative(K, t, seed):
    s = make_schedule(100)
    r = np.random.default_rng(seed)
    terms = cat_kl_terms(onehot(r.integers(0, K, 8), K), onehot(r.integers(0, K, 8), K),
                         r.normal(scale=4, size=(8, K)), t, s)
    assert np.all(terms >= -1e-15)


def test_loss_gradient_matches_fd(rng):
    s = make_schedule(50)
    K, n = 4, 6
    x0 = onehot(rng.integers(0, K, n), K)
    x_t = onehot(rng.integers(0, K, n), K)
    logits = rng.normal(size=(n, K))
    t = np.array([1, 2, 10, 25, 50, 1])
    _, g = cat_kl_terms(x0, x_t, logits, t, s, with_grad=True)
    num = numeric_grad(lambda: cat_kl_terms(x0, x_t, logits, t, s).sum(), logits)
    np.testing.assert_allclose(g, num, rtol=1e-6, atol=1e-9)


def test_p_sample_outputs_valid_onehot(rng):
    s = make_schedule(100)
    x_t = onehot(rng.integers(0, 5, 200), 5)
    for t in (100, 40, 2, 1):
        out = p_sample_cat(x_t, rng.normal(size=(200, 5)), t, s, rng)
        assert set(np.unique(out)) <= {0.0, 1.0}
        np.testing.assert_array_equal(out.sum(axis=1), 1.0)


def test_p_sample_follows_peaked_logits(rng):
    # clean chain so far (abar_{t-1} = 1); x_t disagrees with the prediction
    s = custom_schedule([0.0, 0.5])
    n = 2000
    x_t = onehot(np.zeros(n, int), 3)
    logits = np.tile([0.0, 0.0, 30.0], (n, 1))
    out = p_sample_cat(x_t, logits, 2, s, rng)
    assert out[:, 2].mean() > 0.99


def test_final_step_argmax():
    s = make_schedule(10)
    out = p_sample_cat(onehot([0], 3), np.array([[0.0, 0.0, 5.0]]), 1, s, np.random.default_rng(0))
    np.testing.assert_array_equal(out, [[0.0, 0.0, 1.0]])


def test_final_step_sampling_option(rng):
    s = make_schedule(10)
    out = p_sample_cat(onehot(np.zeros(3000, int), 2), np.zeros((3000, 2)), 1, s, rng, argmax_final=False)
    assert 0.45 < out[:, 0].mean() < 0.55


def test_softmax_stable():
    p = softmax(np.array([[1000.0, 0.0]]))
    assert np.isfinite(p).all() and p[0, 0] == 1.0
