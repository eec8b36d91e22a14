"""Multinomial diffusion for a single categorical column.

States are ``(n, K)`` arrays (one-hot or probabilities). ``t`` may be a
scalar or one timestep per row.
"""

from __future__ import annotations

import numpy as np

from .gaussian import _per_row
from .schedule import NoiseSchedule

LOG_FLOOR = 1e-12


def softmax(logits) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def sample_categorical(probs, rng: np.random.Generator) -> np.ndarray:
    """One-hot draws from each row of ``probs`` by inverse-CDF sampling."""
    probs = np.atleast_2d(probs)
    n, K = probs.shape
    u = rng.random(n)
    cdf = np.cumsum(probs, axis=1)
    idx = np.minimum((cdf < u[:, None] * cdf[:, -1:]).sum(axis=1), K - 1)
    out = np.zeros((n, K))
    out[np.arange(n), idx] = 1.0
    return out


def marginal_probs(x0, t, schedule: NoiseSchedule) -> np.ndarray:
    K = np.shape(x0)[-1]
    abar = _per_row(schedule.alpha_bar, t)
    return abar * x0 + (1.0 - abar) / K


def q_step_probs(x_prev, t, schedule: NoiseSchedule) -> np.ndarray:
    """One-step kernel ``(1 - beta_t) x_{t-1} + beta_t / K``."""
    K = np.shape(x_prev)[-1]
    beta = _per_row(schedule.beta, t)
    return (1.0 - beta) * x_prev + beta / K


def q_sample_cat(x0_onehot, t, schedule: NoiseSchedule, rng: np.random.Generator) -> np.ndarray:
    return sample_categorical(marginal_probs(x0_onehot, t, schedule), rng)


def _posterior_unnorm(x_t, x0_probs, t, schedule: NoiseSchedule):
    K = np.shape(x_t)[-1]
    t = np.asarray(t)
    alpha = _per_row(schedule.alpha, t)
    abar_prev = _per_row(schedule.alpha_bar, t - 1)
    lik = alpha * x_t + (1.0 - alpha) / K
    prior = abar_prev * x0_probs + (1.0 - abar_prev) / K
    return lik, abar_prev, lik * prior


def cat_posterior(x_t, x0_probs, t, schedule: NoiseSchedule) -> np.ndarray:
    """``q(x_{t-1} | x_t, x_0)`` with ``x_0`` given as a distribution."""
    _, _, u = _posterior_unnorm(x_t, x0_probs, t, schedule)
    return u / u.sum(axis=-1, keepdims=True)


def cat_kl_terms(x0_onehot, x_t_onehot, logits, t, schedule: NoiseSchedule, with_grad: bool = False):
    """Per-row loss, and optionally its gradient w.r.t. ``logits``.

    Rows with ``t > 1`` get ``KL(q(x_{t-1}|x_t,x_0) || q(x_{t-1}|x_t,x0_hat))``
    where ``x0_hat = softmax(logits)``; rows with ``t == 1`` get the
    reconstruction NLL ``-log x0_hat[level]``.
    """
    x0 = np.atleast_2d(np.asarray(x0_onehot, dtype=np.float64))
    x_t = np.atleast_2d(np.asarray(x_t_onehot, dtype=np.float64))
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    n = x0.shape[0]
    t = np.broadcast_to(np.asarray(t), (n,))
    s = softmax(logits)

    lik, abar_prev, u_true = _posterior_unnorm(x_t, x0, t, schedule)
    q = u_true / u_true.sum(axis=1, keepdims=True)
    _, _, u = _posterior_unnorm(x_t, s, t, schedule)
    U = u.sum(axis=1, keepdims=True)
    p = u / U
    logq = np.log(np.maximum(q, LOG_FLOOR))
    logp = np.log(np.maximum(p, LOG_FLOOR))
    kl = np.sum(np.where(q > 0, q * (logq - logp), 0.0), axis=1)

    first = t == 1
    nll = -np.sum(x0 * log_softmax(logits), axis=1)
    loss = np.where(first, nll, kl)
    if not with_grad:
        return loss

    # dKL/ds_k = c a_k (1/U - q_k/u_k) with c = abar_{t-1}, a = likelihood term
    g = abar_prev * lik * (1.0 / U - q / u)
    d_kl = s * (g - np.sum(s * g, axis=1, keepdims=True))
    d_nll = s - x0
    grad = np.where(first[:, None], d_nll, d_kl)
    return loss, grad


def cat_kl_loss(x0_onehot, x_t_onehot, logits, t, schedule: NoiseSchedule) -> float:
    return float(np.mean(cat_kl_terms(x0_onehot, x_t_onehot, logits, t, schedule)))


def p_sample_cat(x_t_onehot, logits, t: int, schedule: NoiseSchedule, rng: np.random.Generator,
                 argmax_final: bool = True) -> np.ndarray:
    """Reverse step: sample from the posterior with ``x0_hat`` plugged in.

    At ``t == 1`` the argmax of ``x0_hat`` is returned unless
    ``argmax_final`` is off, in which case ``x0_hat`` itself is sampled.
    """
    x0_hat = softmax(np.atleast_2d(logits))
    if t == 1:
        if not argmax_final:
            return sample_categorical(x0_hat, rng)
        n, K = x0_hat.shape
        out = np.zeros((n, K))
        out[np.arange(n), np.argmax(x0_hat, axis=1)] = 1.0
        return out
    return sample_categorical(cat_posterior(x_t_onehot, x0_hat, t, schedule), rng)
