"""Gaussian diffusion for the continuous block.

All noise (``eps``, ``z``) is passed in by the caller. ``t`` may be a
scalar or one timestep per row.
"""

from __future__ import annotations

import numpy as np

from .schedule import NoiseSchedule


def _per_row(values: np.ndarray, t) -> np.ndarray:
    t = np.asarray(t)
    out = values[t]
    return out[..., None] if t.ndim else out


def q_sample_gauss(x0, t, eps, schedule: NoiseSchedule) -> np.ndarray:
    """Closed-form marginal draw ``sqrt(abar_t) x0 + sqrt(1 - abar_t) eps``."""
    abar = _per_row(schedule.alpha_bar, t)
    return np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps


def q_step_gauss(x_prev, t, eps, schedule: NoiseSchedule) -> np.ndarray:
    """One forward transition ``x_t ~ N(sqrt(1 - beta_t) x_{t-1}, beta_t I)``."""
    beta = _per_row(schedule.beta, t)
    return np.sqrt(1.0 - beta) * x_prev + np.sqrt(beta) * eps


def gauss_loss(eps, eps_hat) -> float:
    """Batch mean of the per-row mean squared error; 0 for an empty block."""
    eps = np.asarray(eps, dtype=np.float64)
    if eps.size == 0:
        return 0.0
    diff = np.atleast_2d(eps - eps_hat)
    return float(np.mean(np.mean(diff * diff, axis=1)))


def gauss_loss_grad(eps, eps_hat) -> np.ndarray:
    diff = np.atleast_2d(eps_hat - eps)
    if diff.size == 0:
        return np.zeros_like(diff)
    n, d = diff.shape
    return 2.0 * diff / (n * d)


def predicted_mean(x_t, t, eps_hat, schedule: NoiseSchedule) -> np.ndarray:
    alpha = _per_row(schedule.alpha, t)
    beta = _per_row(schedule.beta, t)
    abar = _per_row(schedule.alpha_bar, t)
    return (x_t - beta / np.sqrt(1.0 - abar) * eps_hat) / np.sqrt(alpha)


def posterior_mean_var(x0, x_t, t, schedule: NoiseSchedule):
    """Mean and variance of ``q(x_{t-1} | x_t, x_0)``."""
    t = np.asarray(t)
    alpha = _per_row(schedule.alpha, t)
    beta = _per_row(schedule.beta, t)
    abar = _per_row(schedule.alpha_bar, t)
    abar_prev = _per_row(schedule.alpha_bar, t - 1)
    mean = (np.sqrt(abar_prev) * beta * x0 + np.sqrt(alpha) * (1.0 - abar_prev) * x_t) / (1.0 - abar)
    var = _per_row(schedule.posterior_variance, t)
    return mean, var


def p_sample_gauss(x_t, t: int, eps_hat, schedule: NoiseSchedule, z) -> np.ndarray:
    """Ancestral step ``x_{t-1} = mu + sigma_t z``; no noise is added at t = 1."""
    mu = predicted_mean(x_t, t, eps_hat, schedule)
    if t == 1:
        return mu
    return mu + np.sqrt(schedule.posterior_variance[t]) * z


def gauss_kl(mean1, var1, mean2, var2) -> np.ndarray:
    """KL(N(mean1, var1) || N(mean2, var2)) summed over the last axis (diagonal)."""
    mean1, mean2 = np.asarray(mean1), np.asarray(mean2)
    var1 = np.broadcast_to(var1, mean1.shape)
    var2 = np.broadcast_to(var2, mean1.shape)
    kl = 0.5 * (np.log(var2 / var1) + (var1 + (mean1 - mean2) ** 2) / var2 - 1.0)
    return kl.sum(axis=-1)


def step_kl(x0, x_t, t, eps_hat, schedule: NoiseSchedule) -> np.ndarray:
    """The per-step term KL(q(x_{t-1}|x_t,x_0) || p(x_{t-1}|x_t)) for t > 1.

    The reverse variance is the fixed posterior variance, so only the means
    differ.
    """
    mean, var = posterior_mean_var(x0, x_t, t, schedule)
    mu = predicted_mean(x_t, t, eps_hat, schedule)
    return gauss_kl(mean, var, mu, var)


def prior_kl(x0, schedule: NoiseSchedule) -> np.ndarray:
    """Diagnostic KL(q(x_T | x_0) || N(0, I)); constant in the network weights."""
    abar = schedule.alpha_bar[schedule.T]
    return gauss_kl(np.sqrt(abar) * np.asarray(x0), 1.0 - abar, 0.0, 1.0)
