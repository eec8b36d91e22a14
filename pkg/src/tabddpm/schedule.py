"""Variance schedules and sinusoidal timestep embeddings."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step noise rates.

    Arrays have length ``T + 1`` and are indexed by the timestep directly;
    index 0 is the clean-data convention (``beta[0] = 0``,
    ``alpha_bar[0] = 1``).
    """

    T: int
    kind: str
    beta_start: float
    beta_end: float
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray

    @property
    def posterior_variance(self) -> np.ndarray:
        # beta_tilde_t = beta_t (1 - abar_{t-1}) / (1 - abar_t); 0 at t=0 and t=1
        var = np.zeros(self.T + 1)
        t = np.arange(1, self.T + 1)
        var[1:] = self.beta[t] * (1.0 - self.alpha_bar[t - 1]) / (1.0 - self.alpha_bar[t])
        return var

    def to_dict(self) -> dict:
        return {"T": self.T, "kind": self.kind, "beta_start": self.beta_start, "beta_end": self.beta_end}

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseSchedule":
        return make_schedule(d["T"], d["kind"], d["beta_start"], d["beta_end"])


def make_schedule(T: int, kind: str = "linear", beta_start: float = 1e-4, beta_end: float = 0.02) -> NoiseSchedule:
    if int(T) != T or T < 1:
        raise ValueError(f"T must be a positive integer, got {T}")
    T = int(T)
    if kind == "linear":
        if not (0.0 < beta_start <= beta_end < 1.0):
            raise ValueError(f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}")
        betas = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    elif kind == "cosine":
        s = 0.008
        steps = np.arange(T + 1, dtype=np.float64) / T
        f = np.cos((steps + s) / (1 + s) * math.pi / 2) ** 2
        abar = f / f[0]
        betas = np.clip(1.0 - abar[1:] / abar[:-1], 1e-12, 0.999)
    else:
        raise ValueError(f"unknown schedule kind {kind!r}")
    beta = np.concatenate([[0.0], betas])
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    return NoiseSchedule(T, kind, float(beta_start), float(beta_end), beta, alpha, alpha_bar)


def sin_time_embed(t, dim: int) -> np.ndarray:
    """Interleaved sinusoidal embedding.

    Entry ``2i`` is ``sin(t * w_i)`` and entry ``2i + 1`` is
    ``cos(t * w_i)`` with ``w_i = 10000 ** (-2i / dim)``. ``t`` may be a
    scalar (returns shape ``(dim,)``) or an array (returns ``(n, dim)``).
    """
    if dim <= 0 or dim % 2:
        raise ValueError(f"embedding dim must be a positive even integer, got {dim}")
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    freqs = 10000.0 ** (-2.0 * np.arange(dim // 2) / dim)
    args = t[:, None] * freqs[None, :]
    out = np.empty((t.shape[0], dim))
    out[:, 0::2] = np.sin(args)
    out[:, 1::2] = np.cos(args)
    return out[0] if scalar else out
