import numpy as np

from tabddpm.schedule import NoiseSchedule


def custom_schedule(betas) -> NoiseSchedule:
    """Schedule from explicit per-step betas (index 1..T), allowing 0 and 1."""
    beta = np.concatenate([[0.0], np.asarray(betas, dtype=np.float64)])
    alpha = 1.0 - beta
    return NoiseSchedule(len(betas), "custom", 0.0, 0.0, beta, alpha, np.cumprod(alpha))


def numeric_grad(f, arr, h=1e-5):
    """Central differences of scalar ``f()`` w.r.t. every entry of ``arr`` (perturbed in place)."""
    g = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = arr[i]
        arr[i] = old + h
        fp = f()
        arr[i] = old - h
        fm = f()
        arr[i] = old
        g[i] = (fp - fm) / (2 * h)
    return g


def max_rel_error(analytic, numeric):
    """Largest entrywise difference relative to the tensor's largest gradient entry."""
    scale = max(np.abs(numeric).max(), np.abs(analytic).max(), 1e-12)
    return float(np.abs(analytic - numeric).max() / scale)
