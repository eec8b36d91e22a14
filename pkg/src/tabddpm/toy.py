"""A small synthetic mixed-type table used by the tests and the CLI."""

from __future__ import annotations

import numpy as np
import pandas as pd

from .data import ColumnSpec, TableSchema

TOY_SCHEMA = TableSchema(
    [
        ColumnSpec("x1", "continuous"),
        ColumnSpec("x2", "continuous"),
        ColumnSpec("color", "categorical", ("red", "green", "blue")),
        ColumnSpec("label", "categorical", ("0", "1")),
    ],
    target="label",
)


def make_toy(n: int = 2000, seed: int = 0, positive_rate: float = 0.5) -> pd.DataFrame:
    """Two correlated Gaussian-mixture features, a 3-level category and a binary label.

    The label picks a mixture component (agreeing 85% of the time); the
    component sets the mean of ``(x1, x2)`` and the category frequencies.
    """
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < positive_rate).astype(int)
    z = np.where(rng.random(n) < 0.85, y, 1 - y)
    means = np.array([[-1.0, -0.5], [1.5, 1.0]])
    cov = np.array([[1.0, 0.6], [0.6, 0.8]])
    x = means[z] + rng.multivariate_normal(np.zeros(2), cov, size=n)
    color_p = np.array([[0.6, 0.3, 0.1], [0.1, 0.3, 0.6]])
    u = rng.random(n)
    color = (np.cumsum(color_p[z], axis=1) < u[:, None]).sum(axis=1)
    levels = TOY_SCHEMA["color"].levels
    return pd.DataFrame({
        "x1": x[:, 0],
        "x2": x[:, 1],
        "color": pd.Series([levels[i] for i in color], dtype=object),
        "label": pd.Series([str(v) for v in y], dtype=object),
    })
