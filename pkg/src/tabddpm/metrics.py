"""Quality and privacy metrics computed in encoded (model) space."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist, pdist
from sklearn.linear_model import LogisticRegression
from sklearn.metrics import f1_score


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.shape[0] == 0:
        raise ValueError("metric input is empty")
    return a


def _check_widths(a, b):
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"encoded widths differ: {a.shape[1]} vs {b.shape[1]}")


def dim_stats(m) -> np.ndarray:
    """Per-dimension mean: category frequency for one-hot dims, mean for continuous."""
    return _as_matrix(m).mean(axis=0)


def dimwise_probability_rmse(real, synth) -> float:
    real, synth = _as_matrix(real), _as_matrix(synth)
    _check_widths(real, synth)
    d = dim_stats(real) - dim_stats(synth)
    return float(np.sqrt(np.mean(d * d)))


def _binarize(col, threshold, is_binary):
    return (col > 0.5).astype(int) if is_binary else (col > threshold).astype(int)


def dimwise_prediction(real, synth, real_test, blocks=(), seed: int = 0):
    """Per-dimension F1 of classifiers trained on real vs synthetic rows.

    For each encoded dimension ``d`` a logistic regression predicts ``d``
    from every dimension outside ``d``'s own one-hot block (a block's
    other entries determine ``d`` exactly). One-hot dimensions are already
    binary; continuous dimensions are thresholded at the median of
    ``real``. Both classifiers are scored on ``real_test`` at decision
    threshold 0.5.

    Returns ``(f1_real, f1_synth, dims, skipped)``; a dimension is skipped
    when ``real`` or ``real_test`` holds a single class after binarizing.
    """
    real, synth, real_test = _as_matrix(real), _as_matrix(synth), _as_matrix(real_test)
    _check_widths(real, synth)
    _check_widths(real, real_test)
    width = real.shape[1]
    if width < 2:
        raise ValueError("dimension-wise prediction needs at least 2 dimensions")
    group = np.arange(width)
    for g, (lo, hi) in enumerate(blocks):
        group[lo:hi] = width + g
    binary = np.zeros(width, dtype=bool)
    for lo, hi in blocks:
        binary[lo:hi] = True

    f_real, f_synth, dims, skipped = [], [], [], []
    for d in range(width):
        feats = group != group[d]
        if not feats.any():
            skipped.append(d)
            continue
        thr = float(np.median(real[:, d]))
        y_real = _binarize(real[:, d], thr, binary[d])
        y_test = _binarize(real_test[:, d], thr, binary[d])
        y_synth = _binarize(synth[:, d], thr, binary[d])
        if len(np.unique(y_real)) < 2 or len(np.unique(y_test)) < 2:
            skipped.append(d)
            continue
        scores = []
        for X, y in ((real, y_real), (synth, y_synth)):
            if len(np.unique(y)) < 2:
                pred = np.full(len(y_test), y[0])
            else:
                clf = LogisticRegression(max_iter=1000, random_state=seed).fit(X[:, feats], y)
                pred = (clf.predict_proba(real_test[:, feats])[:, 1] >= 0.5).astype(int)
            scores.append(f1_score(y_test, pred, zero_division=0))
        f_real.append(scores[0])
        f_synth.append(scores[1])
        dims.append(d)
    return np.array(f_real), np.array(f_synth), dims, skipped


def dimwise_prediction_rmse(real, synth, real_test, blocks=(), seed: int = 0) -> float:
    f_real, f_synth, dims, _ = dimwise_prediction(real, synth, real_test, blocks, seed)
    if not dims:
        return float("nan")
    return float(np.sqrt(np.mean((f_real - f_synth) ** 2)))


def median_heuristic(real, synth) -> float:
    """Median pairwise Euclidean distance over the pooled sample."""
    pooled = np.vstack([_as_matrix(real), _as_matrix(synth)])
    if pooled.shape[0] < 2:
        return 0.0
    return float(np.median(pdist(pooled)))


def mmd_rbf(real, synth, bandwidth=None) -> float:
    """Biased squared MMD with kernel ``exp(-|a-b|^2 / (2 sigma^2))``.

    ``bandwidth=None`` uses the median heuristic. A zero bandwidth (every
    pooled point identical) yields 0.
    """
    real, synth = _as_matrix(real), _as_matrix(synth)
    _check_widths(real, synth)
    sigma = median_heuristic(real, synth) if bandwidth is None else float(bandwidth)
    if sigma <= 0:
        return 0.0
    gamma = 1.0 / (2.0 * sigma * sigma)

    def k(a, b):
        return np.exp(-gamma * cdist(a, b, "sqeuclidean")).mean()

    return float(max(k(real, real) + k(synth, synth) - 2.0 * k(real, synth), 0.0))


def nearest_distances(query, reference) -> np.ndarray:
    query, reference = _as_matrix(query), _as_matrix(reference)
    _check_widths(query, reference)
    dist, _ = cKDTree(reference).query(query, k=1)
    return dist


def dcr(real, synth) -> float:
    """Median over synthetic rows of the distance to the closest real row."""
    return float(np.median(nearest_distances(synth, real)))


def mir_threshold(members, non_members, synth) -> float:
    pooled = np.vstack([_as_matrix(members), _as_matrix(non_members)])
    return float(np.median(nearest_distances(pooled, synth)))


def mir(members, non_members, synth, threshold=None) -> float:
    """F1 of the attack "member iff some synthetic row is closer than ``threshold``".

    ``threshold=None`` uses the median nearest-synthetic distance over
    members and non-members pooled. Members are the positive class; with no
    predicted positives F1 is 0.
    """
    members, non_members = _as_matrix(members), _as_matrix(non_members)
    if threshold is None:
        threshold = mir_threshold(members, non_members, synth)
    pred = np.concatenate([nearest_distances(members, synth), nearest_distances(non_members, synth)]) < threshold
    truth = np.concatenate([np.ones(len(members), int), np.zeros(len(non_members), int)])
    return float(f1_score(truth, pred.astype(int), zero_division=0))
