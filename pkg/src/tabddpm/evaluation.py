"""Quality/privacy evaluation protocol and report assembly."""

from __future__ import annotations

import numpy as np
import pandas as pd

from .data import TableEncoder, TableSchema
from .metrics import (
    dcr,
    dim_stats,
    dimwise_prediction,
    dimwise_probability_rmse,
    median_heuristic,
    mir,
    mir_threshold,
    mmd_rbf,
)


def record_encoder(schema: TableSchema, real_train: pd.DataFrame) -> TableEncoder:
    """Encoder over every column, target included as an ordinary one-hot block.

    Metrics compare whole records, so the target is not split off here.
    Scaling statistics come from ``real_train``.
    """
    flat = TableSchema(schema.columns, target=None)
    return TableEncoder(flat).fit(real_train)


def _summary(values) -> dict:
    vals = np.asarray(values, dtype=np.float64)
    return {"mean": float(vals.mean()), "std": float(vals.std()), "n_seeds": int(vals.size)}


def evaluate(real_train: pd.DataFrame, synth: pd.DataFrame, holdout: pd.DataFrame, schema: TableSchema,
             eval_seeds=(0, 1, 2), mir_thresh=None, mmd_bandwidth=None) -> dict:
    """Score ``synth`` against ``real_train`` (members) and ``holdout`` (non-members).

    Returns a JSON-ready dict with ``metrics`` (mean/std over evaluation
    seeds), ``provenance`` and the per-dimension vectors behind the
    dimension-wise plots (``vectors``).
    """
    enc = record_encoder(schema, real_train)
    R, S, H = enc.transform(real_train), enc.transform(synth), enc.transform(holdout)
    blocks = enc.blocks()
    names = enc.feature_names_out()

    sigma = median_heuristic(R, S) if mmd_bandwidth is None else float(mmd_bandwidth)
    values = {k: [] for k in ("dimwise_probability_rmse", "dimwise_prediction_rmse", "mmd", "dcr", "mir")}
    thresholds, notes = [], []
    n_mir = min(len(R), len(H))
    pred = None
    for seed in eval_seeds:
        rng = np.random.default_rng(seed)
        values["dimwise_probability_rmse"].append(dimwise_probability_rmse(R, S))
        values["mmd"].append(mmd_rbf(R, S, sigma))
        values["dcr"].append(dcr(R, S))
        pred = dimwise_prediction(R, S, H, blocks, seed)
        f_real, f_synth, dims, skipped = pred
        values["dimwise_prediction_rmse"].append(
            float(np.sqrt(np.mean((f_real - f_synth) ** 2))) if dims else float("nan"))
        members = R[np.sort(rng.choice(len(R), n_mir, replace=False))]
        non_members = H[np.sort(rng.choice(len(H), n_mir, replace=False))]
        thr = mir_threshold(members, non_members, S) if mir_thresh is None else float(mir_thresh)
        thresholds.append(thr)
        values["mir"].append(mir(members, non_members, S, thr))

    if sigma <= 0:
        notes.append("MMD bandwidth is 0 (all pooled points identical); MMD reported as 0")
    f_real, f_synth, dims, skipped = pred
    report = {
        "metrics": {k: _summary(v) for k, v in values.items()},
        "provenance": {
            "eval_seeds": list(eval_seeds),
            "n_real_train": len(R),
            "n_synthetic": len(S),
            "n_holdout": len(H),
            "mir_threshold": "auto (pooled median nearest-synthetic distance)" if mir_thresh is None else mir_thresh,
            "mir_thresholds_used": thresholds,
            "mir_sample_size_per_class": n_mir,
            "mmd_bandwidth": sigma,
            "mmd_bandwidth_rule": "median heuristic" if mmd_bandwidth is None else "explicit",
            "dimwise_prediction_skipped": [names[d] for d in skipped],
            "space": "encoded (min-max continuous, one-hot categorical incl. target)",
            "notes": notes,
        },
    }
    report["vectors"] = {
        "dimwise_probability": {"dimension": names, "real": dim_stats(R).tolist(), "synthetic": dim_stats(S).tolist()},
        "dimwise_prediction": {"dimension": [names[d] for d in dims], "real": f_real.tolist(),
                               "synthetic": f_synth.tolist()},
    }
    return report
