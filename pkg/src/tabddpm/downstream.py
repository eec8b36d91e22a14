"""Downstream classifiers, scoring, and the utility / augmentation experiments."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression
from sklearn.metrics import accuracy_score, average_precision_score, f1_score, roc_auc_score
from sklearn.neighbors import KNeighborsClassifier
from sklearn.neural_network import MLPClassifier
from sklearn.tree import DecisionTreeClassifier

CLASSIFIER_KINDS = ("logistic-regression", "knn", "decision-tree", "mlp")
METRICS = ("accuracy", "f1", "auroc", "auprc")


def make_classifier(kind: str, seed: int = 0, k: int = 5):
    if kind == "logistic-regression":
        return LogisticRegression(max_iter=1000, random_state=seed)
    if kind == "knn":
        return KNeighborsClassifier(n_neighbors=k)
    if kind == "decision-tree":
        return DecisionTreeClassifier(criterion="gini", max_depth=5, random_state=seed)
    if kind == "mlp":
        return MLPClassifier(hidden_layer_sizes=(64,), solver="adam", max_iter=300, random_state=seed)
    raise ValueError(f"unknown classifier kind {kind!r}")


def fit_classifier(kind: str, X, y, seed: int = 0, **kw):
    y = np.asarray(y)
    if len(np.unique(y)) < 2:
        raise ValueError("training labels contain a single class")
    clf = make_classifier(kind, seed, **kw)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        return clf.fit(X, y)


def positive_proba(clf, X) -> np.ndarray:
    """Probability of label 1 for each row."""
    proba = clf.predict_proba(X)
    classes = list(clf.classes_)
    if 1 not in classes:
        return np.zeros(len(proba))
    return proba[:, classes.index(1)]


def score(y_true, probs) -> dict:
    """Accuracy and F1 at threshold 0.5, AUROC and AUPRC (``None`` for single-class ``y_true``)."""
    y_true = np.asarray(y_true).astype(int)
    probs = np.asarray(probs, dtype=np.float64)
    pred = (probs >= 0.5).astype(int)
    out = {
        "accuracy": float(accuracy_score(y_true, pred)),
        "f1": float(f1_score(y_true, pred, zero_division=0)),
        "auroc": None,
        "auprc": None,
    }
    if len(np.unique(y_true)) == 2:
        out["auroc"] = float(roc_auc_score(y_true, probs))
        out["auprc"] = float(average_precision_score(y_true, probs))
    return out


def _mean_std(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return {"mean": None, "std": None, "n": 0}
    return {"mean": float(np.mean(vals)), "std": float(np.std(vals)), "n": len(vals)}


def _binary_labels(model):
    if not model.conditional:
        raise ValueError("downstream experiments need a model trained with a target column")
    if model.encoder_.n_classes_ != 2:
        raise ValueError("downstream experiments support binary targets only")


@dataclass
class ExperimentResult:
    summary: dict
    records: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


def utility_experiment(real_train, real_test, model, gen_seeds=(0, 1, 2, 3, 4), eval_seeds=(0, 1, 2),
                       kinds=CLASSIFIER_KINDS) -> ExperimentResult:
    """Train every classifier on real and on synthetic rows; score both on ``real_test``.

    One synthetic table of ``len(real_train)`` rows is drawn per generation
    seed (labels from the training class prior); classifiers are refit per
    evaluation seed. Averages are unweighted over classifier kinds.
    """
    _binary_labels(model)
    enc = model.encoder_
    tr, te = enc.encode(real_train), enc.encode(real_test)
    records = []

    def run(X, y, gen_seed, eval_seed, source):
        for kind in kinds:
            clf = fit_classifier(kind, X, y, eval_seed)
            for metric, value in score(te.labels, positive_proba(clf, te.values)).items():
                records.append({"experiment": "utility", "classifier": kind, "gen_seed": gen_seed,
                                "eval_seed": eval_seed, "fraction": None, "train_data": source,
                                "metric": metric, "value": value})

    for e in eval_seeds:
        run(tr.values, tr.labels, None, e, "real")
    for g in gen_seeds:
        synth = model.sample_encoded(len(tr), balanced=False, random_state=g)
        for e in eval_seeds:
            run(synth.values, synth.labels, g, e, "synthetic")

    summary = {}
    for source in ("real", "synthetic"):
        summary[source] = {}
        for metric in METRICS:
            rows = [r for r in records if r["train_data"] == source and r["metric"] == metric]
            cells = {}
            for r in rows:
                cells.setdefault((r["gen_seed"], r["eval_seed"]), []).append(r["value"])
            # classifier-averaged value per seed cell, then mean/std across cells
            per_cell = [None if None in v else float(np.mean(v)) for _, v in sorted(cells.items(), key=str)]
            entry = _mean_std(per_cell)
            entry["per_classifier"] = {
                kind: _mean_std([r["value"] for r in rows if r["classifier"] == kind]) for kind in kinds
            }
            summary[source][metric] = entry
    summary["gap"] = {}
    for metric in METRICS:
        a, b = summary["real"][metric]["mean"], summary["synthetic"][metric]["mean"]
        summary["gap"][metric] = None if a is None or b is None else abs(a - b)
    return ExperimentResult(summary, records)


def augmentation_experiment(real_train, real_test, model, fractions=(0.0, 0.25, 0.5, 0.75, 1.0),
                            gen_seeds=(0, 1, 2, 3, 4), eval_seeds=(0,),
                            kinds=CLASSIFIER_KINDS) -> ExperimentResult:
    """F1 on ``real_test`` after appending class-balanced synthetic rows.

    For fraction ``f``, ``round(f * len(real_train))`` synthetic rows are
    appended to the full real training set; ``f = 0`` is the plain real
    baseline and does not depend on the generation seed.
    """
    _binary_labels(model)
    enc = model.encoder_
    tr, te = enc.encode(real_train), enc.encode(real_test)
    records, class_counts = [], {}
    for f in fractions:
        m = int(round(f * len(tr)))
        for g in (gen_seeds if m > 0 else (None,)):
            if m > 0:
                synth = model.sample_encoded(m, balanced=True, random_state=g)
                X = np.vstack([tr.values, synth.values])
                y = np.concatenate([tr.labels, synth.labels])
                class_counts[f"{f}/{g}"] = np.bincount(synth.labels, minlength=enc.n_classes_).tolist()
            else:
                X, y = tr.values, tr.labels
            for e in eval_seeds:
                for kind in kinds:
                    clf = fit_classifier(kind, X, y, e)
                    s = score(te.labels, positive_proba(clf, te.values))
                    records.append({"experiment": "augment", "classifier": kind, "gen_seed": g,
                                    "eval_seed": e, "fraction": f, "train_data": "real+synthetic" if m else "real",
                                    "metric": "f1", "value": s["f1"]})
    summary = {}
    for f in fractions:
        rows = [r for r in records if r["fraction"] == f]
        cells = {}
        for r in rows:
            cells.setdefault((r["gen_seed"], r["eval_seed"]), []).append(r["value"])
        entry = _mean_std([float(np.mean(v)) for _, v in sorted(cells.items(), key=str)])
        entry["per_classifier"] = {k: _mean_std([r["value"] for r in rows if r["classifier"] == k]) for k in kinds}
        summary[repr(float(f))] = entry
    return ExperimentResult({"f1_by_fraction": summary}, records, {"synthetic_class_counts": class_counts})
