"""Command-line entry point: ``tabddpm <command> ...``.

Exit codes: 0 success, 1 usage/config/input error, 2 runtime or numeric
error. Outputs are staged to temporary files and renamed into place only
after every output of a command has been produced.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .data import DataError, SchemaError, TableSchema, csv_text, load_csv, split
from .downstream import CLASSIFIER_KINDS, augmentation_experiment, utility_experiment
from .evaluation import evaluate
from .model import TabDDPM
from .toy import TOY_SCHEMA, make_toy

logger = logging.getLogger("tabddpm")

TRAIN_KEYS = ("T", "schedule", "beta_start", "beta_end", "hidden_dims", "embed_dim", "lr",
              "epochs", "batch_size", "argmax_final")
DEFAULT_FRACTIONS = (0.0, 0.25, 0.5, 0.75, 1.0)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_outputs(files: dict) -> None:
    """Write ``{path: text}`` atomically as a group: stage everything, then rename."""
    staged = []
    try:
        for path, text in files.items():
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            staged.append((tmp, path))
        for tmp, path in staged:
            os.replace(tmp, path)
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise


def _seeds(text: str) -> tuple:
    try:
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise UsageError(f"seeds must be comma-separated integers, got {text!r}") from None


def _fractions(text: str) -> tuple:
    try:
        vals = tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise UsageError(f"fractions must be comma-separated numbers, got {text!r}") from None
    if any(f < 0 for f in vals):
        raise UsageError("fractions must be nonnegative")
    return vals


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(cfg, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    unknown = set(cfg) - set(TRAIN_KEYS) - {"seed"}
    if unknown:
        raise UsageError(f"{path}: unknown config keys {sorted(unknown)}")
    return cfg


def _real_splits(args, schema):
    """(train, holdout) tables: explicit --holdout, or a seeded 70/15/15 split of --data."""
    data = load_csv(args.data, schema)
    if args.holdout:
        return data, load_csv(args.holdout, schema)
    train, _, test = split(data, seed=args.split_seed)
    return train, test


def _tidy_csv(records) -> str:
    buf = io.StringIO()
    cols = ["experiment", "classifier", "gen_seed", "eval_seed", "fraction", "train_data", "metric", "value"]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        w.writerow(["" if r[c] is None else (repr(r[c]) if isinstance(r[c], float) else r[c]) for c in cols])
    return buf.getvalue()


def _vector_csv(vec) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dimension", "real", "synthetic"])
    for row in zip(vec["dimension"], vec["real"], vec["synthetic"]):
        w.writerow([row[0], repr(row[1]), repr(row[2])])
    return buf.getvalue()


# -- commands ----------------------------------------------------------------

def cmd_make_toy(args):
    out = Path(args.out)
    table = make_toy(args.n, args.seed, args.positive_rate)
    write_outputs({
        out / "toy.csv": csv_text(table, TOY_SCHEMA),
        out / "schema.json": json.dumps(TOY_SCHEMA.to_dict(), indent=2) + "\n",
    })


def cmd_train(args):
    schema = TableSchema.load(args.schema)
    cfg = _load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.pop("seed", 0)
    cfg.pop("seed", None)
    if "hidden_dims" in cfg:
        cfg["hidden_dims"] = tuple(cfg["hidden_dims"])
    if args.epochs is not None:
        cfg["epochs"] = args.epochs
    data = load_csv(args.data, schema)
    out = Path(args.out)
    files = {}
    if args.no_split:
        train = data
    else:
        train, val, test = split(data, seed=seed)
        files[out / "train.csv"] = csv_text(train, schema)
        files[out / "val.csv"] = csv_text(val, schema)
        files[out / "test.csv"] = csv_text(test, schema)
    try:
        model = TabDDPM(schema, random_state=seed, **cfg)
    except TypeError as exc:
        raise UsageError(str(exc)) from exc
    model.fit(train)
    files[out / "model.json"] = model.dumps()
    files[out / "loss.csv"] = "epoch,loss\n" + "".join(
        f"{i + 1},{loss!r}\n" for i, loss in enumerate(model.loss_history_))
    write_outputs(files)


def cmd_sample(args):
    model = TabDDPM.load(args.model)
    if args.balanced and not model.conditional:
        raise UsageError("--balanced needs a model trained with a target column")
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    table = model.sample(args.n, balanced=args.balanced, random_state=args.seed)
    write_outputs({args.out: csv_text(table, model.schema)})


def cmd_evaluate(args):
    schema = TableSchema.load(args.schema)
    train, holdout = _real_splits(args, schema)
    synth = load_csv(args.synth, schema)
    report = evaluate(train, synth, holdout, schema, _seeds(args.eval_seeds), args.mir_threshold,
                      args.mmd_bandwidth)
    report["provenance"]["inputs"] = {"data": str(args.data), "synth": str(args.synth),
                                      "holdout": str(args.holdout) if args.holdout else None,
                                      "split_seed": None if args.holdout else args.split_seed}
    vectors = report.pop("vectors")
    out = Path(args.out)
    write_outputs({
        out / "report.json": _dumps(report),
        out / "dimwise_probability.csv": _vector_csv(vectors["dimwise_probability"]),
        out / "dimwise_prediction.csv": _vector_csv(vectors["dimwise_prediction"]),
    })


def _experiment_inputs(args):
    model = TabDDPM.load(args.model)
    if not model.conditional:
        raise UsageError("utility/augment need a model trained with a target column")
    train, holdout = _real_splits(args, model.schema)
    return model, train, holdout


def _experiment_report(model, result, args, extra):
    cfg = model.get_params()
    cfg.pop("schema")
    cfg["hidden_dims"] = list(cfg["hidden_dims"])
    return {
        "summary": result.summary,
        "provenance": {
            "model_config": cfg,
            "classifiers": list(CLASSIFIER_KINDS),
            "classifier_note": "reduced classifier set (logistic regression, kNN k=5, "
                               "decision tree depth 5, MLP 64); unweighted average across kinds",
            "gen_seeds": list(_seeds(args.gen_seeds)),
            "eval_seeds": list(_seeds(args.eval_seeds)),
            **extra,
            **result.extra,
        },
    }


def cmd_utility(args):
    model, train, holdout = _experiment_inputs(args)
    result = utility_experiment(train, holdout, model, _seeds(args.gen_seeds), _seeds(args.eval_seeds))
    out = Path(args.out)
    write_outputs({
        out / "utility_report.json": _dumps(_experiment_report(model, result, args, {})),
        out / "utility_tidy.csv": _tidy_csv(result.records),
    })


def cmd_augment(args):
    model, train, holdout = _experiment_inputs(args)
    fractions = _fractions(args.fractions)
    result = augmentation_experiment(train, holdout, model, fractions, _seeds(args.gen_seeds),
                                     _seeds(args.eval_seeds))
    out = Path(args.out)
    write_outputs({
        out / "augment_report.json": _dumps(_experiment_report(model, result, args,
                                                               {"fractions": list(fractions)})),
        out / "augment_tidy.csv": _tidy_csv(result.records),
    })


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tabddpm", description="Mixed-type tabular diffusion: train, sample, evaluate.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("make-toy-dataset", help="write the bundled toy table and its schema")
    s.add_argument("--out", required=True)
    s.add_argument("--n", type=int, default=2000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--positive-rate", type=float, default=0.5)
    s.set_defaults(func=cmd_make_toy)

    s = sub.add_parser("train", help="split the data, train a model, write model.json + loss.csv")
    s.add_argument("--data", required=True)
    s.add_argument("--schema", required=True)
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--epochs", type=int)
    s.add_argument("--no-split", action="store_true", help="train on the whole file")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("sample", help="generate synthetic rows from a model file")
    s.add_argument("--model", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--balanced", action="store_true")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    def real_args(s):
        s.add_argument("--data", required=True, help="real training rows (or the full table without --holdout)")
        s.add_argument("--holdout", help="real test rows; if absent --data is split 70/15/15")
        s.add_argument("--split-seed", type=int, default=0)
        s.add_argument("--eval-seeds", default="0,1,2")
        s.add_argument("--out", required=True)

    s = sub.add_parser("evaluate", help="quality and privacy metrics")
    real_args(s)
    s.add_argument("--synth", required=True)
    s.add_argument("--schema", required=True)
    s.add_argument("--mir-threshold", type=float)
    s.add_argument("--mmd-bandwidth", type=float)
    s.set_defaults(func=cmd_evaluate)

    for name, func, help_ in (("utility", cmd_utility, "train-on-synthetic, test-on-real"),
                              ("augment", cmd_augment, "augmentation curve")):
        s = sub.add_parser(name, help=help_)
        real_args(s)
        s.add_argument("--model", required=True)
        s.add_argument("--gen-seeds", default="0,1,2,3,4")
        if name == "augment":
            s.add_argument("--fractions", default=",".join(str(f) for f in DEFAULT_FRACTIONS))
        s.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (UsageError, SchemaError, DataError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"tabddpm: error: {exc}", file=sys.stderr)
        return 1
    except (FloatingPointError, ValueError, ArithmeticError) as exc:
        print(f"tabddpm: runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
