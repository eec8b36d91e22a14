"""Schema handling, CSV I/O and the encoder between raw tables and model space."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError


class SchemaError(ValueError):
    pass


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str  # "continuous" | "categorical"
    levels: tuple = ()

    def __post_init__(self):
        if self.kind not in ("continuous", "categorical"):
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "categorical":
            levels = tuple(str(v) for v in self.levels)
            if len(levels) < 2:
                raise SchemaError(f"column {self.name!r}: a categorical column needs at least 2 levels")
            if len(set(levels)) != len(levels):
                raise SchemaError(f"column {self.name!r}: duplicate levels")
            object.__setattr__(self, "levels", levels)
        elif self.levels:
            raise SchemaError(f"column {self.name!r}: continuous columns take no levels")

    @property
    def is_categorical(self) -> bool:
        return self.kind == "categorical"

    @property
    def n_levels(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class TableSchema:
    columns: tuple
    target: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("column names must be unique")
        if self.target is not None:
            if self.target not in names:
                raise SchemaError(f"target {self.target!r} is not a column")
            if not self[self.target].is_categorical:
                raise SchemaError(f"target {self.target!r} must be categorical")
        if not self.feature_columns:
            raise SchemaError("schema has no feature columns")

    def __getitem__(self, name: str) -> ColumnSpec:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def names(self) -> list:
        return [c.name for c in self.columns]

    @property
    def feature_columns(self) -> list:
        return [c for c in self.columns if c.name != self.target]

    @property
    def continuous(self) -> list:
        return [c for c in self.feature_columns if not c.is_categorical]

    @property
    def categorical(self) -> list:
        return [c for c in self.feature_columns if c.is_categorical]

    def to_dict(self) -> dict:
        cols = []
        for c in self.columns:
            d = {"name": c.name, "kind": c.kind}
            if c.is_categorical:
                d["levels"] = list(c.levels)
            cols.append(d)
        return {"columns": cols, "target": self.target}

    @classmethod
    def from_dict(cls, d: dict) -> "TableSchema":
        try:
            cols = [ColumnSpec(c["name"], c["kind"], tuple(c.get("levels", ()))) for c in d["columns"]]
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema: {exc}") from exc
        return cls(cols, d.get("target"))

    @classmethod
    def load(cls, path) -> "TableSchema":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON ({exc})") from exc

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_csv(path, schema: TableSchema) -> pd.DataFrame:
    """Read a CSV and validate every cell against ``schema``.

    The header must name exactly the schema columns (any order). Continuous
    cells must parse as finite floats; categorical cells must be declared
    levels. Missing values are rejected. Errors carry the 1-based line
    number and the column name.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in header]
        missing = [n for n in schema.names if n not in header]
        if missing:
            raise DataError(f"{path}: header is missing column(s) {missing}")
        unknown = [h for h in header if h not in schema.names]
        if unknown:
            raise DataError(f"{path}: unknown column(s) {unknown}")
        if len(set(header)) != len(header):
            raise DataError(f"{path}: duplicate header names")

        data = {n: [] for n in schema.names}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: line {lineno}: expected {len(header)} cells, got {len(row)}")
            for name, cell in zip(header, row):
                col = schema[name]
                cell = cell.strip()
                if cell == "":
                    raise DataError(f"{path}: line {lineno}, column {name!r}: missing value")
                if col.is_categorical:
                    if cell not in col.levels:
                        raise DataError(
                            f"{path}: line {lineno}, column {name!r}: unknown level {cell!r}"
                        )
                    data[name].append(cell)
                else:
                    try:
                        v = float(cell)
                    except ValueError:
                        raise DataError(
                            f"{path}: line {lineno}, column {name!r}: non-numeric value {cell!r}"
                        ) from None
                    if not math.isfinite(v):
                        raise DataError(f"{path}: line {lineno}, column {name!r}: non-finite value")
                    data[name].append(v)
    if not data[schema.names[0]]:
        raise DataError(f"{path}: no data rows")
    return _frame(data, schema)


def _frame(data: dict, schema: TableSchema) -> pd.DataFrame:
    cols = {}
    for c in schema.columns:
        if c.is_categorical:
            cols[c.name] = pd.Series(data[c.name], dtype=object)
        else:
            cols[c.name] = pd.Series(data[c.name], dtype=np.float64)
    return pd.DataFrame(cols)


def csv_text(table: pd.DataFrame, schema: TableSchema) -> str:
    # repr() gives the shortest exact round-trip form of a float
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(schema.names)
    columns = []
    for c in schema.columns:
        vals = table[c.name].tolist()
        columns.append([str(v) for v in vals] if c.is_categorical else [repr(float(v)) for v in vals])
    for row in zip(*columns):
        w.writerow(row)
    return buf.getvalue()


def write_csv(table: pd.DataFrame, path, schema: TableSchema) -> None:
    Path(path).write_text(csv_text(table, schema), encoding="utf-8")


def split(table: pd.DataFrame, ratios=(0.70, 0.15, 0.15), seed: int = 0):
    """Shuffle and partition into (train, val, test).

    Validation and test sizes are ``floor(ratio * n)``; every leftover row
    goes to train, so 10 rows split 8/1/1 and 100 rows split 70/15/15.
    """
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) < 0:
        raise ValueError(f"ratios must be three nonnegative numbers summing to 1, got {ratios}")
    n = len(table)
    if n < 3:
        raise ValueError("need at least 3 rows to split")
    n_val = int(math.floor(ratios[1] * n + 1e-9))
    n_test = int(math.floor(ratios[2] * n + 1e-9))
    n_train = n - n_val - n_test
    perm = np.random.default_rng(seed).permutation(n)
    parts = np.split(perm, [n_train, n_train + n_val])
    return tuple(table.iloc[np.sort(p)].reset_index(drop=True) for p in parts)


@dataclass
class EncodedMatrix:
    values: np.ndarray
    labels: Optional[np.ndarray] = None

    def __len__(self):
        return self.values.shape[0]


class TableEncoder(TransformerMixin, BaseEstimator):
    """Map a raw table to model space and back.

    Continuous features are min-max scaled with statistics taken from the
    table passed to ``fit``; categorical features become one-hot blocks in
    declared level order. The target column (if any) is kept out of the
    feature matrix and is encoded separately by :meth:`encode_target`.
    Layout: ``[continuous block | one-hot block per categorical column]``.
    """

    def __init__(self, schema: TableSchema):
        self.schema = schema

    def fit(self, X: pd.DataFrame, y=None):
        if len(X) == 0:
            raise DataError("cannot fit on an empty table")
        self._check_columns(X)
        cont = self.schema.continuous
        mins, maxs = [], []
        for c in cont:
            v = X[c.name].to_numpy(dtype=np.float64)
            lo, hi = float(v.min()), float(v.max())
            if not hi > lo:
                raise DataError(f"continuous column {c.name!r} is constant ({lo}); cannot min-max scale")
            mins.append(lo)
            maxs.append(hi)
        self.data_min_ = np.array(mins, dtype=np.float64)
        self.data_max_ = np.array(maxs, dtype=np.float64)
        self._set_layout()
        return self

    def _set_layout(self):
        self.n_cont_ = len(self.schema.continuous)
        self.cat_sizes_ = [c.n_levels for c in self.schema.categorical]
        self.n_classes_ = self.schema[self.schema.target].n_levels if self.schema.target else 0
        self.n_features_out_ = self.n_cont_ + sum(self.cat_sizes_)

    def _check_fitted(self):
        if not hasattr(self, "data_min_"):
            raise NotFittedError("TableEncoder is not fitted yet")

    def _check_columns(self, X, with_target=False):
        needed = [c.name for c in self.schema.feature_columns]
        if with_target and self.schema.target:
            needed.append(self.schema.target)
        missing = [n for n in needed if n not in X.columns]
        if missing:
            raise DataError(f"table is missing column(s) {missing}")

    def transform(self, X: pd.DataFrame) -> np.ndarray:
        self._check_fitted()
        self._check_columns(X)
        n = len(X)
        out = np.zeros((n, self.n_features_out_), dtype=np.float64)
        for j, c in enumerate(self.schema.continuous):
            v = X[c.name].to_numpy(dtype=np.float64)
            out[:, j] = (v - self.data_min_[j]) / (self.data_max_[j] - self.data_min_[j])
        offset = self.n_cont_
        for c in self.schema.categorical:
            out[np.arange(n), offset + _level_index(X[c.name], c)] = 1.0
            offset += c.n_levels
        return out

    def encode_target(self, X: pd.DataFrame) -> Optional[np.ndarray]:
        if self.schema.target is None:
            return None
        if self.schema.target not in X.columns:
            raise DataError(f"table is missing target column {self.schema.target!r}")
        return _level_index(X[self.schema.target], self.schema[self.schema.target])

    def encode(self, X: pd.DataFrame) -> EncodedMatrix:
        return EncodedMatrix(self.transform(X), self.encode_target(X))

    def inverse_transform(self, X: np.ndarray, y: Optional[np.ndarray] = None) -> pd.DataFrame:
        self._check_fitted()
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_out_:
            raise DataError(f"expected encoded width {self.n_features_out_}, got shape {X.shape}")
        data = {}
        for j, c in enumerate(self.schema.continuous):
            data[c.name] = X[:, j] * (self.data_max_[j] - self.data_min_[j]) + self.data_min_[j]
        offset = self.n_cont_
        for c in self.schema.categorical:
            idx = np.argmax(X[:, offset:offset + c.n_levels], axis=1)
            data[c.name] = [c.levels[i] for i in idx]
            offset += c.n_levels
        if self.schema.target is not None:
            if y is None:
                raise DataError("labels are required to decode a conditional table")
            levels = self.schema[self.schema.target].levels
            y = np.asarray(y)
            if y.shape != (X.shape[0],) or (len(y) and (y.min() < 0 or y.max() >= len(levels))):
                raise DataError("labels have the wrong shape or are out of range")
            data[self.schema.target] = [levels[i] for i in y]
        return _frame(data, self.schema)

    def feature_names_out(self) -> list:
        self._check_fitted()
        names = [c.name for c in self.schema.continuous]
        for c in self.schema.categorical:
            names.extend(f"{c.name}={lvl}" for lvl in c.levels)
        return names

    def blocks(self) -> list:
        """(start, stop) slices of each one-hot block in the encoded matrix."""
        out, offset = [], self.n_cont_
        for k in self.cat_sizes_:
            out.append((offset, offset + k))
            offset += k
        return out

    def to_dict(self) -> dict:
        self._check_fitted()
        return {
            "schema": self.schema.to_dict(),
            "data_min": self.data_min_.tolist(),
            "data_max": self.data_max_.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TableEncoder":
        enc = cls(TableSchema.from_dict(d["schema"]))
        enc.data_min_ = np.array(d["data_min"], dtype=np.float64)
        enc.data_max_ = np.array(d["data_max"], dtype=np.float64)
        enc._set_layout()
        return enc


def _level_index(values: pd.Series, col: ColumnSpec) -> np.ndarray:
    lookup = {lvl: i for i, lvl in enumerate(col.levels)}
    try:
        return np.array([lookup[str(v)] for v in values], dtype=np.int64)
    except KeyError as exc:
        raise DataError(f"column {col.name!r}: unknown level {exc.args[0]!r}") from None


def fit_transform(table: pd.DataFrame, schema: TableSchema):
    """Fit an encoder on ``table`` and return ``(EncodedMatrix, encoder)``."""
    enc = TableEncoder(schema).fit(table)
    return enc.encode(table), enc
