"""Tabular datasets: CSV loading, schema inference, seeded row and column splits.

A dataset is an immutable bundle of typed feature columns plus a class label
per row.  Feature columns that later get hidden from training are the
out-of-variable (OOV) columns; the ones kept are in-variables (IVs).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Sequence

from .errors import ConfigError, ParseError, SchemaError
from .rng import SplitMix64

Kind = Literal["numeric", "categorical"]

#: Cell value: parsed number, raw text, or None for a missing entry.
Value = float | str | None


def round_half_away(x: float) -> int:
    """Round with halves away from zero (round(0.5) -> 1, round(-0.5) -> -1)."""
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def parse_numeric(text: str) -> float | None:
    """Parse text as a finite decimal number, or None if it is not one."""
    s = text.strip()
    if not s or "_" in s:
        return None
    try:
        v = float(s)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def format_value(v: Value) -> str:
    """Render a cell for CSV or prompt output; integers drop the '.0'."""
    if v is None:
        return ""
    if isinstance(v, float):
        if v == int(v) and abs(v) < 1e16:
            return str(int(v))
        return repr(v)
    return v


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: Kind
    index: int


@dataclass(frozen=True)
class TabularDataset:
    schema: tuple[ColumnSchema, ...]
    rows: tuple[tuple[Value, ...], ...]
    labels: tuple[str, ...]
    class_names: tuple[str, ...]
    class_column: str = "class"

    def __post_init__(self):
        names = [c.name for c in self.schema]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names in schema",
                              module="dataset", stage="construct")
        k = len(self.schema)
        for i, row in enumerate(self.rows):
            if len(row) != k:
                raise SchemaError(f"row {i} has {len(row)} values, expected {k}",
                                  module="dataset", stage="construct")
        if len(self.labels) != len(self.rows):
            raise SchemaError("label count does not match row count",
                              module="dataset", stage="construct")
        if len(self.class_names) < 2:
            raise SchemaError("need at least 2 distinct class labels",
                              module="dataset", stage="construct")
        known = set(self.class_names)
        for y in self.labels:
            if y not in known:
                raise SchemaError(f"label {y!r} not in class names",
                                  module="dataset", stage="construct")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_columns(self) -> int:
        return len(self.schema)

    def column_values(self, index: int) -> list[Value]:
        return [row[index] for row in self.rows]

    def column_named(self, name: str) -> ColumnSchema:
        for col in self.schema:
            if col.name == name:
                return col
        raise SchemaError(f"no column named {name!r}", module="dataset", stage="lookup")


@dataclass(frozen=True)
class OovSplit:
    """Partition of feature columns into in-variables and out-of-variables."""

    iv_columns: tuple[int, ...]
    oov_columns: tuple[int, ...]
    ratio: float
    seed: int

    def to_manifest(self) -> dict:
        return {"ratio": self.ratio, "seed": self.seed,
                "iv_columns": list(self.iv_columns),
                "oov_columns": list(self.oov_columns)}

    @staticmethod
    def from_manifest(doc: dict) -> "OovSplit":
        return OovSplit(iv_columns=tuple(doc["iv_columns"]),
                        oov_columns=tuple(doc["oov_columns"]),
                        ratio=float(doc["ratio"]), seed=int(doc["seed"]))


def _infer_kind(texts: Iterable[str]) -> Kind:
    saw_value = False
    for t in texts:
        if t.strip() == "":
            continue
        saw_value = True
        if parse_numeric(t) is None:
            return "categorical"
    return "numeric" if saw_value else "categorical"


def load_csv(path: str | Path, class_column: str) -> TabularDataset:
    """Load an RFC-4180 CSV with a header row; class_column becomes the labels.

    Column kinds are inferred conservatively: a column is numeric only if
    every non-missing value parses as a finite decimal number.  Empty cells
    load as missing.  Class names are recorded in order of first appearance.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"dataset file not found: {path}",
                          module="dataset", stage="load_csv")
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file, expected a header row",
                             module="dataset", stage="load_csv") from None
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise SchemaError(f"duplicate header names: {dupes}",
                              module="dataset", stage="load_csv")
        if class_column not in header:
            raise ConfigError(f"class column {class_column!r} not in header {header}",
                              module="dataset", stage="load_csv")
        class_idx = header.index(class_column)
        raw_rows: list[list[str]] = []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise ParseError(
                    f"line {lineno}: expected {len(header)} fields, got {len(record)}",
                    module="dataset", stage="load_csv")
            raw_rows.append(record)

    feature_names = [h for i, h in enumerate(header) if i != class_idx]
    labels = tuple(r[class_idx] for r in raw_rows)
    class_names: list[str] = []
    for y in labels:
        if y not in class_names:
            class_names.append(y)

    columns: list[list[str]] = [
        [r[i] for r in raw_rows] for i in range(len(header)) if i != class_idx
    ]
    kinds = [_infer_kind(col) for col in columns]
    schema = tuple(ColumnSchema(name=n, kind=k, index=j)
                   for j, (n, k) in enumerate(zip(feature_names, kinds)))

    rows: list[tuple[Value, ...]] = []
    for r in raw_rows:
        features = [x for i, x in enumerate(r) if i != class_idx]
        cells: list[Value] = []
        for raw, kind in zip(features, kinds):
            if raw.strip() == "":
                cells.append(None)
            elif kind == "numeric":
                cells.append(parse_numeric(raw))
            else:
                cells.append(raw)
        rows.append(tuple(cells))

    return TabularDataset(schema=schema, rows=tuple(rows), labels=labels,
                          class_names=tuple(class_names), class_column=class_column)


def save_csv(ds: TabularDataset, path: str | Path) -> None:
    """Write a dataset back out; load_csv(save_csv(ds)) preserves all values."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow([c.name for c in ds.schema] + [ds.class_column])
        for row, y in zip(ds.rows, ds.labels):
            writer.writerow([format_value(v) for v in row] + [y])


def train_test_split(ds: TabularDataset, test_fraction: float,
                     seed: int) -> tuple[TabularDataset, TabularDataset]:
    """Seeded disjoint row partition; |test| = round(test_fraction * n)."""
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError(f"test_fraction must be in (0, 1), got {test_fraction}",
                          module="dataset", stage="train_test_split")
    n = ds.n_rows
    if n < 2:
        raise ConfigError("need at least 2 rows to split",
                          module="dataset", stage="train_test_split")
    n_test = round_half_away(test_fraction * n)
    order = SplitMix64(seed).permutation(n)
    test_idx = sorted(order[:n_test])
    train_idx = sorted(order[n_test:])
    return _take_rows(ds, train_idx), _take_rows(ds, test_idx)


def _take_rows(ds: TabularDataset, indices: Sequence[int]) -> TabularDataset:
    return TabularDataset(
        schema=ds.schema,
        rows=tuple(ds.rows[i] for i in indices),
        labels=tuple(ds.labels[i] for i in indices),
        class_names=ds.class_names,
        class_column=ds.class_column,
    )


def make_oov_split(ds: TabularDataset, ratio: float, seed: int) -> OovSplit:
    """Pick round(ratio*K) feature columns uniformly at random as OOV.

    The selection is a prefix of one seeded shuffle of all column indices,
    so for a fixed seed the OOV sets at increasing ratios are nested.
    IV columns keep their original schema order; the class column is not a
    feature column and is never eligible.
    """
    if not 0.0 <= ratio < 1.0:
        raise ConfigError(f"oov ratio must be in [0, 1), got {ratio}",
                          module="dataset", stage="make_oov_split")
    k = ds.n_columns
    n_oov = round_half_away(ratio * k)
    order = SplitMix64(seed).permutation(k)
    oov = sorted(order[:n_oov])
    iv = sorted(order[n_oov:])
    return OovSplit(iv_columns=tuple(iv), oov_columns=tuple(oov),
                    ratio=ratio, seed=seed)


def project_columns(ds: TabularDataset, columns: Sequence[int]) -> TabularDataset:
    """Dataset containing exactly the requested columns in the requested order."""
    k = ds.n_columns
    seen = set()
    for c in columns:
        if not 0 <= c < k:
            raise SchemaError(f"column index {c} out of range [0, {k})",
                              module="dataset", stage="project_columns")
        if c in seen:
            raise SchemaError(f"duplicate column index {c}",
                              module="dataset", stage="project_columns")
        seen.add(c)
    schema = tuple(ColumnSchema(name=ds.schema[c].name, kind=ds.schema[c].kind, index=j)
                   for j, c in enumerate(columns))
    rows = tuple(tuple(row[c] for c in columns) for row in ds.rows)
    return TabularDataset(schema=schema, rows=rows, labels=ds.labels,
                          class_names=ds.class_names, class_column=ds.class_column)


def save_split_manifest(split: OovSplit, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(split.to_manifest(), f, indent=2, sort_keys=True)
        f.write("\n")


def load_split_manifest(path: str | Path) -> OovSplit:
    with open(path, "r", encoding="utf-8") as f:
        return OovSplit.from_manifest(json.load(f))
