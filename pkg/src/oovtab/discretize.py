"""Categorical change: N-tile thresholds fitted on training data map numeric
values to "Category i" strings.

Thresholds are nearest-rank quantiles, so they are always observed training
values and need no interpolation.  A value lands in category
1 + #{thresholds strictly below it}: intervals are lower-exclusive /
upper-inclusive, which keeps the N categories balanced on the training
sample (each receives between floor(m/N) and ceil(m/N) of m distinct
values).  A fully constant column therefore maps everything to Category 1.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left
from dataclasses import dataclass
from pathlib import Path

from .dataset import ColumnSchema, TabularDataset, Value
from .errors import FitError, InvalidValueError, SchemaError

CATEGORY_PREFIX = "Category"


@dataclass(frozen=True)
class NTileBinner:
    """Immutable N-tile thresholds for one numeric column."""

    column: int
    n_categories: int
    thresholds: tuple[float, ...]

    def __post_init__(self):
        if len(self.thresholds) != self.n_categories - 1:
            raise FitError("threshold count must be n_categories - 1",
                           module="discretize", stage="construct")
        if any(a > b for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise FitError("thresholds must be non-decreasing",
                           module="discretize", stage="construct")

    def to_json(self) -> dict:
        return {"column": self.column, "n": self.n_categories,
                "thresholds": list(self.thresholds)}

    @staticmethod
    def from_json(doc: dict) -> "NTileBinner":
        return NTileBinner(column=int(doc["column"]), n_categories=int(doc["n"]),
                           thresholds=tuple(float(t) for t in doc["thresholds"]))


def fit_thresholds(train: TabularDataset, column: int, n: int) -> NTileBinner:
    """Fit N-tile thresholds on the non-missing training values of a column.

    Threshold Q_i is the nearest-rank quantile at level i/n: with the m
    values sorted ascending, Q_i = value at rank ceil(i*m/n) (1-indexed).
    """
    if n < 2:
        raise FitError(f"need at least 2 categories, got {n}",
                       module="discretize", stage="fit_thresholds")
    col = train.schema[column]
    if col.kind != "numeric":
        raise FitError(f"column {col.name!r} is categorical, cannot fit thresholds",
                       module="discretize", stage="fit_thresholds")
    values = sorted(v for v in train.column_values(column) if v is not None)
    m = len(values)
    if m == 0:
        raise FitError(f"column {col.name!r} has no non-missing training values",
                       module="discretize", stage="fit_thresholds")
    thresholds = tuple(values[math.ceil(i * m / n) - 1] for i in range(1, n))
    return NTileBinner(column=column, n_categories=n, thresholds=thresholds)


def transform_value(binner: NTileBinner, v: float) -> str:
    """Map a finite number to its "Category i" string.

    Category index is 1 + the number of thresholds strictly below v, so a
    value exactly at a threshold stays in the lower category and values
    above the last threshold land in Category N.
    """
    if not isinstance(v, (int, float)) or not math.isfinite(v):
        raise InvalidValueError(f"cannot bin non-finite value {v!r}",
                                module="discretize", stage="transform_value")
    # bisect_left on the sorted thresholds counts entries strictly below v.
    category = 1 + bisect_left(binner.thresholds, v)
    return f"{CATEGORY_PREFIX} {category}"


def transform_dataset(ds: TabularDataset, binners: list[NTileBinner]) -> TabularDataset:
    """Apply categorical change to every numeric column covered by a binner.

    Each numeric column must have exactly one binner; categorical columns,
    labels, and missing cells pass through untouched.
    """
    by_column = {}
    for b in binners:
        if b.column in by_column:
            raise SchemaError(f"two binners target column {b.column}",
                              module="discretize", stage="transform_dataset")
        by_column[b.column] = b
    numeric = {c.index for c in ds.schema if c.kind == "numeric"}
    if set(by_column) != numeric:
        raise SchemaError(
            f"binners cover columns {sorted(by_column)} but numeric columns are {sorted(numeric)}",
            module="discretize", stage="transform_dataset")

    schema = tuple(
        ColumnSchema(name=c.name, kind="categorical", index=c.index)
        if c.index in by_column else c
        for c in ds.schema
    )
    rows: list[tuple[Value, ...]] = []
    for row in ds.rows:
        cells = list(row)
        for idx, binner in by_column.items():
            if cells[idx] is not None:
                cells[idx] = transform_value(binner, cells[idx])
        rows.append(tuple(cells))
    return TabularDataset(schema=schema, rows=tuple(rows), labels=ds.labels,
                          class_names=ds.class_names, class_column=ds.class_column)


def fit_all_binners(train: TabularDataset, n: int,
                    skip_columns: tuple[str, ...] = ()) -> list[NTileBinner]:
    """Fit one binner per numeric column, minus the opted-out names."""
    binners = []
    for col in train.schema:
        if col.kind == "numeric" and col.name not in skip_columns:
            binners.append(fit_thresholds(train, col.index, n))
    return binners


def save_binners(binners: list[NTileBinner], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump([b.to_json() for b in binners], f, indent=2, sort_keys=True)
        f.write("\n")


def load_binners(path: str | Path) -> list[NTileBinner]:
    with open(path, "r", encoding="utf-8") as f:
        return [NTileBinner.from_json(doc) for doc in json.load(f)]
