from __future__ import annotations

import pytest

from oovtab.backend import MockBackend, MockModelSpec
from oovtab.dataset import ColumnSchema, TabularDataset
from oovtab.verbalizer import ClassSpec, ClassVerbalizer


def make_dataset(columns: dict[str, list], labels: list[str],
                 class_column: str = "cls") -> TabularDataset:
    """Build a dataset from name -> values columns; kinds inferred from types."""
    names = list(columns)
    schema = []
    for j, name in enumerate(names):
        values = columns[name]
        numeric = all(v is None or isinstance(v, (int, float)) for v in values)
        schema.append(ColumnSchema(name=name, kind="numeric" if numeric else "categorical",
                                   index=j))
    n = len(labels)
    rows = tuple(
        tuple(float(columns[name][i]) if isinstance(columns[name][i], (int, float))
              else columns[name][i] for name in names)
        for i in range(n)
    )
    class_names = []
    for y in labels:
        if y not in class_names:
            class_names.append(y)
    return TabularDataset(schema=tuple(schema), rows=rows, labels=tuple(labels),
                          class_names=tuple(class_names), class_column=class_column)


@pytest.fixture
def yes_no_verbalizer() -> ClassVerbalizer:
    return ClassVerbalizer(specs=(
        ClassSpec(label="Yes", central_word="Yes", synonyms=("yes", "yeah", "true")),
        ClassSpec(label="No", central_word="No", synonyms=("no", "false", "nope")),
    ), alpha1=0.9, alpha2=0.1)


@pytest.fixture
def symmetric_mock() -> MockBackend:
    """Two-class mock with zero bias and no planted tokens."""
    return MockBackend(MockModelSpec(
        token_weights={},
        bias=(0.0, 0.0),
        word_classes={"Yes": 0, "yes": 0, "yeah": 0, "true": 0,
                      "No": 1, "no": 1, "false": 1, "nope": 1},
    ))
