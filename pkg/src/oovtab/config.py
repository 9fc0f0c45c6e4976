"""Experiment configuration: one JSON document plus dotted-path overrides.

Every recognized key appears in DEFAULT_CONFIG with its default value;
loading deep-merges the user document over the defaults, then applies
"a.b.c=value" overrides (values parse as JSON literals when possible,
otherwise as strings).
"""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any

from .errors import ConfigError

DEFAULT_CONFIG: dict[str, Any] = {
    "dataset": None,
    "class_column": None,
    "test_fraction": 0.25,
    "split_seed": 7,
    "base_seed": 1234,
    "repetitions": 1,
    "positive_label": None,
    "metrics": ["accuracy", "f1", "auc"],
    "oov": {
        "ratio": 0.5,
        "seed": 11,
        "redraw_per_repetition": False,
    },
    "discretizer": {
        "enabled": True,
        "n": 4,
        "skip_columns": [],
    },
    "prompt": {
        "oov_indicator": "New information:",
        "iv_indicator": "Known information:",
        "question": "What is the class?",
        "pair_format": "{name} is {value}",
        "separator": ", ",
        "terminator": "@@@",
        "max_chars": None,
        "order_seed": 0,
        "oov_order_seed": 0,
        "icl_shots": 0,
        "random_word": {
            "enabled": False,
            "seed": 3,
            "pool": None,
        },
    },
    "verbalizer": {
        "alpha1": 0.9,
        "alpha2": 0.1,
        "classes": None,
    },
    "model": {
        "kind": "mock",
        "url": None,
        "mock_spec": None,
        "decision": "verbalizer",
        "parallelism": 1,
        "timeout": 30.0,
        "params": {
            "knn_k": 5,
            "logreg_l2": 1e-3,
            "logreg_epochs": 200,
            "logreg_lr": 1.0,
            "dtree_max_depth": 6,
            "dtree_min_leaf": 1,
        },
    },
    "sweep": {
        "ratios": [0.0, 0.3, 0.5, 0.7],
        "models": ["mock", "logreg", "knn", "dtree"],
    },
    "order_exp": {
        "n_rows": 2,
        "n_prompts": 100,
        "seed": 5,
        "ao_random_oov": True,
    },
    "ttest": {
        "a": None,
        "b": None,
        "a_file": None,
        "b_file": None,
        "alpha": 0.05,
    },
}

MODEL_KINDS = ("mock", "http", "openai", "logreg", "knn", "dtree")


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}", module="config", stage="load")
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}", module="config", stage="load") from e
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object", module="config", stage="load")
    return deep_merge(DEFAULT_CONFIG, doc)


def apply_overrides(config: dict, overrides: list[str]) -> dict:
    """Apply "a.b.c=value" assignments on top of a loaded config."""
    out = copy.deepcopy(config)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value",
                              module="config", stage="override")
        dotted, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = dotted.split(".")
        for p in parts[:-1]:
            if p not in node or not isinstance(node[p], dict):
                node[p] = {}
            node = node[p]
        node[parts[-1]] = value
    return out


def require(config: dict, key: str) -> Any:
    value = config.get(key)
    if value is None:
        raise ConfigError(f"config key {key!r} is required", module="config", stage="validate")
    return value


def config_keys(doc: dict | None = None, prefix: str = "") -> list[str]:
    """Flatten DEFAULT_CONFIG into dotted key paths (for --help output)."""
    doc = DEFAULT_CONFIG if doc is None else doc
    keys = []
    for k, v in doc.items():
        dotted = f"{prefix}{k}"
        if isinstance(v, dict):
            keys.extend(config_keys(v, prefix=f"{dotted}."))
        else:
            keys.append(dotted)
    return keys
