"""Traditional ML baselines: k-nearest neighbors, logistic regression, and a
CART decision tree, over a standardize/one-hot feature encoding.

Baselines only ever see in-variable columns; encoders remember the schema
they were fitted on and refuse datasets with extra or renamed columns, which
is what keeps out-of-variable data invisible to them.

All fits are deterministic given data and hyperparameters: there is no
hidden RNG anywhere in this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import TabularDataset
from .errors import ConfigError, FitError, SchemaError


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray  # (n, d) float64
    feature_names: tuple[str, ...]

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] < 1:
            raise SchemaError("feature matrix must be 2-D with at least one column",
                              module="baselines", stage="encode")
        if not np.all(np.isfinite(self.values)):
            raise SchemaError("feature matrix contains non-finite entries",
                              module="baselines", stage="encode")


class FeatureEncoder:
    """Standardize numeric columns with training statistics; one-hot the rest.

    Missing numerics encode as 0 (the training mean); missing or unseen
    categoricals encode as an all-zero indicator block.  Zero-variance
    numeric columns encode as constant 0.
    """

    def __init__(self):
        self._schema: tuple[tuple[str, str], ...] | None = None
        self._stats: dict[int, tuple[float, float]] = {}
        self._categories: dict[int, list[str]] = {}
        self.feature_names: tuple[str, ...] = ()

    def fit(self, train: TabularDataset) -> "FeatureEncoder":
        if train.n_columns == 0:
            raise SchemaError("dataset has no feature columns",
                              module="baselines", stage="encode")
        self._schema = tuple((c.name, c.kind) for c in train.schema)
        names: list[str] = []
        for col in train.schema:
            values = train.column_values(col.index)
            if col.kind == "numeric":
                present = [v for v in values if v is not None]
                if present:
                    m = sum(present) / len(present)
                    var = sum((v - m) ** 2 for v in present) / len(present)
                else:
                    m, var = 0.0, 0.0
                self._stats[col.index] = (m, math.sqrt(var))
                names.append(col.name)
            else:
                cats = sorted({v for v in values if v is not None})
                self._categories[col.index] = cats
                names.extend(f"{col.name}={c}" for c in cats)
        self.feature_names = tuple(names)
        return self

    def transform(self, ds: TabularDataset) -> FeatureMatrix:
        if self._schema is None:
            raise FitError("encoder is not fitted", module="baselines", stage="encode")
        schema = tuple((c.name, c.kind) for c in ds.schema)
        if schema != self._schema:
            raise SchemaError(
                f"dataset schema {[n for n, _ in schema]} does not match the "
                f"fitted schema {[n for n, _ in self._schema]}",
                module="baselines", stage="encode")
        rows = []
        for row in ds.rows:
            out: list[float] = []
            for col in ds.schema:
                v = row[col.index]
                if col.kind == "numeric":
                    m, sd = self._stats[col.index]
                    if v is None or sd == 0.0:
                        out.append(0.0)
                    else:
                        out.append((v - m) / sd)
                else:
                    cats = self._categories[col.index]
                    block = [0.0] * len(cats)
                    if v is not None and v in cats:
                        block[cats.index(v)] = 1.0
                    out.extend(block)
            rows.append(out)
        return FeatureMatrix(values=np.asarray(rows, dtype=np.float64),
                             feature_names=self.feature_names)


def encode_features(ds: TabularDataset) -> FeatureMatrix:
    """Fit an encoder on the dataset and transform it in one step."""
    return FeatureEncoder().fit(ds).transform(ds)


def _class_order(labels: Sequence[str], class_names: Sequence[str] | None) -> list[str]:
    if class_names is not None:
        return list(class_names)
    order: list[str] = []
    for y in labels:
        if y not in order:
            order.append(y)
    return order


def knn_predict(train: FeatureMatrix, labels: Sequence[str], query: Sequence[float],
                k: int, class_names: Sequence[str] | None = None) -> str:
    """Majority label among the k Euclidean-nearest training rows.

    Distance ties resolve by row index; vote ties by smallest class index.
    """
    n = train.values.shape[0]
    if k < 1 or k > n:
        raise ConfigError(f"k must be in [1, {n}], got {k}",
                          module="baselines", stage="knn_predict")
    label, _ = knn_vote(train, labels, query, k, _class_order(labels, class_names))
    return label


def knn_vote(train: FeatureMatrix, labels: Sequence[str], query: Sequence[float],
             k: int, class_order: Sequence[str]) -> tuple[str, list[float]]:
    """Label plus the per-class vote fractions (in class_order)."""
    q = np.asarray(query, dtype=np.float64)
    dists = np.sqrt(((train.values - q) ** 2).sum(axis=1))
    nearest = sorted(range(len(dists)), key=lambda i: (dists[i], i))[:k]
    counts = [0] * len(class_order)
    index = {c: i for i, c in enumerate(class_order)}
    for i in nearest:
        counts[index[labels[i]]] += 1
    best = max(range(len(counts)), key=lambda c: (counts[c], -c))
    return class_order[best], [c / k for c in counts]


@dataclass
class LogRegModel:
    weights: np.ndarray          # (d, n_classes)
    bias: np.ndarray             # (n_classes,)
    classes: tuple[str, ...]
    l2: float
    trace: list[float] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias.tolist(),
                "classes": list(self.classes), "l2": self.l2, "trace": self.trace}


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def logreg_loss_grad(w: np.ndarray, b: np.ndarray, x: np.ndarray, y: np.ndarray,
                     l2: float) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy + (l2/2)*||w||^2 and its analytic gradients."""
    n = x.shape[0]
    probs = _softmax_rows(x @ w + b)
    picked = np.clip(probs[np.arange(n), y], 1e-300, None)
    loss = -np.log(picked).mean() + 0.5 * l2 * float((w * w).sum())
    onehot = np.zeros_like(probs)
    onehot[np.arange(n), y] = 1.0
    diff = (probs - onehot) / n
    grad_w = x.T @ diff + l2 * w
    grad_b = diff.sum(axis=0)
    return float(loss), grad_w, grad_b


def logreg_fit(x: FeatureMatrix, labels: Sequence[str], l2: float = 1e-3,
               epochs: int = 200, lr: float = 1.0,
               class_names: Sequence[str] | None = None) -> LogRegModel:
    """Full-batch gradient descent with backtracking line search.

    The objective is convex, so with backtracking the recorded per-epoch
    loss trace is non-increasing.
    """
    classes = _class_order(labels, class_names)
    present = set(labels)
    if len(present) < 2:
        raise FitError("training labels contain a single class",
                       module="baselines", stage="logreg_fit")
    index = {c: i for i, c in enumerate(classes)}
    y = np.asarray([index[t] for t in labels], dtype=np.int64)
    d, c = x.values.shape[1], len(classes)
    w = np.zeros((d, c))
    b = np.zeros(c)
    trace: list[float] = []
    for _ in range(epochs):
        loss, gw, gb = logreg_loss_grad(w, b, x.values, y, l2)
        step = lr
        g_norm2 = float((gw * gw).sum() + (gb * gb).sum())
        if g_norm2 == 0.0:
            trace.append(loss)
            continue
        while step > 1e-12:
            new_loss, _, _ = logreg_loss_grad(w - step * gw, b - step * gb,
                                              x.values, y, l2)
            if new_loss <= loss - 1e-4 * step * g_norm2:
                break
            step /= 2.0
        w = w - step * gw
        b = b - step * gb
        trace.append(logreg_loss_grad(w, b, x.values, y, l2)[0])
    return LogRegModel(weights=w, bias=b, classes=tuple(classes), l2=l2, trace=trace)


def logreg_predict(model: LogRegModel, query: Sequence[float]) -> tuple[str, list[float]]:
    q = np.asarray(query, dtype=np.float64)
    probs = _softmax_rows((q @ model.weights + model.bias)[None, :])[0]
    best = max(range(len(model.classes)), key=lambda i: (probs[i], -i))
    return model.classes[best], [float(p) for p in probs]


@dataclass
class TreeNode:
    """Internal node (feature, threshold, children) or leaf (class counts)."""

    counts: list[int]
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_json(self) -> dict:
        if self.is_leaf:
            return {"counts": self.counts}
        return {"counts": self.counts, "feature": self.feature,
                "threshold": self.threshold,
                "left": self.left.to_json(), "right": self.right.to_json()}


def gini(counts: Sequence[int]) -> float:
    total = sum(counts)
    if total == 0:
        return 0.0
    return 1.0 - sum((c / total) ** 2 for c in counts)


def _best_split(x: np.ndarray, y: np.ndarray, n_classes: int,
                min_leaf: int) -> tuple[int, float] | None:
    """Exhaustive scan over midpoints of consecutive sorted unique values.

    Picks the split minimizing weighted child Gini; ties resolve to the
    lowest feature index then lowest threshold.  Zero-gain splits are
    allowed so interaction-only patterns (XOR) remain learnable.
    """
    n = len(y)
    best: tuple[float, int, float] | None = None
    for f in range(x.shape[1]):
        order = np.argsort(x[:, f], kind="stable")
        xs, ys = x[order, f], y[order]
        left = [0] * n_classes
        right = [0] * n_classes
        for c in ys:
            right[c] += 1
        for i in range(n - 1):
            left[ys[i]] += 1
            right[ys[i]] -= 1
            if xs[i + 1] == xs[i]:
                continue
            if i + 1 < min_leaf or n - i - 1 < min_leaf:
                continue
            threshold = (xs[i] + xs[i + 1]) / 2.0
            score = ((i + 1) * gini(left) + (n - i - 1) * gini(right)) / n
            key = (score, f, threshold)
            if best is None or key < best:
                best = key
    if best is None:
        return None
    return best[1], best[2]


def dtree_fit(x: FeatureMatrix, labels: Sequence[str], max_depth: int = 6,
              min_leaf: int = 1, class_names: Sequence[str] | None = None) -> TreeNode:
    """Grow a CART classifier with Gini impurity."""
    if x.values.shape[0] == 0:
        raise FitError("cannot fit a tree on an empty dataset",
                       module="baselines", stage="dtree_fit")
    classes = _class_order(labels, class_names)
    index = {c: i for i, c in enumerate(classes)}
    y = np.asarray([index[t] for t in labels], dtype=np.int64)
    root = _grow(x.values, y, len(classes), max_depth, min_leaf)
    root.class_order = tuple(classes)  # type: ignore[attr-defined]
    return root


def _grow(x: np.ndarray, y: np.ndarray, n_classes: int, depth: int,
          min_leaf: int) -> TreeNode:
    counts = [int((y == c).sum()) for c in range(n_classes)]
    node = TreeNode(counts=counts)
    if depth <= 0 or gini(counts) == 0.0 or len(y) < 2 * min_leaf:
        return node
    split = _best_split(x, y, n_classes, min_leaf)
    if split is None:
        return node
    f, t = split
    mask = x[:, f] <= t
    node.feature, node.threshold = f, t
    node.left = _grow(x[mask], y[mask], n_classes, depth - 1, min_leaf)
    node.right = _grow(x[~mask], y[~mask], n_classes, depth - 1, min_leaf)
    return node


def dtree_predict(root: TreeNode, query: Sequence[float],
                  class_names: Sequence[str] | None = None) -> tuple[str, list[float]]:
    """Walk to a leaf; returns (majority label, class distribution)."""
    classes = class_names or getattr(root, "class_order", None)
    if classes is None:
        raise ConfigError("class names unavailable: pass class_names",
                          module="baselines", stage="dtree_predict")
    node = root
    while not node.is_leaf:
        node = node.left if query[node.feature] <= node.threshold else node.right
    total = sum(node.counts)
    probs = [c / total for c in node.counts]
    best = max(range(len(probs)), key=lambda i: (probs[i], -i))
    return classes[best], probs
