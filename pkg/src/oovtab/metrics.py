"""Classification metrics: accuracy, F1 (binary or macro), and ROC AUC.

AUC is the normalized Mann-Whitney statistic, (concordant pairs + half the
tied pairs) / (n_pos * n_neg), computed via midranks in O(n log n); it equals
the trapezoidal area under the ROC curve.
"""

from __future__ import annotations

from typing import Sequence

from .errors import EvalError


def _check_lengths(truth: Sequence, predictions: Sequence, stage: str) -> None:
    if len(truth) != len(predictions):
        raise EvalError(f"length mismatch: {len(truth)} truths vs {len(predictions)} predictions",
                        module="metrics", stage=stage)
    if not truth:
        raise EvalError("empty inputs", module="metrics", stage=stage)


def accuracy(truth: Sequence[str], predictions: Sequence[str]) -> float:
    _check_lengths(truth, predictions, "accuracy")
    correct = sum(1 for t, p in zip(truth, predictions) if t == p)
    return correct / len(truth)


def precision_recall(truth: Sequence[str], predictions: Sequence[str],
                     positive: str) -> tuple[float, float]:
    """Per-class precision and recall; zero denominators yield 0.0."""
    _check_lengths(truth, predictions, "precision_recall")
    tp = sum(1 for t, p in zip(truth, predictions) if t == positive and p == positive)
    fp = sum(1 for t, p in zip(truth, predictions) if t != positive and p == positive)
    fn = sum(1 for t, p in zip(truth, predictions) if t == positive and p != positive)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return precision, recall


def f1_score(truth: Sequence[str], predictions: Sequence[str],
             positive: str | None = None) -> float:
    """Binary F1 when a positive label is given, unweighted macro otherwise."""
    _check_lengths(truth, predictions, "f1_score")
    if positive is not None:
        p, r = precision_recall(truth, predictions, positive)
        return 2 * p * r / (p + r) if p + r else 0.0
    classes = sorted(set(truth) | set(predictions))
    return sum(f1_score(truth, predictions, positive=c) for c in classes) / len(classes)


def _midranks(scores: Sequence[float]) -> list[float]:
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        mid = (i + j) / 2 + 1  # 1-indexed average rank of the tie group
        for k in range(i, j + 1):
            ranks[order[k]] = mid
        i = j + 1
    return ranks


def auc_roc(truth: Sequence, scores: Sequence[float], positive) -> float:
    """Probability a positive outranks a negative, ties counted half."""
    _check_lengths(truth, scores, "auc_roc")
    n_pos = sum(1 for t in truth if t == positive)
    n_neg = len(truth) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EvalError("AUC undefined: both classes must appear in the truth",
                        module="metrics", stage="auc_roc")
    ranks = _midranks(scores)
    rank_sum = sum(r for r, t in zip(ranks, truth) if t == positive)
    u = rank_sum - n_pos * (n_pos + 1) / 2
    return u / (n_pos * n_neg)
