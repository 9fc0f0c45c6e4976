"""Verbalizer: map word-level logit scores to class scores, probabilities,
predictions, and the weighted cross-entropy training loss.

Each class has a central word k and a synonym set S_k.  The class score is
alpha1 * l_k + alpha2 * sum of synonym logits; probabilities are a softmax
over class scores.  The loss J is alpha1 * CE(logits, k) + alpha2 * sum over
S_k of CE(logits, w), where each CE is cross-entropy of a softmax over a
word set.  By default that word set is the union of every verbalizer word
(backends only expose queried words); passing full_vocabulary=True uses
every word present in the logit map instead.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .errors import ConfigError, ContractError

LogitMap = Mapping[str, float]


@dataclass(frozen=True)
class ClassSpec:
    label: str
    central_word: str
    synonyms: tuple[str, ...] = ()

    def __post_init__(self):
        if self.central_word in self.synonyms:
            raise ConfigError(f"central word {self.central_word!r} repeated in synonyms",
                              module="verbalizer", stage="construct")
        if len(set(self.synonyms)) != len(self.synonyms):
            raise ConfigError(f"duplicate synonyms for class {self.label!r}",
                              module="verbalizer", stage="construct")

    @property
    def words(self) -> tuple[str, ...]:
        return (self.central_word,) + self.synonyms


#: Default word sets for Yes/No tasks; anything else gets bare labels.
DEFAULT_BINARY_WORDS = {
    "Yes": ("yes", "yeah", "true"),
    "No": ("no", "false", "nope"),
}

DEFAULT_ALPHA1 = 0.9
DEFAULT_ALPHA2 = 0.1


@dataclass(frozen=True)
class ClassVerbalizer:
    specs: tuple[ClassSpec, ...]
    alpha1: float = DEFAULT_ALPHA1
    alpha2: float = DEFAULT_ALPHA2

    def __post_init__(self):
        if self.alpha1 <= 0:
            raise ConfigError("alpha1 must be positive",
                              module="verbalizer", stage="construct")
        if self.alpha2 < 0:
            raise ConfigError("alpha2 must be non-negative",
                              module="verbalizer", stage="construct")
        if len(self.specs) < 2:
            raise ConfigError("need at least 2 classes",
                              module="verbalizer", stage="construct")
        labels = [s.label for s in self.specs]
        if len(set(labels)) != len(labels):
            raise ConfigError("duplicate class labels", module="verbalizer", stage="construct")
        words = [w for s in self.specs for w in s.words]
        if len(set(words)) != len(words):
            dupes = sorted({w for w in words if words.count(w) > 1})
            raise ConfigError(f"words shared between classes: {dupes}",
                              module="verbalizer", stage="construct")

    @property
    def all_words(self) -> tuple[str, ...]:
        return tuple(w for s in self.specs for w in s.words)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.specs)

    def spec_for(self, label: str) -> ClassSpec:
        for s in self.specs:
            if s.label == label:
                return s
        raise ConfigError(f"unknown class {label!r}", module="verbalizer", stage="lookup")

    def check_token_collisions(self, first_token: Callable[[str], str]) -> None:
        """Reject word sets whose first tokens collide under a tokenizer."""
        seen: dict[str, str] = {}
        for s in self.specs:
            for w in s.words:
                t = first_token(w)
                if t in seen and seen[t] != s.label:
                    raise ConfigError(
                        f"first token {t!r} of {w!r} collides across classes "
                        f"{seen[t]!r} and {s.label!r}",
                        module="verbalizer", stage="construct")
                seen[t] = s.label

    def to_json(self) -> dict:
        return {
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "classes": [{"label": s.label, "central_word": s.central_word,
                         "synonyms": list(s.synonyms)} for s in self.specs],
        }

    @staticmethod
    def from_json(doc: dict) -> "ClassVerbalizer":
        specs = tuple(ClassSpec(label=c["label"], central_word=c["central_word"],
                                synonyms=tuple(c.get("synonyms", ())))
                      for c in doc["classes"])
        return ClassVerbalizer(specs=specs,
                               alpha1=float(doc.get("alpha1", DEFAULT_ALPHA1)),
                               alpha2=float(doc.get("alpha2", DEFAULT_ALPHA2)))


def default_verbalizer(class_names: Sequence[str],
                       alpha1: float = DEFAULT_ALPHA1,
                       alpha2: float = DEFAULT_ALPHA2) -> ClassVerbalizer:
    """Verbalizer with stock Yes/No synonym sets, bare labels otherwise."""
    specs = tuple(ClassSpec(label=name, central_word=name,
                            synonyms=DEFAULT_BINARY_WORDS.get(name, ()))
                  for name in class_names)
    return ClassVerbalizer(specs=specs, alpha1=alpha1, alpha2=alpha2)


def _lookup(logits: LogitMap, word: str) -> float:
    try:
        return logits[word]
    except KeyError:
        raise ContractError(f"logit map is missing word {word!r}",
                            module="verbalizer", stage="score") from None


def score_class(v: ClassVerbalizer, spec: ClassSpec, logits: LogitMap) -> float:
    """alpha1 * l_central + alpha2 * sum of synonym logits."""
    total = v.alpha1 * _lookup(logits, spec.central_word)
    for w in spec.synonyms:
        total += v.alpha2 * _lookup(logits, w)
    return total


def _softmax(scores: Sequence[float]) -> list[float]:
    peak = max(scores)
    exps = [math.exp(s - peak) for s in scores]
    total = sum(exps)
    return [e / total for e in exps]


def class_probabilities(v: ClassVerbalizer, logits: LogitMap) -> list[float]:
    """Softmax over class scores, max-shifted for overflow safety."""
    return _softmax([score_class(v, s, logits) for s in v.specs])


def predict(v: ClassVerbalizer, logits: LogitMap) -> str:
    """Label of maximal probability; exact ties go to the lexicographically
    smallest central word."""
    probs = class_probabilities(v, logits)
    best = 0
    for i in range(1, len(v.specs)):
        if probs[i] > probs[best] or (
                probs[i] == probs[best]
                and v.specs[i].central_word < v.specs[best].central_word):
            best = i
    return v.specs[best].label


def _word_universe(v: ClassVerbalizer, logits: LogitMap, full_vocabulary: bool) -> list[str]:
    if full_vocabulary:
        return list(logits.keys())
    return list(v.all_words)


def _log_softmax_at(logits: LogitMap, words: Sequence[str], target: str) -> float:
    values = [_lookup(logits, w) for w in words]
    peak = max(values)
    log_z = peak + math.log(sum(math.exp(x - peak) for x in values))
    return _lookup(logits, target) - log_z


def verbalizer_loss(v: ClassVerbalizer, logits: LogitMap, true_class: str,
                    full_vocabulary: bool = False) -> float:
    """J = alpha1 * CE(logits, central) + alpha2 * sum CE(logits, synonym)."""
    spec = v.spec_for(true_class)
    words = _word_universe(v, logits, full_vocabulary)
    j = -v.alpha1 * _log_softmax_at(logits, words, spec.central_word)
    for w in spec.synonyms:
        j -= v.alpha2 * _log_softmax_at(logits, words, w)
    return j


def verbalizer_loss_grad(v: ClassVerbalizer, logits: LogitMap, true_class: str,
                         full_vocabulary: bool = False) -> dict[str, float]:
    """Analytic dJ/dl_w for every word in the softmax universe.

    With p the softmax over the word universe and S_k the true class's
    synonyms: dJ/dl_w = (alpha1 + alpha2*|S_k|) * p_w
                        - alpha1*[w == k] - alpha2*[w in S_k].
    """
    spec = v.spec_for(true_class)
    words = _word_universe(v, logits, full_vocabulary)
    probs = _softmax([_lookup(logits, w) for w in words])
    weight = v.alpha1 + v.alpha2 * len(spec.synonyms)
    synonyms = set(spec.synonyms)
    grad = {}
    for w, p in zip(words, probs):
        g = weight * p
        if w == spec.central_word:
            g -= v.alpha1
        if w in synonyms:
            g -= v.alpha2
        grad[w] = g
    return grad


def logistic(x: float) -> float:
    """Logistic sigmoid 1 / (1 + exp(-x)), overflow-safe on both tails."""
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def save_verbalizer(v: ClassVerbalizer, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(v.to_json(), f, indent=2, sort_keys=True)
        f.write("\n")


def load_verbalizer(path: str | Path) -> ClassVerbalizer:
    with open(path, "r", encoding="utf-8") as f:
        return ClassVerbalizer.from_json(json.load(f))
