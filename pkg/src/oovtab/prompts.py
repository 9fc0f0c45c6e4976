"""Prompt rendering: tabular rows to text.

Two layouts exist.  The basic layout is a flat "name is value" list followed
by the question.  The advanced layout prefixes an indicator before each
segment and keeps the in-variable (IV) segment in the exact training order,
so the IV substring of a test prompt is character-identical to the training
prompt for the same row; new out-of-variable (OOV) pairs go in their own
segment before it.  Rendered prompts carry span metadata so those structural
guarantees are checkable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .dataset import ColumnSchema, OovSplit, Value, format_value
from .errors import ConfigError, ExportError, OrderError, ParseError, RenderError
from .rng import SplitMix64

#: Fixed pool of common concrete nouns for end-of-prompt bias mitigation.
RANDOM_WORD_POOL: tuple[str, ...] = (
    "acorn", "anchor", "apple", "arrow", "badge", "banana", "basket", "beacon",
    "bell", "berry", "bottle", "breeze", "brick", "bridge", "button", "cabin",
    "candle", "canoe", "carpet", "cherry", "clover", "copper", "coral", "crayon",
    "daisy", "dolphin", "drum", "feather", "fern", "flute", "garnet", "hammer",
    "harbor", "hazel", "kettle", "kiwi", "ladder", "lantern", "lemon", "maple",
    "marble", "meadow", "mirror", "olive", "orchid", "otter", "pebble", "pepper",
    "piano", "pillow", "pine", "plum", "pocket", "prism", "quilt", "raft",
    "ribbon", "saddle", "sparrow", "spruce", "thimble", "tulip", "violet", "walnut",
)


@dataclass(frozen=True)
class PromptTemplate:
    oov_indicator: str = "New information:"
    iv_indicator: str = "Known information:"
    question: str = "What is the class?"
    pair_format: str = "{name} is {value}"
    separator: str = ", "
    terminator: str = "@@@"
    max_chars: int | None = None

    def __post_init__(self):
        if not self.question:
            raise ConfigError("question must be non-empty",
                              module="prompts", stage="template")
        if (self.oov_indicator == self.iv_indicator
                or self.oov_indicator in self.iv_indicator
                or self.iv_indicator in self.oov_indicator):
            raise ConfigError("indicators must be distinct and not substrings of each other",
                              module="prompts", stage="template")

    def render_pair(self, name: str, value: Value) -> str:
        return self.pair_format.format(name=name, value=format_value(value))


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    iv_span: tuple[int, int]
    oov_span: tuple[int, int] | None
    variable_order: tuple[int, ...]
    random_word: str | None = None

    def iv_text(self) -> str:
        return self.text[self.iv_span[0]:self.iv_span[1]]

    def oov_text(self) -> str | None:
        if self.oov_span is None:
            return None
        return self.text[self.oov_span[0]:self.oov_span[1]]


@dataclass(frozen=True)
class LabeledExample:
    prompt: RenderedPrompt
    completion: str


def _pairs_text(row: Sequence[Value], schema: Sequence[ColumnSchema],
                order: Sequence[int], tmpl: PromptTemplate) -> tuple[str, list[int]]:
    """Join the non-missing pairs of `order`; returns text + rendered order."""
    parts, rendered = [], []
    for idx in order:
        if row[idx] is None:
            continue
        parts.append(tmpl.render_pair(schema[idx].name, row[idx]))
        rendered.append(idx)
    return tmpl.separator.join(parts), rendered


def _completion(label: str, tmpl: PromptTemplate) -> str:
    if tmpl.terminator in label:
        raise RenderError(f"label {label!r} contains the terminator",
                          module="prompts", stage="completion")
    return f" {label}{tmpl.terminator}"


def _check_length(text: str, tmpl: PromptTemplate) -> None:
    if tmpl.max_chars is not None and len(text) > tmpl.max_chars:
        raise RenderError(f"prompt length {len(text)} exceeds max_chars {tmpl.max_chars}",
                          module="prompts", stage="render")


def render_basic(row: Sequence[Value], schema: Sequence[ColumnSchema],
                 label: str | None = None,
                 tmpl: PromptTemplate = PromptTemplate(),
                 order: Sequence[int] | None = None) -> RenderedPrompt | LabeledExample:
    """Render "V1 is x1, ..., VK is xK. <question>"; missing pairs are omitted.

    With a label, returns a LabeledExample whose completion is a single
    space + label + terminator.
    """
    if order is None:
        order = range(len(schema))
    body, rendered = _pairs_text(row, schema, order, tmpl)
    if not rendered:
        raise RenderError("all values missing, prompt body would be empty",
                          module="prompts", stage="render_basic")
    text = f"{body}. {tmpl.question}"
    _check_length(text, tmpl)
    prompt = RenderedPrompt(text=text, iv_span=(0, len(body)), oov_span=None,
                            variable_order=tuple(rendered))
    if label is None:
        return prompt
    return LabeledExample(prompt=prompt, completion=_completion(label, tmpl))


def render_advanced(row: Sequence[Value], schema: Sequence[ColumnSchema],
                    split: OovSplit, training_order: Sequence[int],
                    tmpl: PromptTemplate = PromptTemplate(), mode: str = "test",
                    oov_order_seed: int = 0) -> RenderedPrompt:
    """Render the advanced layout for one row.

    Train mode emits "IV indicator + IV pairs + question" with no OOV
    content.  Test mode prepends "OOV indicator + OOV pairs" so the IV
    segment (and its training order) is untouched.  OOV pairs run in
    ascending column order unless oov_order_seed is nonzero, in which case
    they are shuffled with the package generator seeded by it.
    """
    if mode not in ("train", "test"):
        raise ConfigError(f"mode must be train or test, got {mode!r}",
                          module="prompts", stage="render_advanced")
    if sorted(training_order) != sorted(split.iv_columns):
        raise OrderError("training_order is not a permutation of the IV columns",
                         module="prompts", stage="render_advanced")

    iv_body, iv_rendered = _pairs_text(row, schema, training_order, tmpl)
    if not iv_rendered:
        raise RenderError("all IV values missing, prompt body would be empty",
                          module="prompts", stage="render_advanced")

    oov_body, oov_rendered = "", []
    if mode == "test" and split.oov_columns:
        oov_order = list(split.oov_columns)
        if oov_order_seed != 0:
            SplitMix64(oov_order_seed).shuffle(oov_order)
        oov_body, oov_rendered = _pairs_text(row, schema, oov_order, tmpl)

    if oov_rendered:
        prefix = f"{tmpl.oov_indicator} "
        oov_start = len(prefix)
        oov_end = oov_start + len(oov_body)
        mid = f"{oov_body}. {tmpl.iv_indicator} "
        iv_start = len(prefix) + len(mid)
        text = f"{prefix}{mid}{iv_body}. {tmpl.question}"
        oov_span = (oov_start, oov_end)
    else:
        prefix = f"{tmpl.iv_indicator} "
        iv_start = len(prefix)
        text = f"{prefix}{iv_body}. {tmpl.question}"
        oov_span = None
    _check_length(text, tmpl)
    return RenderedPrompt(text=text, iv_span=(iv_start, iv_start + len(iv_body)),
                          oov_span=oov_span,
                          variable_order=tuple(oov_rendered) + tuple(iv_rendered))


def randomize_order(columns: Sequence[int], seed: int) -> list[int]:
    """Seeded uniform permutation (Fisher-Yates over the package generator)."""
    if not columns:
        raise OrderError("cannot randomize an empty column list",
                         module="prompts", stage="randomize_order")
    order = list(columns)
    SplitMix64(seed).shuffle(order)
    return order


def inject_random_word(p: RenderedPrompt, pool: Sequence[str], seed: int) -> RenderedPrompt:
    """Append one seeded pool word after the question; spans are unchanged."""
    if not pool:
        raise ConfigError("random word pool is empty",
                          module="prompts", stage="inject_random_word")
    word = SplitMix64(seed).choice(list(pool))
    return replace(p, text=f"{p.text} {word}", random_word=word)


def assemble_icl_prompt(examples: Sequence[LabeledExample],
                        query: RenderedPrompt, k: int) -> str:
    """Concatenate the first k labeled examples, newline-separated, then the query."""
    if k < 0 or k > len(examples):
        raise ConfigError(f"k={k} but only {len(examples)} examples available",
                          module="prompts", stage="assemble_icl_prompt")
    shots = [ex.prompt.text + ex.completion for ex in examples[:k]]
    return "\n".join(shots + [query.text])


def export_jsonl(examples: Sequence[LabeledExample], path: str | Path) -> int:
    """Write {"prompt", "completion"} JSON objects, one per line, UTF-8."""
    try:
        with open(path, "w", encoding="utf-8") as f:
            for ex in examples:
                f.write(json.dumps({"prompt": ex.prompt.text,
                                    "completion": ex.completion},
                                   ensure_ascii=False))
                f.write("\n")
    except OSError as e:
        raise ExportError(f"cannot write {path}: {e}",
                          module="prompts", stage="export_jsonl") from e
    return len(examples)


def read_jsonl(path: str | Path) -> list[dict]:
    """Read back an exported JSONL file; raises ParseError with the line number."""
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"line {lineno}: invalid JSON: {e}",
                                 module="prompts", stage="read_jsonl") from e
            records.append(doc)
    return records
