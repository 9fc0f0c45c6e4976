from __future__ import annotations

import itertools
from collections import Counter

import pytest

from oovtab.dataset import ColumnSchema, OovSplit
from oovtab.errors import ConfigError, OrderError, RenderError
from oovtab.prompts import (LabeledExample, PromptTemplate, RANDOM_WORD_POOL,
                            RenderedPrompt, assemble_icl_prompt, export_jsonl,
                            inject_random_word, randomize_order, read_jsonl,
                            render_advanced, render_basic)

TMPL = PromptTemplate()


def schema_of(*names_kinds) -> tuple[ColumnSchema, ...]:
    return tuple(ColumnSchema(name=n, kind=k, index=i)
                 for i, (n, k) in enumerate(names_kinds))


AGE_SEX = schema_of(("Age", "numeric"), ("Sex", "categorical"))


class TestRenderBasic:
    def test_two_column_example(self):
        ex = render_basic((30.0, "male"), AGE_SEX, label="Yes")
        assert ex.prompt.text == "Age is 30, Sex is male. What is the class?"
        assert ex.completion == " Yes@@@"

    def test_single_column_no_label(self):
        p = render_basic((1.0,), schema_of(("A", "numeric")))
        assert p.text == "A is 1. What is the class?"
        assert p.variable_order == (0,)

    def test_missing_pair_is_omitted(self):
        p = render_basic((30.0, None), AGE_SEX)
        assert p.text == "Age is 30. What is the class?"
        assert p.variable_order == (0,)

    def test_all_missing_is_render_error(self):
        with pytest.raises(RenderError):
            render_basic((None, None), AGE_SEX)

    def test_iv_span_covers_the_pairs(self):
        p = render_basic((30.0, "male"), AGE_SEX)
        assert p.iv_text() == "Age is 30, Sex is male"

    def test_order_sensitivity_k_factorial(self):
        # K distinct variables can yield K! distinct prompts (K <= 4)
        for k in (2, 3, 4):
            schema = schema_of(*((f"V{i}", "numeric") for i in range(k)))
            row = tuple(float(i) for i in range(k))
            texts = {render_basic(row, schema, order=perm).text
                     for perm in itertools.permutations(range(k))}
            assert len(texts) == __import__("math").factorial(k)


@pytest.fixture
def age_income_split():
    schema = schema_of(("Age", "numeric"), ("Income", "numeric"))
    split = OovSplit(iv_columns=(0,), oov_columns=(1,), ratio=0.5, seed=0)
    return schema, split


class TestRenderAdvanced:
    def test_test_mode_structure(self, age_income_split):
        schema, split = age_income_split
        p = render_advanced((30.0, 0.0), schema, split, split.iv_columns, TMPL, mode="test")
        assert p.text == ("New information: Income is 0. "
                          "Known information: Age is 30. What is the class?")
        assert p.oov_text() == "Income is 0"
        assert p.iv_text() == "Age is 30"
        assert p.oov_span[0] < p.iv_span[0]

    def test_train_mode_has_no_oov_content(self, age_income_split):
        schema, split = age_income_split
        p = render_advanced((30.0, 0.0), schema, split, split.iv_columns, TMPL, mode="train")
        assert p.text == "Known information: Age is 30. What is the class?"
        assert p.oov_span is None
        assert "Income" not in p.text

    def test_zero_oov_test_equals_train(self):
        schema = schema_of(("Age", "numeric"), ("Income", "numeric"))
        split = OovSplit(iv_columns=(0, 1), oov_columns=(), ratio=0.0, seed=0)
        row = (30.0, 10.0)
        test = render_advanced(row, schema, split, split.iv_columns, TMPL, mode="test")
        train = render_advanced(row, schema, split, split.iv_columns, TMPL, mode="train")
        assert test == train

    def test_iv_substring_identical_between_modes(self, age_income_split):
        schema, split = age_income_split
        row = (42.0, 7.0)
        train = render_advanced(row, schema, split, split.iv_columns, TMPL, mode="train")
        test = render_advanced(row, schema, split, split.iv_columns, TMPL, mode="test")
        assert train.iv_text() == test.iv_text()

    def test_indicators_appear_once_in_order(self):
        schema = schema_of(*((f"V{i}", "numeric") for i in range(5)))
        split = OovSplit(iv_columns=(0, 2), oov_columns=(1, 3, 4), ratio=0.6, seed=0)
        p = render_advanced(tuple(map(float, range(5))), schema, split,
                            (0, 2), TMPL, mode="test")
        assert p.text.count(TMPL.oov_indicator) == 1
        assert p.text.count(TMPL.iv_indicator) == 1
        assert p.text.index(TMPL.oov_indicator) < p.text.index(TMPL.iv_indicator)

    def test_oov_order_ascending_by_default_seeded_otherwise(self):
        schema = schema_of(*((f"V{i}", "numeric") for i in range(5)))
        split = OovSplit(iv_columns=(0,), oov_columns=(1, 2, 3, 4), ratio=0.8, seed=0)
        row = tuple(map(float, range(5)))
        base = render_advanced(row, schema, split, (0,), TMPL, mode="test")
        assert base.variable_order[:4] == (1, 2, 3, 4)
        seeded = render_advanced(row, schema, split, (0,), TMPL, mode="test",
                                 oov_order_seed=42)
        assert sorted(seeded.variable_order[:4]) == [1, 2, 3, 4]
        again = render_advanced(row, schema, split, (0,), TMPL, mode="test",
                                oov_order_seed=42)
        assert seeded == again

    def test_training_order_must_be_iv_permutation(self, age_income_split):
        schema, split = age_income_split
        with pytest.raises(OrderError):
            render_advanced((30.0, 0.0), schema, split, (1,), TMPL, mode="test")

    def test_training_order_is_respected(self):
        schema = schema_of(("A", "numeric"), ("B", "numeric"), ("C", "numeric"))
        split = OovSplit(iv_columns=(0, 1, 2), oov_columns=(), ratio=0.0, seed=0)
        p = render_advanced((1.0, 2.0, 3.0), schema, split, (2, 0, 1), TMPL, mode="train")
        assert p.iv_text() == "C is 3, A is 1, B is 2"
        assert p.variable_order == (2, 0, 1)


class TestRandomizeOrder:
    def test_singleton(self):
        assert randomize_order([3], seed=1) == [3]

    def test_deterministic(self):
        cols = list(range(8))
        assert randomize_order(cols, 123) == randomize_order(cols, 123)

    def test_golden_permutation(self):
        # frozen from one run of the documented SplitMix64 Fisher-Yates
        assert randomize_order([0, 1, 2, 3], seed=42) == [2, 0, 3, 1]

    def test_empty_errors(self):
        with pytest.raises(OrderError):
            randomize_order([], seed=1)


class TestInjectRandomWord:
    PROMPT = RenderedPrompt(text="A is 1. What is the class?",
                            iv_span=(0, 6), oov_span=None, variable_order=(0,))

    def test_singleton_pool(self):
        p = inject_random_word(self.PROMPT, ["kiwi"], seed=9)
        assert p.text.endswith("What is the class? kiwi")
        assert p.random_word == "kiwi"

    def test_empty_pool_is_config_error(self):
        with pytest.raises(ConfigError):
            inject_random_word(self.PROMPT, [], seed=9)

    def test_spans_unchanged(self):
        p = inject_random_word(self.PROMPT, list(RANDOM_WORD_POOL), seed=4)
        assert p.iv_span == self.PROMPT.iv_span
        assert p.iv_text() == self.PROMPT.iv_text()

    def test_selection_uniformity_over_seeds(self):
        # chi-square oracle over a frozen seed range: expected count 20 per
        # word, 3-sigma window [6.72, 33.28], chi2 3-sigma bound ~78.7
        pool = [f"word{i:02d}" for i in range(50)]
        counts = Counter(inject_random_word(self.PROMPT, pool, seed).random_word
                         for seed in range(1, 1001))
        assert len(counts) == 50
        expected = 1000 / 50
        sigma = (1000 * (1 / 50) * (49 / 50)) ** 0.5
        assert all(expected - 3 * sigma <= c <= expected + 3 * sigma
                   for c in counts.values())
        chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
        assert chi2 <= 49 + 3 * (2 * 49) ** 0.5

    def test_pool_has_64_words(self):
        assert len(RANDOM_WORD_POOL) == 64
        assert len(set(RANDOM_WORD_POOL)) == 64


class TestAssembleIcl:
    @staticmethod
    def example(i: int, label: str) -> LabeledExample:
        p = render_basic((float(i),), schema_of(("A", "numeric")))
        return LabeledExample(prompt=p, completion=f" {label}@@@")

    def test_zero_shot_is_query(self):
        query = render_basic((9.0,), schema_of(("A", "numeric")))
        assert assemble_icl_prompt([], query, 0) == query.text

    def test_two_shots_two_terminators(self):
        examples = [self.example(1, "Yes"), self.example(2, "No"), self.example(3, "Yes")]
        query = render_basic((9.0,), schema_of(("A", "numeric")))
        text = assemble_icl_prompt(examples, query, 2)
        before_query = text[:text.rindex(query.text)]
        assert before_query.count("@@@") == 2

    def test_three_shot_golden_string(self):
        examples = [self.example(1, "Yes"), self.example(2, "No"), self.example(3, "Yes")]
        query = render_basic((9.0,), schema_of(("A", "numeric")))
        expected = ("A is 1. What is the class? Yes@@@\n"
                    "A is 2. What is the class? No@@@\n"
                    "A is 3. What is the class? Yes@@@\n"
                    "A is 9. What is the class?")
        assert assemble_icl_prompt(examples, query, 3) == expected

    def test_k_too_large_errors(self):
        query = render_basic((9.0,), schema_of(("A", "numeric")))
        with pytest.raises(ConfigError):
            assemble_icl_prompt([self.example(1, "Yes")], query, 2)


class TestExportJsonl:
    def test_empty_list(self, tmp_path):
        path = tmp_path / "out.jsonl"
        assert export_jsonl([], path) == 0
        assert path.read_text(encoding="utf-8") == ""

    def test_two_examples_parse_back(self, tmp_path):
        examples = [TestAssembleIcl.example(1, "Yes"), TestAssembleIcl.example(2, "No")]
        path = tmp_path / "out.jsonl"
        assert export_jsonl(examples, path) == 2
        docs = read_jsonl(path)
        assert docs == [{"prompt": "A is 1. What is the class?", "completion": " Yes@@@"},
                        {"prompt": "A is 2. What is the class?", "completion": " No@@@"}]

    def test_round_trip_100_random_examples(self, tmp_path):
        from oovtab.rng import SplitMix64
        rng = SplitMix64(31)
        schema = schema_of(("A", "numeric"), ("B", "categorical"))
        examples = []
        for i in range(100):
            row = (rng.random() * 100, f"t{rng.below(1000)}")
            label = "Yes" if rng.below(2) else "No"
            examples.append(render_basic(row, schema, label=label))
        path = tmp_path / "out.jsonl"
        export_jsonl(examples, path)
        docs = read_jsonl(path)
        assert [(d["prompt"], d["completion"]) for d in docs] == \
            [(e.prompt.text, e.completion) for e in examples]


class TestTemplate:
    def test_completion_discipline(self):
        ex = render_basic((1.0,), schema_of(("A", "numeric")), label="Yes")
        assert ex.completion.endswith("@@@")
        assert ex.completion.count("@@@") == 1
        assert ex.completion.startswith(" ")

    def test_label_containing_terminator_rejected(self):
        with pytest.raises(RenderError):
            render_basic((1.0,), schema_of(("A", "numeric")), label="Yes@@@")

    def test_indicators_must_differ(self):
        with pytest.raises(ConfigError):
            PromptTemplate(oov_indicator="Info:", iv_indicator="Info:")
        with pytest.raises(ConfigError):
            PromptTemplate(oov_indicator="Info:", iv_indicator="More Info:")

    def test_max_chars_guard(self):
        tmpl = PromptTemplate(max_chars=10)
        with pytest.raises(RenderError):
            render_basic((1.0,), schema_of(("A", "numeric")), tmpl=tmpl)
