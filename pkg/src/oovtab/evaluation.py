"""Experiment orchestration: repeated runs, metrics, the OOV-ratio sweep,
and the prompt-order variance experiment.

The prompt-model path is: discretize (thresholds fitted on training rows
only) -> render advanced prompts -> query the logit backend -> verbalize.
Baselines see the in-variable columns only; the out-of-variable columns
reappear solely inside the prompt-model's test prompts, which is the
contrast the whole toolkit exists to measure.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from . import baselines as bl
from .backend import (LogitBackend, LogitRequest, HttpLogitBackend, MockBackend,
                      MockModelSpec, OpenAICompletionsBackend, generate_text,
                      parse_generated_label, query_logits)
from .config import MODEL_KINDS, require
from .dataset import (OovSplit, TabularDataset, load_csv, make_oov_split,
                      project_columns, train_test_split)
from .discretize import fit_all_binners, transform_dataset
from .errors import ConfigError, EvalError
from .metrics import accuracy, auc_roc, f1_score, precision_recall
from .prompts import (LabeledExample, PromptTemplate, RANDOM_WORD_POOL,
                      RenderedPrompt, assemble_icl_prompt, inject_random_word,
                      randomize_order, render_advanced, render_basic)
from .rng import derive_seed
from .verbalizer import ClassVerbalizer, class_probabilities, default_verbalizer, predict


@dataclass(frozen=True)
class RunResult:
    predictions: tuple[str, ...]
    probabilities: tuple[tuple[float, ...], ...] | None
    truth: tuple[str, ...]
    seed: int

    def __post_init__(self):
        if len(self.predictions) != len(self.truth):
            raise EvalError("predictions and truth differ in length",
                            module="evaluation", stage="run_result")


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    f1: float
    auc: float | None
    per_class: dict[str, dict[str, float]]

    def to_json(self) -> dict:
        return {"accuracy": self.accuracy, "f1": self.f1, "auc": self.auc,
                "per_class": self.per_class}


@dataclass(frozen=True)
class ExperimentOutcome:
    model: str
    runs: tuple[RunResult, ...]
    reports: tuple[EvalReport, ...]
    seeds: tuple[int, ...]

    def metric_values(self, name: str) -> list[float]:
        values = [getattr(r, name) for r in self.reports]
        if any(v is None for v in values):
            return []
        return values

    def aggregate(self) -> dict:
        out: dict = {"model": self.model, "repetitions": len(self.reports)}
        for name in ("accuracy", "f1", "auc"):
            values = self.metric_values(name)
            if not values:
                out[name] = None
                continue
            m = sum(values) / len(values)
            sd = (math.sqrt(sum((v - m) ** 2 for v in values) / (len(values) - 1))
                  if len(values) > 1 else 0.0)
            out[name] = {"mean": m, "stddev": sd, "values": values}
        return out

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "seeds": list(self.seeds),
            "aggregate": self.aggregate(),
            "repetitions": [
                {"seed": run.seed, "report": rep.to_json(),
                 "predictions": list(run.predictions), "truth": list(run.truth)}
                for run, rep in zip(self.runs, self.reports)
            ],
        }


def evaluate_run(run: RunResult, class_names: Sequence[str],
                 positive_label: str | None = None) -> EvalReport:
    """Score one run: accuracy, F1 (binary or macro), binary AUC, per-class table."""
    binary = len(class_names) == 2
    positive = positive_label or (class_names[1] if binary else None)
    f1 = f1_score(run.truth, run.predictions, positive=positive if binary else None)
    auc = None
    if binary and run.probabilities is not None and len(set(run.truth)) == 2:
        pos_index = list(class_names).index(positive)
        scores = [p[pos_index] for p in run.probabilities]
        auc = auc_roc(run.truth, scores, positive)
    per_class = {}
    for c in class_names:
        p, r = precision_recall(run.truth, run.predictions, c)
        per_class[c] = {"precision": p, "recall": r}
    return EvalReport(accuracy=accuracy(run.truth, run.predictions), f1=f1,
                      auc=auc, per_class=per_class)


def resolve_backend(model_cfg: dict) -> LogitBackend:
    kind = model_cfg["kind"]
    if kind == "mock":
        spec_doc = model_cfg.get("mock_spec")
        if spec_doc is None:
            raise ConfigError("model.kind=mock requires model.mock_spec",
                              module="evaluation", stage="resolve_backend")
        spec = spec_doc if isinstance(spec_doc, MockModelSpec) else MockModelSpec.from_json(spec_doc)
        return MockBackend(spec)
    if kind == "http":
        return HttpLogitBackend(base_url=model_cfg.get("url"),
                                timeout=float(model_cfg.get("timeout", 30.0)))
    if kind == "openai":
        if not model_cfg.get("url"):
            raise ConfigError("model.kind=openai requires model.url",
                              module="evaluation", stage="resolve_backend")
        return OpenAICompletionsBackend(base_url=model_cfg["url"],
                                        model=model_cfg.get("name", "default"),
                                        timeout=float(model_cfg.get("timeout", 60.0)))
    raise ConfigError(f"unknown backend kind {kind!r}",
                      module="evaluation", stage="resolve_backend")


def resolve_verbalizer(config: dict, class_names: Sequence[str]) -> ClassVerbalizer:
    vcfg = config["verbalizer"]
    if vcfg.get("classes"):
        v = ClassVerbalizer.from_json(vcfg)
        if sorted(v.labels) != sorted(class_names):
            raise ConfigError(
                f"verbalizer classes {sorted(v.labels)} do not cover dataset "
                f"classes {sorted(class_names)}",
                module="evaluation", stage="resolve_verbalizer")
        return v
    return default_verbalizer(class_names, alpha1=vcfg["alpha1"], alpha2=vcfg["alpha2"])


def resolve_template(pcfg: dict) -> PromptTemplate:
    return PromptTemplate(
        oov_indicator=pcfg["oov_indicator"], iv_indicator=pcfg["iv_indicator"],
        question=pcfg["question"], pair_format=pcfg["pair_format"],
        separator=pcfg["separator"], terminator=pcfg["terminator"],
        max_chars=pcfg.get("max_chars"))


@dataclass
class PreparedSplit:
    """Everything one repetition needs, after splitting and discretizing."""

    train: TabularDataset
    test: TabularDataset
    split: OovSplit
    training_order: tuple[int, ...]
    binner_docs: list[dict] = field(default_factory=list)


def prepare_split(ds: TabularDataset, config: dict, rep: int) -> PreparedSplit:
    split_seed = config["split_seed"]
    if config["repetitions"] > 1:
        split_seed = derive_seed(config["split_seed"], rep)
    train, test = train_test_split(ds, config["test_fraction"], split_seed)

    oov_cfg = config["oov"]
    oov_seed = oov_cfg["seed"]
    if oov_cfg.get("redraw_per_repetition"):
        oov_seed = derive_seed(oov_cfg["seed"], rep)
    split = make_oov_split(ds, oov_cfg["ratio"], oov_seed)

    dcfg = config["discretizer"]
    binner_docs: list[dict] = []
    if dcfg["enabled"]:
        binners = fit_all_binners(train, dcfg["n"],
                                  skip_columns=tuple(dcfg.get("skip_columns") or ()))
        train = transform_dataset(train, binners)
        test = transform_dataset(test, binners)
        binner_docs = [b.to_json() for b in binners]

    order = list(split.iv_columns)
    order_seed = config["prompt"].get("order_seed", 0)
    if order_seed:
        order = randomize_order(order, order_seed)
    return PreparedSplit(train=train, test=test, split=split,
                         training_order=tuple(order), binner_docs=binner_docs)


def render_training_examples(prep: PreparedSplit, tmpl: PromptTemplate,
                             config: dict) -> list[LabeledExample]:
    """Advanced train-mode prompts with completions, random word included
    when enabled (training prompts only)."""
    rw = config["prompt"]["random_word"]
    pool = tuple(rw.get("pool") or RANDOM_WORD_POOL)
    out = []
    for i, (row, label) in enumerate(zip(prep.train.rows, prep.train.labels)):
        prompt = render_advanced(row, prep.train.schema, prep.split,
                                 prep.training_order, tmpl, mode="train")
        if rw["enabled"]:
            prompt = inject_random_word(prompt, pool, derive_seed(rw["seed"], i))
        out.append(LabeledExample(prompt=prompt,
                                  completion=f" {label}{tmpl.terminator}"))
    return out


def render_test_prompts(prep: PreparedSplit, tmpl: PromptTemplate,
                        config: dict) -> list[RenderedPrompt]:
    oov_order_seed = config["prompt"].get("oov_order_seed", 0)
    return [render_advanced(row, prep.test.schema, prep.split, prep.training_order,
                            tmpl, mode="test", oov_order_seed=oov_order_seed)
            for row in prep.test.rows]


def _prompt_model_run(ds: TabularDataset, prep: PreparedSplit, config: dict,
                      backend: LogitBackend, verb: ClassVerbalizer,
                      seed: int) -> RunResult:
    tmpl = resolve_template(config["prompt"])
    test_prompts = render_test_prompts(prep, tmpl, config)
    shots = config["prompt"].get("icl_shots", 0)
    if shots:
        examples = render_training_examples(prep, tmpl, config)
        texts = [assemble_icl_prompt(examples, p, shots) for p in test_prompts]
    else:
        texts = [p.text for p in test_prompts]

    decision = config["model"].get("decision", "verbalizer")
    class_names = list(ds.class_names)
    parallelism = int(config["model"].get("parallelism", 1))

    if decision == "verbalizer":
        label_order = [s.label for s in verb.specs]
        reorder = [label_order.index(c) for c in class_names]

        def classify(text: str) -> tuple[str, tuple[float, ...]]:
            response = query_logits(backend, LogitRequest(
                prompt=text, candidate_words=verb.all_words))
            probs = class_probabilities(verb, response.logits)
            return predict(verb, response.logits), tuple(probs[i] for i in reorder)

        results = _map_requests(classify, texts, parallelism)
        predictions = tuple(r[0] for r in results)
        probabilities = tuple(r[1] for r in results)
    elif decision == "text":
        def classify_text(text: str) -> str:
            generated = generate_text(backend, text, stop=tmpl.terminator)
            label = parse_generated_label(generated, class_names)
            # unmatched output scores as incorrect: emit an impossible label
            return label if label is not None else "<none>"

        predictions = tuple(_map_requests(classify_text, texts, parallelism))
        probabilities = None
    else:
        raise ConfigError(f"unknown decision mode {decision!r}",
                          module="evaluation", stage="run_experiment")

    return RunResult(predictions=predictions, probabilities=probabilities,
                     truth=tuple(prep.test.labels), seed=seed)


def _map_requests(fn, items: list, parallelism: int) -> list:
    """Apply fn to items, optionally in parallel; results stay index-aligned."""
    if parallelism <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(fn, items))


def _baseline_run(ds: TabularDataset, prep: PreparedSplit, config: dict,
                  kind: str, seed: int) -> RunResult:
    params = config["model"]["params"]
    iv_train = project_columns(prep.train, prep.split.iv_columns)
    iv_test = project_columns(prep.test, prep.split.iv_columns)
    encoder = bl.FeatureEncoder().fit(iv_train)
    x_train = encoder.transform(iv_train)
    x_test = encoder.transform(iv_test)
    class_names = list(ds.class_names)

    predictions: list[str] = []
    probabilities: list[tuple[float, ...]] = []
    if kind == "knn":
        k = min(int(params["knn_k"]), x_train.values.shape[0])
        for q in x_test.values:
            label, probs = bl.knn_vote(x_train, iv_train.labels, q, k, class_names)
            predictions.append(label)
            probabilities.append(tuple(probs))
    elif kind == "logreg":
        model = bl.logreg_fit(x_train, iv_train.labels, l2=float(params["logreg_l2"]),
                              epochs=int(params["logreg_epochs"]),
                              lr=float(params["logreg_lr"]), class_names=class_names)
        for q in x_test.values:
            label, probs = bl.logreg_predict(model, q)
            predictions.append(label)
            probabilities.append(tuple(probs))
    elif kind == "dtree":
        tree = bl.dtree_fit(x_train, iv_train.labels,
                            max_depth=int(params["dtree_max_depth"]),
                            min_leaf=int(params["dtree_min_leaf"]),
                            class_names=class_names)
        for q in x_test.values:
            label, probs = bl.dtree_predict(tree, q, class_names)
            predictions.append(label)
            probabilities.append(tuple(probs))
    else:
        raise ConfigError(f"unknown baseline kind {kind!r}",
                          module="evaluation", stage="run_experiment")
    return RunResult(predictions=tuple(predictions),
                     probabilities=tuple(probabilities),
                     truth=tuple(iv_test.labels), seed=seed)


def run_experiment(config: dict, dataset: TabularDataset | None = None) -> ExperimentOutcome:
    """Run the configured model for the configured number of repetitions."""
    kind = config["model"]["kind"]
    if kind not in MODEL_KINDS:
        raise ConfigError(f"model.kind must be one of {MODEL_KINDS}, got {kind!r}",
                          module="evaluation", stage="run_experiment")
    ds = dataset if dataset is not None else load_csv(require(config, "dataset"),
                                                      require(config, "class_column"))
    repetitions = int(config["repetitions"])
    if repetitions < 1:
        raise ConfigError("repetitions must be >= 1",
                          module="evaluation", stage="run_experiment")

    is_baseline = kind in ("logreg", "knn", "dtree")
    backend = verb = None
    if not is_baseline:
        backend = resolve_backend(config["model"])
        verb = resolve_verbalizer(config, ds.class_names)

    runs, reports, seeds = [], [], []
    for rep in range(repetitions):
        seed = derive_seed(config["base_seed"], rep)
        prep = prepare_split(ds, config, rep)
        if is_baseline:
            run = _baseline_run(ds, prep, config, kind, seed)
        else:
            run = _prompt_model_run(ds, prep, config, backend, verb, seed)
        runs.append(run)
        reports.append(evaluate_run(run, ds.class_names,
                                    positive_label=config.get("positive_label")))
        seeds.append(seed)
    return ExperimentOutcome(model=kind, runs=tuple(runs), reports=tuple(reports),
                             seeds=tuple(seeds))


def oov_sweep(config: dict, ratios: Sequence[float] | None = None) -> list[dict]:
    """Accuracy of each configured model at each OOV ratio.

    Every ratio reuses the same OOV seed, so the OOV sets are nested
    (each ratio's columns are a superset of the smaller ratios').  Rows come
    back as {ratio, model, mean, stddev}, ready for CSV emission.
    """
    ratios = list(config["sweep"]["ratios"] if ratios is None else ratios)
    if not ratios:
        raise ConfigError("sweep needs at least one ratio",
                          module="evaluation", stage="oov_sweep")
    models = list(config["sweep"]["models"])
    ds = load_csv(require(config, "dataset"), require(config, "class_column"))
    rows = []
    for ratio in ratios:
        for model in models:
            cfg = {**config,
                   "oov": {**config["oov"], "ratio": ratio},
                   "model": {**config["model"], "kind": model}}
            outcome = run_experiment(cfg, dataset=ds)
            agg = outcome.aggregate()["accuracy"]
            rows.append({"ratio": ratio, "model": model,
                         "mean": agg["mean"], "stddev": agg["stddev"]})
    return rows


@dataclass(frozen=True)
class OrderVarianceResult:
    ro_probs: tuple[float, ...]
    ao_probs: tuple[float, ...]

    @staticmethod
    def _variance(sample: tuple[float, ...]) -> float:
        m = sum(sample) / len(sample)
        return sum((x - m) ** 2 for x in sample) / len(sample)

    @property
    def ro_variance(self) -> float:
        return self._variance(self.ro_probs)

    @property
    def ao_variance(self) -> float:
        return self._variance(self.ao_probs)


def order_variance_experiment(row, truth_label: str, schema, split: OovSplit,
                              training_order: Sequence[int], tmpl: PromptTemplate,
                              verb: ClassVerbalizer, backend: LogitBackend,
                              n_prompts: int, seed: int,
                              ao_random_oov: bool = True) -> OrderVarianceResult:
    """P(correct) samples for random-order vs advanced-order prompt generation.

    Random order shuffles every variable into one flat prompt; advanced
    order keeps the IV segment fixed and (optionally) shuffles only the OOV
    segment.  Variances are population variances over the samples.
    """
    if n_prompts < 2:
        raise ConfigError("n_prompts must be >= 2",
                          module="evaluation", stage="order_variance_experiment")
    label_index = [s.label for s in verb.specs].index(truth_label)
    all_columns = list(range(len(schema)))

    def prob_correct(text: str) -> float:
        response = query_logits(backend, LogitRequest(prompt=text,
                                                      candidate_words=verb.all_words))
        return class_probabilities(verb, response.logits)[label_index]

    ro, ao = [], []
    for i in range(n_prompts):
        order = randomize_order(all_columns, derive_seed(seed, 0, i))
        ro_prompt = render_basic(row, schema, tmpl=tmpl, order=order)
        ro.append(prob_correct(ro_prompt.text))

        oov_order_seed = derive_seed(seed, 1, i) if ao_random_oov else 0
        ao_prompt = render_advanced(row, schema, split, training_order, tmpl,
                                    mode="test", oov_order_seed=oov_order_seed)
        ao.append(prob_correct(ao_prompt.text))
    return OrderVarianceResult(ro_probs=tuple(ro), ao_probs=tuple(ao))


def run_ttest(config: dict):
    """Welch t-test between two accuracy samples named in the config."""
    import json as _json

    from .stats import welch_ttest

    tcfg = config["ttest"]

    def load_sample(inline, path, name):
        if inline is not None:
            return [float(x) for x in inline]
        if path:
            with open(path, "r", encoding="utf-8") as f:
                text = f.read().strip()
            try:
                return [float(x) for x in _json.loads(text)]
            except _json.JSONDecodeError:
                return [float(x) for x in text.split()]
        raise ConfigError(f"ttest needs ttest.{name} or ttest.{name}_file",
                          module="evaluation", stage="run_ttest")

    a = load_sample(tcfg.get("a"), tcfg.get("a_file"), "a")
    b = load_sample(tcfg.get("b"), tcfg.get("b_file"), "b")
    return welch_ttest(a, b, alpha=float(tcfg.get("alpha", 0.05)))
