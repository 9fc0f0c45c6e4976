"""Command-line driver.

Exit codes: 0 success, 1 domain error (stderr names the failing
module/stage), 2 usage error.  All outputs land under --out; every file
except run_meta.json (which holds the timestamp) is byte-identical across
identical (config, seed) invocations.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from pathlib import Path

from . import __version__
from .config import apply_overrides, config_keys, load_config, require
from .dataset import load_csv, make_oov_split, save_split_manifest, save_csv, train_test_split
from .discretize import fit_all_binners, save_binners, transform_dataset
from .errors import ConfigError, OovTabError
from .evaluation import (oov_sweep, order_variance_experiment, prepare_split,
                         render_test_prompts, render_training_examples,
                         resolve_backend, resolve_template, resolve_verbalizer,
                         run_experiment, run_ttest)
from .prompts import export_jsonl

_VERBS = ("inspect", "split", "bucketize", "gen-prompts", "export-finetune",
          "infer", "evaluate", "sweep", "order-exp", "ttest")


def _write_json(path: Path, doc) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def _write_meta(out: Path, verb: str) -> None:
    _write_json(out / "run_meta.json", {
        "verb": verb,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "version": __version__,
    })


def _load(args) -> dict:
    config = load_config(args.config)
    return apply_overrides(config, args.override or [])


def _cmd_inspect(config: dict, out: Path) -> None:
    ds = load_csv(require(config, "dataset"), require(config, "class_column"))
    doc = {
        "path": config["dataset"],
        "n_rows": ds.n_rows,
        "n_columns": ds.n_columns,
        "class_column": ds.class_column,
        "class_names": list(ds.class_names),
        "columns": [{"name": c.name, "kind": c.kind} for c in ds.schema],
    }
    _write_json(out / "inspect.json", doc)
    print(json.dumps(doc, indent=2))


def _cmd_split(config: dict, out: Path) -> None:
    ds = load_csv(require(config, "dataset"), require(config, "class_column"))
    split = make_oov_split(ds, config["oov"]["ratio"], config["oov"]["seed"])
    save_split_manifest(split, out / "split.json")
    print(f"oov columns: {list(split.oov_columns)}  iv columns: {list(split.iv_columns)}")


def _cmd_bucketize(config: dict, out: Path) -> None:
    ds = load_csv(require(config, "dataset"), require(config, "class_column"))
    train, test = train_test_split(ds, config["test_fraction"], config["split_seed"])
    binners = fit_all_binners(train, config["discretizer"]["n"],
                              skip_columns=tuple(config["discretizer"]["skip_columns"] or ()))
    save_binners(binners, out / "binners.json")
    save_csv(transform_dataset(train, binners), out / "train_binned.csv")
    save_csv(transform_dataset(test, binners), out / "test_binned.csv")
    print(f"fitted {len(binners)} binners over {train.n_rows} training rows")


def _render_prompt_files(config: dict, out: Path) -> tuple[int, int]:
    ds = load_csv(require(config, "dataset"), require(config, "class_column"))
    prep = prepare_split(ds, config, rep=0)
    tmpl = resolve_template(config["prompt"])
    examples = render_training_examples(prep, tmpl, config)
    export_jsonl(examples, out / "train.jsonl")
    test_prompts = render_test_prompts(prep, tmpl, config)
    with open(out / "test_prompts.jsonl", "w", encoding="utf-8") as f:
        for p, label in zip(test_prompts, prep.test.labels):
            f.write(json.dumps({
                "prompt": p.text, "label": label,
                "iv_span": list(p.iv_span),
                "oov_span": list(p.oov_span) if p.oov_span else None,
                "variable_order": list(p.variable_order),
            }, ensure_ascii=False))
            f.write("\n")
    with open(out / "preview.txt", "w", encoding="utf-8") as f:
        for i, p in enumerate(test_prompts[:5]):
            f.write(f"[{i}] {p.text}\n")
            f.write(f"    iv_span={list(p.iv_span)} -> {p.iv_text()!r}\n")
            if p.oov_span:
                f.write(f"    oov_span={list(p.oov_span)} -> {p.oov_text()!r}\n")
            f.write(f"    variable_order={list(p.variable_order)}\n")
    return len(examples), len(test_prompts)


def _cmd_gen_prompts(config: dict, out: Path) -> None:
    n_train, n_test = _render_prompt_files(config, out)
    print(f"wrote {n_train} training examples and {n_test} test prompts")


def _cmd_export_finetune(config: dict, out: Path) -> None:
    ds = load_csv(require(config, "dataset"), require(config, "class_column"))
    prep = prepare_split(ds, config, rep=0)
    tmpl = resolve_template(config["prompt"])
    count = export_jsonl(render_training_examples(prep, tmpl, config),
                         out / "train.jsonl")
    print(f"wrote {count} prompt/completion lines")


def _cmd_infer(config: dict, out: Path) -> None:
    outcome = run_experiment({**config, "repetitions": 1})
    run = outcome.runs[0]
    ds_classes = None
    with open(out / "predictions.csv", "w", encoding="utf-8") as f:
        header = "index,truth,prediction"
        if run.probabilities is not None:
            ds_classes = len(run.probabilities[0])
            header += "," + ",".join(f"p{i}" for i in range(ds_classes))
        f.write(header + "\n")
        for i, (t, p) in enumerate(zip(run.truth, run.predictions)):
            line = f"{i},{t},{p}"
            if run.probabilities is not None:
                line += "," + ",".join(repr(x) for x in run.probabilities[i])
            f.write(line + "\n")
    print(f"wrote {len(run.predictions)} predictions")


def _cmd_evaluate(config: dict, out: Path) -> None:
    outcome = run_experiment(config)
    _write_json(out / "report.json", outcome.to_json())
    agg = outcome.aggregate()
    lines = [f"model: {agg['model']}   repetitions: {agg['repetitions']}"]
    for name in ("accuracy", "f1", "auc"):
        entry = agg[name]
        if entry is None:
            lines.append(f"{name:>9}:      n/a")
        else:
            lines.append(f"{name:>9}: {entry['mean']:8.4f} +/- {entry['stddev']:.4f}")
    table = "\n".join(lines)
    with open(out / "report.txt", "w", encoding="utf-8") as f:
        f.write(table + "\n")
    print(table)


def _cmd_sweep(config: dict, out: Path) -> None:
    rows = oov_sweep(config)
    with open(out / "sweep.csv", "w", encoding="utf-8") as f:
        f.write("ratio,model,mean,stddev\n")
        for r in rows:
            f.write(f"{r['ratio']},{r['model']},{repr(r['mean'])},{repr(r['stddev'])}\n")
    _write_json(out / "sweep.json", rows)
    for r in rows:
        print(f"ratio={r['ratio']:<5} model={r['model']:<8} accuracy={r['mean']:.4f}")


def _cmd_order_exp(config: dict, out: Path) -> None:
    ds = load_csv(require(config, "dataset"), require(config, "class_column"))
    prep = prepare_split(ds, config, rep=0)
    tmpl = resolve_template(config["prompt"])
    backend = resolve_backend(config["model"])
    verb = resolve_verbalizer(config, ds.class_names)
    ocfg = config["order_exp"]
    results = []
    for i in range(int(ocfg["n_rows"])):
        if i >= prep.test.n_rows:
            break
        res = order_variance_experiment(
            prep.test.rows[i], prep.test.labels[i], prep.test.schema, prep.split,
            prep.training_order, tmpl, verb, backend,
            n_prompts=int(ocfg["n_prompts"]),
            seed=int(ocfg["seed"]) + i,
            ao_random_oov=bool(ocfg["ao_random_oov"]))
        results.append({"row": i, "ro_variance": res.ro_variance,
                        "ao_variance": res.ao_variance,
                        "ro_probs": list(res.ro_probs), "ao_probs": list(res.ao_probs)})
    _write_json(out / "order_exp.json", results)
    for r in results:
        print(f"row {r['row']}: var(RO)={r['ro_variance']:.6f} var(AO)={r['ao_variance']:.6f}")


def _cmd_ttest(config: dict, out: Path) -> None:
    result = run_ttest(config)
    doc = {"t_stat": result.t_stat, "p_value": result.p_value, "dof": result.dof,
           "means": list(result.means), "h0_rejected": result.h0_rejected}
    _write_json(out / "ttest.json", doc)
    print(f"t={result.t_stat:.4f} dof={result.dof:.2f} p={result.p_value:.4f} "
          f"reject H0: {result.h0_rejected}")


_HANDLERS = {
    "inspect": _cmd_inspect,
    "split": _cmd_split,
    "bucketize": _cmd_bucketize,
    "gen-prompts": _cmd_gen_prompts,
    "export-finetune": _cmd_export_finetune,
    "infer": _cmd_infer,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
    "order-exp": _cmd_order_exp,
    "ttest": _cmd_ttest,
}

_VERB_HELP = {
    "inspect": "summarize a dataset's schema and classes",
    "split": "draw and save an OOV column split manifest",
    "bucketize": "fit N-tile binners on the training rows and emit binned CSVs",
    "gen-prompts": "render training/test prompts plus a span-annotated preview",
    "export-finetune": "export training prompt/completion JSONL",
    "infer": "run the configured model once and write predictions.csv",
    "evaluate": "repeated runs with metrics; writes report.json/report.txt",
    "sweep": "accuracy of each model across the configured OOV ratios",
    "order-exp": "random-order vs advanced-order probability variance",
    "ttest": "Welch t-test between two accuracy samples",
}

_VERB_KEYS = {
    "inspect": ["dataset", "class_column"],
    "split": ["dataset", "class_column", "oov.ratio", "oov.seed"],
    "bucketize": ["dataset", "class_column", "test_fraction", "split_seed",
                  "discretizer.n", "discretizer.skip_columns"],
    "gen-prompts": ["dataset", "class_column", "test_fraction", "split_seed",
                    "oov.*", "discretizer.*", "prompt.*"],
    "export-finetune": ["dataset", "class_column", "test_fraction", "split_seed",
                        "oov.*", "discretizer.*", "prompt.*"],
    "infer": ["dataset", "class_column", "model.*", "verbalizer.*", "prompt.*",
              "oov.*", "discretizer.*"],
    "evaluate": ["dataset", "class_column", "repetitions", "base_seed",
                 "positive_label", "model.*", "verbalizer.*", "prompt.*",
                 "oov.*", "discretizer.*", "metrics"],
    "sweep": ["sweep.ratios", "sweep.models", "plus all `evaluate` keys"],
    "order-exp": ["order_exp.n_rows", "order_exp.n_prompts", "order_exp.seed",
                  "order_exp.ao_random_oov", "plus all `evaluate` keys"],
    "ttest": ["ttest.a", "ttest.b", "ttest.a_file", "ttest.b_file", "ttest.alpha"],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oovtab",
        description="Prompt-based tabular classification under out-of-variable shift.",
        epilog="All config keys: " + ", ".join(config_keys()),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="verb", metavar="VERB")
    for verb in _VERBS:
        p = sub.add_parser(
            verb, help=_VERB_HELP[verb],
            description=_VERB_HELP[verb],
            epilog="config keys used: " + ", ".join(_VERB_KEYS[verb]))
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--override", action="append", metavar="KEY=VALUE",
                       help="dotted-path config override, repeatable")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--json-errors", action="store_true",
                       help="emit errors as JSON on stderr")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verb is None:
        parser.print_usage(sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        config = _load(args)
        _HANDLERS[args.verb](config, out)
        _write_meta(out, args.verb)
    except OovTabError as e:
        if args.json_errors:
            doc = {"error": {"module": e.module, "stage": e.stage, "message": e.message}}
            print(json.dumps(doc), file=sys.stderr)
        else:
            print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
