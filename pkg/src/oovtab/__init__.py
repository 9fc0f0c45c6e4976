"""oovtab: prompt-based tabular classification under out-of-variable shift.

Pipeline: CSV dataset -> seeded OOV column split -> N-tile categorical
change -> advanced prompts (OOV segment + fixed-order IV segment) ->
verbalizer classification over a pluggable logit backend, evaluated against
from-scratch traditional-ML baselines with repeated-run statistics.
"""

__version__ = "0.1.0"

from .dataset import (ColumnSchema, OovSplit, TabularDataset, load_csv,
                      make_oov_split, project_columns, save_csv, train_test_split)
from .discretize import NTileBinner, fit_thresholds, transform_dataset, transform_value
from .prompts import (LabeledExample, PromptTemplate, RenderedPrompt,
                      assemble_icl_prompt, export_jsonl, inject_random_word,
                      randomize_order, render_advanced, render_basic)
from .verbalizer import (ClassSpec, ClassVerbalizer, class_probabilities,
                         default_verbalizer, logistic, predict, score_class,
                         verbalizer_loss, verbalizer_loss_grad)
from .backend import (HttpLogitBackend, LogitRequest, LogitResponse, MockBackend,
                      MockModelSpec, OpenAICompletionsBackend,
                      check_protocol_conformance, generate_text,
                      parse_generated_label, query_logits)
from .metrics import accuracy, auc_roc, f1_score
from .stats import TTestResult, welch_ttest
from .evaluation import (EvalReport, ExperimentOutcome, RunResult,
                         oov_sweep, order_variance_experiment, run_experiment)

__all__ = [name for name in dir() if not name.startswith("_")]
