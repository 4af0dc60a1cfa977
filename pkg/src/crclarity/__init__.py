"""Tools for judging the clarity of code review comments.

A comment is judged on three attributes (Relevance, Informativeness,
Expression) through eleven criteria.  The package ships corpus handling,
a preprocessing pipeline, heuristic checkers, a trainable classifier, an
LLM judging client, and a cross-validation harness with report rendering.
"""

from .classifier import ForestModel, Hyperparameters, train
from .corpus import (
    Corpus,
    FoldPlan,
    Language,
    ReviewInstance,
    label_distribution,
    load_corpus,
    make_folds,
    required_sample_size,
    save_corpus,
    stratified_sample,
    upsample_negatives,
)
from .criteria import (
    CATALOG,
    CRITERION_IDS,
    Attribute,
    CheckerConfig,
    ClarityVerdict,
    Criterion,
    Kind,
    aggregate,
    check,
    evaluate_input,
)
from .errors import BackendError, ClarityError, TransportError, ValidationError
from .evaluation.crossval import EvalReport, cross_validate, evaluate_backends
from .evaluation.metrics import (
    Confusion,
    MetricSet,
    balanced_accuracy,
    cohens_kappa,
    confusion,
    precision_recall_f1,
)
from .preprocess import (
    NormalizedInput,
    fuse,
    normalize_instance,
    normalize_markers,
    strip_context,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "Attribute",
    "BackendError",
    "CATALOG",
    "CRITERION_IDS",
    "CheckerConfig",
    "ClarityError",
    "ClarityVerdict",
    "Confusion",
    "Corpus",
    "Criterion",
    "EvalReport",
    "FoldPlan",
    "ForestModel",
    "Hyperparameters",
    "Kind",
    "Language",
    "MetricSet",
    "NormalizedInput",
    "ReviewInstance",
    "TransportError",
    "ValidationError",
    "aggregate",
    "balanced_accuracy",
    "check",
    "cohens_kappa",
    "confusion",
    "cross_validate",
    "evaluate_backends",
    "evaluate_input",
    "fuse",
    "label_distribution",
    "load_corpus",
    "make_folds",
    "normalize_instance",
    "normalize_markers",
    "precision_recall_f1",
    "required_sample_size",
    "save_corpus",
    "stratified_sample",
    "strip_context",
    "tokenize",
    "train",
    "upsample_negatives",
]
