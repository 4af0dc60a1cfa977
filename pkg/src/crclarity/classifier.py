"""Trainable clarity classifier: n-gram features plus a random forest.

The forest is written here rather than pulled from a library because the
model file is a contract: plain JSON holding the vocabulary, the
hyperparameters, and every tree, loadable anywhere and bit-stable under a
fixed seed.  Trees are grown CART-style on Gini impurity with bootstrap
resampling and per-node feature subsampling.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .criteria import CRITERION_IDS, Attribute, CheckerConfig, check, config_from_dict, config_to_dict
from .errors import ValidationError
from .preprocess import MARKER_TOKENS, NormalizedInput, normalize_instance, tokenize
from .rng import derive_rng

MODEL_FORMAT = "crclarity-forest/1"

_URL = re.compile(r"https?://\S+|\bwww\.\S+", re.IGNORECASE)

ENGINEERED_FEATURES = (
    "length:comment_tokens",
    "flag:question_mark",
    "flag:url",
    "count:code_overlap",
)


def _checker_features() -> tuple[str, ...]:
    return tuple(f"check:{cid}" for cid in CRITERION_IDS)


@dataclass(frozen=True)
class Vocabulary:
    """Feature names plus everything needed to vectorize a new input."""

    ngrams: tuple[str, ...]
    min_frequency: int
    use_checker_features: bool
    checker_config: CheckerConfig = CheckerConfig()

    @property
    def feature_names(self) -> tuple[str, ...]:
        engineered = ENGINEERED_FEATURES + (
            _checker_features() if self.use_checker_features else ()
        )
        return engineered + tuple(f"ngram:{g}" for g in self.ngrams)

    def __len__(self) -> int:
        return len(self.feature_names)

    def vectorize(self, ninput: NormalizedInput) -> np.ndarray:
        comment = ninput.comment
        comment_tokens = tokenize(comment)
        fused_tokens = tokenize(ninput.fused_text)
        diff_tokens = {
            t for t in tokenize(ninput.normalized_diff) if t not in MARKER_TOKENS
        }
        values = [
            float(len(comment_tokens)),
            1.0 if "?" in comment else 0.0,
            1.0 if _URL.search(comment) else 0.0,
            float(len({t for t in comment_tokens if len(t) > 1} & diff_tokens)),
        ]
        if self.use_checker_features:
            values.extend(
                1.0 if check(cid, ninput, self.checker_config) else 0.0
                for cid in CRITERION_IDS
            )
        counts = Counter(_ngrams(fused_tokens))
        values.extend(float(counts[g]) for g in self.ngrams)
        return np.asarray(values, dtype=np.float64)


def _ngrams(tokens: list[str]) -> list[str]:
    grams = list(tokens)
    grams.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    return grams


def fit_vocabulary(
    inputs: Sequence[NormalizedInput],
    min_frequency: int = 2,
    use_checker_features: bool = True,
    checker_config: CheckerConfig | None = None,
) -> Vocabulary:
    """Collect unigrams/bigrams appearing in at least ``min_frequency`` inputs."""
    if min_frequency < 1:
        raise ValidationError("min_frequency must be at least 1")
    document_frequency: Counter[str] = Counter()
    for ninput in inputs:
        document_frequency.update(set(_ngrams(tokenize(ninput.fused_text))))
    kept = sorted(g for g, n in document_frequency.items() if n >= min_frequency)
    return Vocabulary(
        ngrams=tuple(kept),
        min_frequency=min_frequency,
        use_checker_features=use_checker_features,
        checker_config=checker_config or CheckerConfig(),
    )


@dataclass(frozen=True)
class Hyperparameters:
    n_trees: int = 100
    max_depth: int | None = None
    min_leaf: int = 2
    feature_fraction: float | None = None  # None means sqrt(n_features)
    min_frequency: int = 2
    use_checker_features: bool = True

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValidationError("n_trees must be at least 1")
        if self.min_leaf < 1:
            raise ValidationError("min_leaf must be at least 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValidationError("max_depth must be at least 1")
        if self.feature_fraction is not None and not 0.0 < self.feature_fraction <= 1.0:
            raise ValidationError("feature_fraction must be in (0, 1]")


def _grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    depth: int,
    hp: Hyperparameters,
    subsample: int,
) -> dict:
    n = y.size
    positives = int(y.sum())
    leaf = {"leaf": positives / n}
    if positives in (0, n) or n < 2 * hp.min_leaf:
        return leaf
    if hp.max_depth is not None and depth >= hp.max_depth:
        return leaf

    candidates = sorted(rng.choice(X.shape[1], size=subsample, replace=False).tolist())
    best: tuple[float, int, float] | None = None
    for feature in candidates:
        column = X[:, feature]
        order = np.argsort(column, kind="stable")
        col_sorted = column[order]
        pos_cum = np.cumsum(y[order])
        cut = np.nonzero(col_sorted[1:] > col_sorted[:-1])[0] + 1
        cut = cut[(cut >= hp.min_leaf) & (n - cut >= hp.min_leaf)]
        if cut.size == 0:
            continue
        left_n = cut.astype(np.float64)
        left_pos = pos_cum[cut - 1].astype(np.float64)
        right_n = n - left_n
        right_pos = positives - left_pos
        gini_left = 1.0 - (left_pos / left_n) ** 2 - ((left_n - left_pos) / left_n) ** 2
        gini_right = (
            1.0 - (right_pos / right_n) ** 2 - ((right_n - right_pos) / right_n) ** 2
        )
        weighted = (left_n * gini_left + right_n * gini_right) / n
        i = int(np.argmin(weighted))
        if best is None or weighted[i] < best[0] - 1e-12:
            threshold = (col_sorted[cut[i] - 1] + col_sorted[cut[i]]) / 2.0
            best = (float(weighted[i]), feature, float(threshold))

    if best is None:
        return leaf
    _, feature, threshold = best
    mask = X[:, feature] <= threshold
    return {
        "feature": feature,
        "threshold": threshold,
        "left": _grow_tree(X[mask], y[mask], rng, depth + 1, hp, subsample),
        "right": _grow_tree(X[~mask], y[~mask], rng, depth + 1, hp, subsample),
    }


def _tree_probability(tree: dict, x: np.ndarray) -> float:
    node = tree
    while "leaf" not in node:
        node = node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]
    return node["leaf"]


@dataclass(frozen=True)
class ForestModel:
    attribute: Attribute
    vocabulary: Vocabulary
    hyperparameters: Hyperparameters
    seed: int
    trees: tuple[dict, ...]

    def predict_input(self, ninput: NormalizedInput) -> tuple[bool, float]:
        x = self.vocabulary.vectorize(ninput)
        score = float(
            sum(_tree_probability(tree, x) for tree in self.trees) / len(self.trees)
        )
        return score >= 0.5, score

    def predict(self, comment: str, diff_hunk: str) -> tuple[bool, float]:
        return self.predict_input(normalize_instance(comment, diff_hunk))

    def save(self, path: str | Path) -> None:
        payload = {
            "format": MODEL_FORMAT,
            "attribute": self.attribute.value,
            "seed": self.seed,
            "hyperparameters": {
                f.name: getattr(self.hyperparameters, f.name)
                for f in fields(Hyperparameters)
            },
            "vocabulary": {
                "ngrams": list(self.vocabulary.ngrams),
                "min_frequency": self.vocabulary.min_frequency,
                "use_checker_features": self.vocabulary.use_checker_features,
                "checker_config": config_to_dict(self.vocabulary.checker_config),
            },
            "trees": list(self.trees),
        }
        Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ForestModel":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read model: {exc}") from None
        if payload.get("format") != MODEL_FORMAT:
            raise ValidationError(
                f"unsupported model format: {payload.get('format')!r}"
            )
        vocab_raw = payload["vocabulary"]
        vocabulary = Vocabulary(
            ngrams=tuple(vocab_raw["ngrams"]),
            min_frequency=int(vocab_raw["min_frequency"]),
            use_checker_features=bool(vocab_raw["use_checker_features"]),
            checker_config=config_from_dict(vocab_raw["checker_config"]),
        )
        return cls(
            attribute=Attribute.parse(payload["attribute"]),
            vocabulary=vocabulary,
            hyperparameters=Hyperparameters(**payload["hyperparameters"]),
            seed=int(payload["seed"]),
            trees=tuple(payload["trees"]),
        )


def train(
    corpus_like,
    attribute: Attribute,
    hyperparameters: Hyperparameters | None = None,
    seed: int = 0,
    checker_config: CheckerConfig | None = None,
) -> ForestModel:
    """Fit a forest for one attribute on a labeled corpus.

    Instances are processed in id order, so the result does not depend on
    how the corpus happens to be arranged.  Training data containing only
    one class is rejected.
    """
    hp = hyperparameters or Hyperparameters()
    instances = sorted(corpus_like, key=lambda inst: inst.id)
    if not instances:
        raise ValidationError("cannot train on an empty corpus")
    unlabeled = [inst.id for inst in instances if inst.labels is None]
    if unlabeled:
        raise ValidationError(
            f"cannot train on unlabeled instances: {', '.join(unlabeled[:5])}"
        )
    y = np.asarray(
        [inst.labels.positive(attribute) for inst in instances], dtype=np.int64
    )
    if y.min() == y.max():
        label = "positive" if y[0] else "negative"
        raise ValidationError(
            f"degenerate labels: every training instance is {label} for {attribute.value}"
        )
    inputs = [normalize_instance(inst.comment, inst.diff_hunk) for inst in instances]
    vocabulary = fit_vocabulary(
        inputs,
        min_frequency=hp.min_frequency,
        use_checker_features=hp.use_checker_features,
        checker_config=checker_config,
    )
    X = np.vstack([vocabulary.vectorize(ninput) for ninput in inputs])
    n_features = X.shape[1]
    if hp.feature_fraction is None:
        subsample = max(1, round(math.sqrt(n_features)))
    else:
        subsample = max(1, round(hp.feature_fraction * n_features))
    subsample = min(subsample, n_features)

    trees = []
    n = len(instances)
    for index in range(hp.n_trees):
        rng = derive_rng(seed, "forest", attribute.value, str(index))
        bootstrap = rng.integers(0, n, size=n)
        trees.append(_grow_tree(X[bootstrap], y[bootstrap], rng, 0, hp, subsample))
    return ForestModel(
        attribute=attribute,
        vocabulary=vocabulary,
        hyperparameters=hp,
        seed=seed,
        trees=tuple(trees),
    )
