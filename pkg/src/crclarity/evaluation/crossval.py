"""k-fold cross-validation over evaluation backends.

One fold plan is built per run and shared verbatim by every backend and
attribute, so results stay comparable; its hash is embedded in reports.
Each held-out fold is split into a validation half (visible to ``fit``)
and a test half (never seen before ``predict``).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from ..backends import EvaluationBackend
from ..corpus import Corpus, FoldPlan, make_folds, upsample_negatives
from ..criteria import Attribute
from ..errors import ValidationError
from ..rng import derive_seed
from .metrics import Confusion, MetricSet, average_metrics, confusion

log = logging.getLogger(__name__)

REPORT_FORMAT = "crclarity-report/1"


@dataclass(frozen=True)
class FoldOutcome:
    fold: int
    train_size: int
    validation_size: int
    test_size: int
    result: Confusion | None
    metrics: MetricSet | None
    failed: bool = False
    error: str | None = None


@dataclass(frozen=True)
class AttributeResult:
    backend: str
    attribute: Attribute
    folds: tuple[FoldOutcome, ...]
    mean: MetricSet
    undefined_counts: Mapping[str, int]
    pooled: MetricSet
    diagnostics: Mapping[str, object]

    @property
    def failed_folds(self) -> tuple[int, ...]:
        return tuple(f.fold for f in self.folds if f.failed)


def _materialize(corpus: Corpus, ids: Sequence[str]) -> Corpus:
    wanted = set(ids)
    return Corpus(
        tuple(inst for inst in corpus.instances if inst.id in wanted),
        source=corpus.source,
    )


def run_fold(
    backend: EvaluationBackend,
    corpus: Corpus,
    plan: FoldPlan,
    fold: int,
    attribute: Attribute,
    seed: int,
    upsample: bool = True,
) -> FoldOutcome:
    validation_ids, test_ids = plan.holdout_split(fold)
    training = _materialize(corpus, plan.training_ids(fold))
    validation = _materialize(corpus, validation_ids)
    test = _materialize(corpus, test_ids)
    if upsample:
        training = upsample_negatives(
            training, attribute, seed=derive_seed(seed, "upsample", str(fold))
        )

    held_out = {inst.base_id for inst in validation} | {inst.base_id for inst in test}
    leaked = held_out & {inst.base_id for inst in training}
    if leaked:
        raise ValidationError(f"fold {fold} leaks ids into training: {sorted(leaked)[:5]}")

    labels = []
    for inst in test.instances:
        if inst.labels is None:
            raise ValidationError(f"test instance {inst.id} has no labels")
        labels.append(inst.labels.positive(attribute))

    backend.fit(training, validation, attribute, seed=derive_seed(seed, "fit", str(fold)))
    predictions = [label for label, _ in backend.predict(test.instances, attribute)]
    result = confusion(predictions, labels)
    return FoldOutcome(
        fold=fold,
        train_size=len(training),
        validation_size=len(validation),
        test_size=len(test),
        result=result,
        metrics=MetricSet.from_confusion(result),
    )


def cross_validate(
    backend: EvaluationBackend,
    corpus: Corpus,
    attribute: Attribute,
    k: int = 5,
    seed: int = 0,
    plan: FoldPlan | None = None,
    upsample: bool = True,
) -> AttributeResult:
    """Evaluate one backend on one attribute across all folds.

    A backend that raises on some fold marks that fold failed and the run
    continues; the failure is recorded in the outcome.
    """
    if plan is None:
        plan = make_folds(corpus, k=k, seed=seed)
    outcomes: list[FoldOutcome] = []
    for fold in range(plan.k):
        try:
            outcomes.append(
                run_fold(backend, corpus, plan, fold, attribute, seed, upsample=upsample)
            )
        except Exception as exc:  # noqa: BLE001  (contract: a bad fold must not kill the run)
            log.warning(
                "fold %d failed for backend %s on %s: %s",
                fold, backend.name, attribute.value, exc,
            )
            validation_ids, test_ids = plan.holdout_split(fold)
            outcomes.append(
                FoldOutcome(
                    fold=fold,
                    train_size=len(plan.training_ids(fold)),
                    validation_size=len(validation_ids),
                    test_size=len(test_ids),
                    result=None,
                    metrics=None,
                    failed=True,
                    error=str(exc),
                )
            )
    defined = [o.metrics for o in outcomes if o.metrics is not None]
    if defined:
        mean, undefined = average_metrics(defined)
    else:
        mean, undefined = MetricSet(None, None, None, None), {}
    pooled_confusions = [o.result for o in outcomes if o.result is not None]
    if pooled_confusions:
        total = pooled_confusions[0]
        for c in pooled_confusions[1:]:
            total = total + c
        pooled = MetricSet.from_confusion(total)
    else:
        pooled = MetricSet(None, None, None, None)
    return AttributeResult(
        backend=backend.name,
        attribute=attribute,
        folds=tuple(outcomes),
        mean=mean,
        undefined_counts=dict(undefined),
        pooled=pooled,
        diagnostics=dict(backend.diagnostics()),
    )


@dataclass(frozen=True)
class EvalReport:
    """Everything a rendered report needs, in one serializable value."""

    k: int
    seed: int
    fold_plan_hash: str
    corpus_size: int
    upsampled: bool
    results: tuple[AttributeResult, ...]
    run_config: Mapping[str, object]

    def backends(self) -> tuple[str, ...]:
        seen: list[str] = []
        for result in self.results:
            if result.backend not in seen:
                seen.append(result.backend)
        return tuple(seen)

    def for_backend(self, backend: str) -> tuple[AttributeResult, ...]:
        return tuple(r for r in self.results if r.backend == backend)

    def macro_average(self, backend: str) -> tuple[MetricSet, dict[str, int]]:
        """Mean of per-attribute fold-mean metrics for one backend."""
        per_attribute = [r.mean for r in self.for_backend(backend)]
        if not per_attribute:
            raise ValidationError(f"no results for backend {backend!r}")
        return average_metrics(per_attribute)

    def to_json(self) -> str:
        def metric_dict(m: MetricSet | None) -> dict | None:
            return None if m is None else m.as_dict()

        payload = {
            "format": REPORT_FORMAT,
            "k": self.k,
            "seed": self.seed,
            "fold_plan_hash": self.fold_plan_hash,
            "corpus_size": self.corpus_size,
            "upsampled": self.upsampled,
            "run_config": dict(self.run_config),
            "results": [
                {
                    "backend": r.backend,
                    "attribute": r.attribute.value,
                    "mean": metric_dict(r.mean),
                    "undefined_counts": dict(r.undefined_counts),
                    "pooled": metric_dict(r.pooled),
                    "diagnostics": dict(r.diagnostics),
                    "folds": [
                        {
                            "fold": f.fold,
                            "train_size": f.train_size,
                            "validation_size": f.validation_size,
                            "test_size": f.test_size,
                            "confusion": None
                            if f.result is None
                            else {
                                "tp": f.result.tp,
                                "fp": f.result.fp,
                                "tn": f.result.tn,
                                "fn": f.result.fn,
                            },
                            "metrics": metric_dict(f.metrics),
                            "failed": f.failed,
                            "error": f.error,
                        }
                        for f in r.folds
                    ],
                }
                for r in self.results
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid report JSON: {exc.msg}") from None
        if payload.get("format") != REPORT_FORMAT:
            raise ValidationError(f"unsupported report format: {payload.get('format')!r}")

        def metric_set(raw: Mapping[str, float | None] | None) -> MetricSet:
            if raw is None:
                return MetricSet(None, None, None, None)
            return MetricSet(**{k: raw.get(k) for k in
                                ("balanced_accuracy", "precision", "recall", "f1")})

        results = []
        for r in payload["results"]:
            folds = []
            for f in r["folds"]:
                raw_confusion = f.get("confusion")
                result = None if raw_confusion is None else Confusion(**raw_confusion)
                folds.append(
                    FoldOutcome(
                        fold=int(f["fold"]),
                        train_size=int(f["train_size"]),
                        validation_size=int(f["validation_size"]),
                        test_size=int(f["test_size"]),
                        result=result,
                        metrics=None if f.get("metrics") is None else metric_set(f["metrics"]),
                        failed=bool(f.get("failed", False)),
                        error=f.get("error"),
                    )
                )
            results.append(
                AttributeResult(
                    backend=r["backend"],
                    attribute=Attribute.parse(r["attribute"]),
                    folds=tuple(folds),
                    mean=metric_set(r.get("mean")),
                    undefined_counts=dict(r.get("undefined_counts", {})),
                    pooled=metric_set(r.get("pooled")),
                    diagnostics=dict(r.get("diagnostics", {})),
                )
            )
        return cls(
            k=int(payload["k"]),
            seed=int(payload["seed"]),
            fold_plan_hash=payload["fold_plan_hash"],
            corpus_size=int(payload["corpus_size"]),
            upsampled=bool(payload["upsampled"]),
            results=tuple(results),
            run_config=dict(payload.get("run_config", {})),
        )

    @classmethod
    def load(cls, path: str | Path) -> "EvalReport":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ValidationError(f"cannot read report: {exc}") from None
        return cls.from_json(text)


def evaluate_backends(
    backends: Sequence[EvaluationBackend],
    corpus: Corpus,
    k: int = 5,
    seed: int = 0,
    upsample: bool = True,
    stratify_attribute: Attribute | None = None,
    run_config: Mapping[str, object] | None = None,
    attributes: Sequence[Attribute] = tuple(Attribute),
) -> EvalReport:
    """Run every backend over every attribute on one shared fold plan."""
    plan = make_folds(corpus, k=k, seed=seed, stratify_attribute=stratify_attribute)
    results = []
    for backend in backends:
        for attribute in attributes:
            results.append(
                cross_validate(
                    backend, corpus, attribute,
                    k=k, seed=seed, plan=plan, upsample=upsample,
                )
            )
    return EvalReport(
        k=plan.k,
        seed=seed,
        fold_plan_hash=plan.plan_hash(),
        corpus_size=len(corpus),
        upsampled=upsample,
        results=tuple(results),
        run_config=dict(run_config or {}),
    )
