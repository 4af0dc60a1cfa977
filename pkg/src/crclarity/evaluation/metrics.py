"""Binary classification metrics with explicit undefined handling.

A metric whose denominator is zero is ``None`` rather than silently 0 or 1;
averaging code skips ``None`` values and reports how many were skipped.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ..errors import ValidationError

METRIC_NAMES = ("balanced_accuracy", "precision", "recall", "f1")


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValidationError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "Confusion") -> "Confusion":
        return Confusion(
            self.tp + other.tp,
            self.fp + other.fp,
            self.tn + other.tn,
            self.fn + other.fn,
        )


def confusion(predictions: Sequence[bool], labels: Sequence[bool]) -> Confusion:
    if len(predictions) != len(labels):
        raise ValidationError(
            f"length mismatch: {len(predictions)} predictions, {len(labels)} labels"
        )
    if not predictions:
        raise ValidationError("cannot build a confusion matrix from empty inputs")
    tp = fp = tn = fn = 0
    for predicted, actual in zip(predictions, labels):
        if predicted and actual:
            tp += 1
        elif predicted and not actual:
            fp += 1
        elif not predicted and actual:
            fn += 1
        else:
            tn += 1
    return Confusion(tp=tp, fp=fp, tn=tn, fn=fn)


def balanced_accuracy(c: Confusion) -> float | None:
    """Mean of true-positive and true-negative rates; None if a class is absent."""
    if c.tp + c.fn == 0 or c.tn + c.fp == 0:
        return None
    tpr = c.tp / (c.tp + c.fn)
    tnr = c.tn / (c.tn + c.fp)
    return (tpr + tnr) / 2.0


def precision_recall_f1(c: Confusion) -> tuple[float | None, float | None, float | None]:
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else None
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else None
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return precision, recall, f1


@dataclass(frozen=True)
class MetricSet:
    balanced_accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None

    @classmethod
    def from_confusion(cls, c: Confusion) -> "MetricSet":
        precision, recall, f1 = precision_recall_f1(c)
        return cls(
            balanced_accuracy=balanced_accuracy(c),
            precision=precision,
            recall=recall,
            f1=f1,
        )

    def as_dict(self) -> dict[str, float | None]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def average_metrics(metric_sets: Sequence[MetricSet]) -> tuple[MetricSet, dict[str, int]]:
    """Mean per metric over the sets, skipping undefined values.

    Returns the averaged set plus, per metric, how many inputs were
    undefined and therefore excluded.  A metric undefined everywhere stays
    undefined.
    """
    averaged: dict[str, float | None] = {}
    skipped: dict[str, int] = {}
    for name in METRIC_NAMES:
        values = [getattr(m, name) for m in metric_sets]
        defined = [v for v in values if v is not None]
        skipped[name] = len(values) - len(defined)
        averaged[name] = sum(defined) / len(defined) if defined else None
    return MetricSet(**averaged), skipped


def cohens_kappa(labels_a: Sequence[bool], labels_b: Sequence[bool]) -> float:
    """Chance-corrected agreement between two boolean label lists.

    Computed with exact rational arithmetic so equal inputs give exactly
    1.0 and symmetric disagreement gives exactly -1.0.  When both raters
    are constant and identical, expected agreement is 1 and the statistic
    is defined as 1.0.
    """
    if len(labels_a) != len(labels_b):
        raise ValidationError(
            f"length mismatch: {len(labels_a)} vs {len(labels_b)} labels"
        )
    n = len(labels_a)
    if n == 0:
        raise ValidationError("cannot compute agreement on empty label lists")
    agree = sum(1 for a, b in zip(labels_a, labels_b) if bool(a) == bool(b))
    a_true = sum(map(bool, labels_a))
    b_true = sum(map(bool, labels_b))
    observed = Fraction(agree, n)
    expected = Fraction(a_true * b_true + (n - a_true) * (n - b_true), n * n)
    if expected == 1:
        return 1.0
    return float((observed - expected) / (1 - expected))
