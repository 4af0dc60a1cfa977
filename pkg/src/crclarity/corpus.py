"""Review-comment corpora: JSONL loading, sampling, folds, label stats."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from statistics import NormalDist
from typing import Iterable, Iterator, Mapping

from .criteria import CRITERION_IDS, Attribute, ClarityVerdict
from .errors import ValidationError
from .rng import derive_rng

UPSAMPLE_MARK = "~up"


class Language(str, Enum):
    C = "C"
    CPP = "C++"
    CSHARP = "C#"
    GOLANG = "Golang"
    JAVA = "Java"
    JAVASCRIPT = "JavaScript"
    PHP = "PHP"
    PYTHON = "Python"
    RUBY = "Ruby"


_LANGUAGE_ALIASES = {
    "c": Language.C,
    "c++": Language.CPP,
    "cpp": Language.CPP,
    "c#": Language.CSHARP,
    "csharp": Language.CSHARP,
    "go": Language.GOLANG,
    "golang": Language.GOLANG,
    "java": Language.JAVA,
    "javascript": Language.JAVASCRIPT,
    "js": Language.JAVASCRIPT,
    "php": Language.PHP,
    "py": Language.PYTHON,
    "python": Language.PYTHON,
    "ruby": Language.RUBY,
}


def parse_language(value: str | Language) -> Language:
    if isinstance(value, Language):
        return value
    try:
        return _LANGUAGE_ALIASES[value.strip().lower()]
    except KeyError:
        raise ValidationError(f"unknown language: {value!r}") from None


@dataclass(frozen=True)
class ReviewInstance:
    """One review comment with its diff hunk and optional clarity labels."""

    id: str
    language: Language
    diff_hunk: str
    comment: str
    labels: ClarityVerdict | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("instance id must be non-empty")
        if not self.comment.strip():
            raise ValidationError(f"instance {self.id}: comment must be non-empty")

    @property
    def base_id(self) -> str:
        """The id without any upsampling suffix."""
        return self.id.split(UPSAMPLE_MARK, 1)[0]


@dataclass(frozen=True)
class Corpus:
    instances: tuple[ReviewInstance, ...]
    source: str = ""

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for inst in self.instances:
            if inst.id in seen:
                raise ValidationError(f"duplicate instance id: {inst.id}")
            seen.add(inst.id)

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self) -> Iterator[ReviewInstance]:
        return iter(self.instances)

    def by_id(self, instance_id: str) -> ReviewInstance:
        for inst in self.instances:
            if inst.id == instance_id:
                return inst
        raise ValidationError(f"no instance with id {instance_id!r}")

    def ids(self) -> tuple[str, ...]:
        return tuple(inst.id for inst in self.instances)

    def languages(self) -> tuple[Language, ...]:
        present = {inst.language for inst in self.instances}
        return tuple(lang for lang in Language if lang in present)

    def restrict(self, keep_ids: Iterable[str], source_note: str = "") -> "Corpus":
        wanted = set(keep_ids)
        kept = tuple(inst for inst in self.instances if inst.id in wanted)
        missing = wanted - {inst.id for inst in kept}
        if missing:
            raise ValidationError(f"unknown ids: {', '.join(sorted(missing))}")
        return Corpus(kept, source=source_note or self.source)


def _labels_from_record(record: Mapping[str, object], where: str) -> ClarityVerdict | None:
    raw = record.get("labels")
    if raw is None:
        return None
    if not isinstance(raw, Mapping):
        raise ValidationError(f"{where}: labels must be an object")
    attribute_verdicts: dict[Attribute, bool] = {}
    for attribute in Attribute:
        key = attribute.value.lower()
        if key not in raw:
            raise ValidationError(f"{where}: labels missing {key!r}")
        value = raw[key]
        if not isinstance(value, bool):
            raise ValidationError(f"{where}: label {key!r} must be a boolean")
        attribute_verdicts[attribute] = value
    criteria_raw = raw.get("criteria")
    criterion_verdicts: dict[str, bool] | None = None
    if criteria_raw is not None:
        if not isinstance(criteria_raw, Mapping):
            raise ValidationError(f"{where}: criteria must be an object")
        criterion_verdicts = {}
        for key, value in criteria_raw.items():
            if not isinstance(value, bool):
                raise ValidationError(f"{where}: criterion {key!r} must be a boolean")
            criterion_verdicts[str(key)] = value
    try:
        return ClarityVerdict(attribute_verdicts, criterion_verdicts)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def record_to_instance(record: Mapping[str, object], where: str) -> ReviewInstance:
    for field_name in ("id", "lang", "diff_hunk", "comment"):
        if field_name not in record:
            raise ValidationError(f"{where}: missing field {field_name!r}")
        if not isinstance(record[field_name], str):
            raise ValidationError(f"{where}: field {field_name!r} must be a string")
    try:
        language = parse_language(record["lang"])  # type: ignore[arg-type]
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None
    try:
        return ReviewInstance(
            id=record["id"],  # type: ignore[arg-type]
            language=language,
            diff_hunk=record["diff_hunk"],  # type: ignore[arg-type]
            comment=record["comment"],  # type: ignore[arg-type]
            labels=_labels_from_record(record, where),
        )
    except ValidationError as exc:
        if str(exc).startswith(where):
            raise
        raise ValidationError(f"{where}: {exc}") from None


def instance_to_record(inst: ReviewInstance) -> dict:
    record: dict = {
        "id": inst.id,
        "lang": inst.language.value,
        "diff_hunk": inst.diff_hunk,
        "comment": inst.comment,
    }
    if inst.labels is not None:
        labels: dict = {
            attribute.value.lower(): inst.labels.attribute_verdicts[attribute]
            for attribute in Attribute
        }
        if inst.labels.criterion_verdicts is not None:
            labels["criteria"] = {
                cid: inst.labels.criterion_verdicts[cid]
                for cid in CRITERION_IDS
                if cid in inst.labels.criterion_verdicts
            }
        record["labels"] = labels
    return record


def load_corpus(path: str | Path) -> Corpus:
    """Read a JSONL corpus; any malformed line fails the whole load."""
    path = Path(path)
    instances: list[ReviewInstance] = []
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read corpus: {exc}") from None
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        where = f"{path.name}:{number}"
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{where}: invalid JSON ({exc.msg})") from None
        if not isinstance(record, dict):
            raise ValidationError(f"{where}: expected a JSON object")
        instances.append(record_to_instance(record, where))
    return Corpus(tuple(instances), source=str(path))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for inst in corpus.instances:
            handle.write(json.dumps(instance_to_record(inst), sort_keys=True))
            handle.write("\n")


def required_sample_size(
    population: int, confidence: float = 0.95, margin: float = 0.05
) -> int:
    """Sample size for a proportion at worst-case variance, with finite-
    population correction, rounded up.  Never exceeds the population."""
    if population < 1:
        raise ValidationError("population must be at least 1")
    if not 0.0 < confidence < 1.0:
        raise ValidationError("confidence must be in (0, 1)")
    if not 0.0 < margin < 1.0:
        raise ValidationError("margin must be in (0, 1)")
    z = NormalDist().inv_cdf(0.5 + confidence / 2.0)
    unadjusted = z * z * 0.25 / (margin * margin)
    corrected = unadjusted / (1.0 + (unadjusted - 1.0) / population)
    return min(population, math.ceil(corrected))


@dataclass(frozen=True)
class SamplePlan:
    population: int
    confidence: float
    margin: float
    sample_size: int


def sample_plan(population: int, confidence: float = 0.95, margin: float = 0.05) -> SamplePlan:
    return SamplePlan(
        population=population,
        confidence=confidence,
        margin=margin,
        sample_size=required_sample_size(population, confidence, margin),
    )


def stratified_sample(
    corpus: Corpus,
    confidence: float = 0.95,
    margin: float = 0.05,
    seed: int = 0,
) -> Corpus:
    """Sample each language stratum at its own required size.

    Selection within a stratum is uniform without replacement; the result
    keeps the original corpus order.
    """
    if not corpus.instances:
        raise ValidationError("cannot sample an empty corpus")
    keep: set[str] = set()
    for language in Language:
        members = [inst for inst in corpus.instances if inst.language is language]
        if not members:
            continue
        size = required_sample_size(len(members), confidence, margin)
        rng = derive_rng(seed, "stratified-sample", language.value)
        chosen = rng.choice(len(members), size=size, replace=False)
        keep.update(members[int(i)].id for i in chosen)
    sampled = tuple(inst for inst in corpus.instances if inst.id in keep)
    return Corpus(sampled, source=f"{corpus.source}#sample")


@dataclass(frozen=True)
class FoldPlan:
    """A reproducible assignment of instance ids to k folds."""

    k: int
    seed: int
    assignment: Mapping[str, int]

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValidationError("k must be at least 2")
        bad = {i: f for i, f in self.assignment.items() if not 0 <= f < self.k}
        if bad:
            raise ValidationError(f"fold index out of range for ids: {sorted(bad)}")

    def fold_ids(self, fold: int) -> tuple[str, ...]:
        self._check_fold(fold)
        return tuple(sorted(i for i, f in self.assignment.items() if f == fold))

    def training_ids(self, fold: int) -> tuple[str, ...]:
        self._check_fold(fold)
        return tuple(sorted(i for i, f in self.assignment.items() if f != fold))

    def holdout_split(self, fold: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
        """Split the held-out fold into validation and test halves.

        The fold's ids are sorted; the first half (rounded down) serves as
        validation, the remainder as test.
        """
        ids = self.fold_ids(fold)
        half = len(ids) // 2
        return ids[:half], ids[half:]

    def _check_fold(self, fold: int) -> None:
        if not 0 <= fold < self.k:
            raise ValidationError(f"fold must be in [0, {self.k}), got {fold}")

    def to_json(self) -> str:
        payload = {
            "k": self.k,
            "seed": self.seed,
            "assignment": {i: self.assignment[i] for i in sorted(self.assignment)},
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def plan_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "FoldPlan":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read fold plan: {exc}") from None
        for key in ("k", "seed", "assignment"):
            if key not in payload:
                raise ValidationError(f"fold plan missing field {key!r}")
        return cls(
            k=int(payload["k"]),
            seed=int(payload["seed"]),
            assignment={str(i): int(f) for i, f in payload["assignment"].items()},
        )


def make_folds(
    corpus: Corpus,
    k: int = 5,
    seed: int = 0,
    stratify_attribute: Attribute | None = None,
) -> FoldPlan:
    """Assign every instance to one of k folds, sizes differing by at most 1.

    Ids are sorted, shuffled with the seed, and dealt round-robin.  With
    ``stratify_attribute`` set, positives and negatives for that attribute
    are dealt separately so per-fold label counts stay near-balanced
    (requires labels on every instance).
    """
    if k < 2:
        raise ValidationError("k must be at least 2")
    if k > len(corpus):
        raise ValidationError(f"k={k} exceeds corpus size {len(corpus)}")
    rng = derive_rng(seed, "folds")
    if stratify_attribute is None:
        ids = sorted(corpus.ids())
        order = [ids[int(i)] for i in rng.permutation(len(ids))]
    else:
        unlabeled = [inst.id for inst in corpus if inst.labels is None]
        if unlabeled:
            raise ValidationError(
                f"stratified folds need labels; unlabeled: {', '.join(sorted(unlabeled)[:5])}"
            )
        positives = sorted(
            inst.id for inst in corpus if inst.labels.positive(stratify_attribute)
        )
        negatives = sorted(
            inst.id for inst in corpus if not inst.labels.positive(stratify_attribute)
        )
        order = [positives[int(i)] for i in rng.permutation(len(positives))]
        order += [negatives[int(i)] for i in rng.permutation(len(negatives))]
    assignment = {instance_id: i % k for i, instance_id in enumerate(order)}
    return FoldPlan(k=k, seed=seed, assignment=assignment)


def upsample_negatives(train: Corpus, attribute: Attribute, seed: int = 0) -> Corpus:
    """Duplicate negative instances until class counts match.

    Copies are drawn uniformly with replacement and get a ``~up`` suffix on
    their ids so the corpus invariant (unique ids) still holds; use
    ``ReviewInstance.base_id`` when checking overlap against other splits.
    Expects at least as many positives as negatives; a corpus with no
    negatives is returned unchanged.
    """
    unlabeled = [inst.id for inst in train if inst.labels is None]
    if unlabeled:
        raise ValidationError(
            f"cannot upsample unlabeled instances: {', '.join(sorted(unlabeled)[:5])}"
        )
    positives = [inst for inst in train if inst.labels.positive(attribute)]
    negatives = [inst for inst in train if not inst.labels.positive(attribute)]
    if not negatives or len(negatives) == len(positives):
        return train
    if len(negatives) > len(positives):
        raise ValidationError(
            f"more negatives ({len(negatives)}) than positives ({len(positives)}) "
            f"for {attribute.value}"
        )
    rng = derive_rng(seed, "upsample", attribute.value)
    draws = rng.integers(0, len(negatives), size=len(positives) - len(negatives))
    copies = [
        replace(negatives[int(d)], id=f"{negatives[int(d)].id}{UPSAMPLE_MARK}{j}")
        for j, d in enumerate(draws)
    ]
    return Corpus(train.instances + tuple(copies), source=train.source)


@dataclass(frozen=True)
class DistributionRow:
    label: str
    count: int
    negative_pct: Mapping[Attribute, float]
    all_positive_pct: float


@dataclass(frozen=True)
class DistributionTable:
    rows: tuple[DistributionRow, ...]
    overall: DistributionRow


def _distribution_row(label: str, instances: list[ReviewInstance]) -> DistributionRow:
    count = len(instances)
    negative = {
        attribute: 100.0
        * sum(1 for inst in instances if not inst.labels.positive(attribute))
        / count
        for attribute in Attribute
    }
    all_positive = 100.0 * sum(1 for inst in instances if inst.labels.all_positive) / count
    return DistributionRow(label, count, negative, all_positive)


def label_distribution(corpus: Corpus) -> DistributionTable:
    """Per-language and overall negative rates plus the all-positive rate."""
    if not corpus.instances:
        raise ValidationError("cannot summarize an empty corpus")
    unlabeled = [inst.id for inst in corpus if inst.labels is None]
    if unlabeled:
        raise ValidationError(
            f"unlabeled instances: {', '.join(sorted(unlabeled)[:5])}"
        )
    rows = []
    for language in corpus.languages():
        members = [inst for inst in corpus if inst.language is language]
        rows.append(_distribution_row(language.value, members))
    overall = _distribution_row("Overall", list(corpus.instances))
    return DistributionTable(tuple(rows), overall)
