"""Clarity criteria catalog, attribute aggregation, and heuristic checkers.

A review comment is judged on three attributes: Relevance (can it be
understood from the code change alone), Informativeness (does it carry an
actionable intention with supporting context), and Expression (is it
concise, polite, and well formed).  Each attribute owns a handful of
criteria, split into essential and optional ones.  An attribute is
positive exactly when every essential criterion holds and at least one
optional criterion holds; the three attributes are judged independently.

The checkers in this module are deterministic lexical baselines for the
eleven criteria.  They are intentionally simple: token overlap, lexicon
lookups, and a few regular expressions.  Every threshold and lexicon is
configurable through :class:`CheckerConfig`, so they can be tuned or
swapped without touching the trainable or LLM-backed evaluators.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, fields
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping

from .errors import ValidationError
from .preprocess import MARKER_TOKENS, NormalizedInput, tokenize


class Attribute(str, Enum):
    RELEVANCE = "Relevance"
    INFORMATIVENESS = "Informativeness"
    EXPRESSION = "Expression"

    @classmethod
    def parse(cls, value: "str | Attribute") -> "Attribute":
        if isinstance(value, Attribute):
            return value
        for member in cls:
            if member.value.lower() == value.strip().lower():
                return member
        raise ValidationError(f"unknown attribute: {value!r}")


class Kind(str, Enum):
    ESSENTIAL = "Essential"
    OPTIONAL = "Optional"


@dataclass(frozen=True)
class Criterion:
    id: str
    attribute: Attribute
    kind: Kind
    description: str


CATALOG: tuple[Criterion, ...] = (
    Criterion(
        "R.E1",
        Attribute.RELEVANCE,
        Kind.ESSENTIAL,
        "The comment is self-explanatory and relevant to the code change: it "
        "can be interpreted from the current change alone, without relying on "
        "external information such as other review comments.",
    ),
    Criterion(
        "R.O1",
        Attribute.RELEVANCE,
        Kind.OPTIONAL,
        "The comment specifies the particular position in the code that has "
        "the issue or concern.",
    ),
    Criterion(
        "R.O2",
        Attribute.RELEVANCE,
        Kind.OPTIONAL,
        "The comment explicitly shows that the reviewer correctly understands "
        "the code change.",
    ),
    Criterion(
        "I.E1",
        Attribute.INFORMATIVENESS,
        Kind.ESSENTIAL,
        "The comment clearly specifies its intention, so the author knows "
        "what further action is needed: raising a question that asks for an "
        "answer, identifying a problem that should be fixed, or offering a "
        "suggestion that may be non-blocking.",
    ),
    Criterion(
        "I.E2",
        Attribute.INFORMATIVENESS,
        Kind.ESSENTIAL,
        "The comment provides context matching its intention: what the "
        "question is really about, what the identified problem is, or the "
        "reason behind the suggestion.",
    ),
    Criterion(
        "I.O1",
        Attribute.INFORMATIVENESS,
        Kind.OPTIONAL,
        "The comment offers a concrete suggestion for the next step when one "
        "is available.",
    ),
    Criterion(
        "I.O2",
        Attribute.INFORMATIVENESS,
        Kind.OPTIONAL,
        "The comment provides reference information helpful to the author, "
        "such as links to documents, guidelines, or related code.",
    ),
    Criterion(
        "E.E1",
        Attribute.EXPRESSION,
        Kind.ESSENTIAL,
        "The comment states its idea as precisely and concisely as possible, "
        "avoiding vagueness, ambiguity, and incoherence.",
    ),
    Criterion(
        "E.E2",
        Attribute.EXPRESSION,
        Kind.ESSENTIAL,
        "The comment is polite and objective, focusing on the code rather "
        "than the person who wrote it.",
    ),
    Criterion(
        "E.O1",
        Attribute.EXPRESSION,
        Kind.OPTIONAL,
        "The comment is written in a human-readable format.",
    ),
    Criterion(
        "E.O2",
        Attribute.EXPRESSION,
        Kind.OPTIONAL,
        "The comment uses correct syntax and grammar, without typos or "
        "incomplete words.",
    ),
)

CRITERION_IDS: tuple[str, ...] = tuple(c.id for c in CATALOG)
_BY_ID: dict[str, Criterion] = {c.id: c for c in CATALOG}


def get_criterion(criterion_id: str) -> Criterion:
    try:
        return _BY_ID[criterion_id]
    except KeyError:
        raise ValidationError(f"unknown criterion id: {criterion_id!r}") from None


def catalog_for(attribute: Attribute, kind: Kind | None = None) -> tuple[Criterion, ...]:
    return tuple(
        c
        for c in CATALOG
        if c.attribute is attribute and (kind is None or c.kind is kind)
    )


def catalog_to_json() -> str:
    """The full catalog as a JSON document (ids, attributes, kinds, text)."""
    payload = [
        {
            "id": c.id,
            "attribute": c.attribute.value,
            "kind": c.kind.value,
            "description": c.description,
        }
        for c in CATALOG
    ]
    return json.dumps(payload, indent=2)


def aggregate(criterion_verdicts: Mapping[str, bool]) -> dict[Attribute, bool]:
    """Fold eleven criterion verdicts into three attribute verdicts.

    An attribute is positive iff all its essential criteria are true and at
    least one of its optional criteria is true.  All eleven verdicts must be
    present.
    """
    missing = [cid for cid in CRITERION_IDS if cid not in criterion_verdicts]
    if missing:
        raise ValidationError(f"missing criterion verdicts: {', '.join(missing)}")
    result: dict[Attribute, bool] = {}
    for attribute in Attribute:
        essential = all(
            criterion_verdicts[c.id] for c in catalog_for(attribute, Kind.ESSENTIAL)
        )
        optional = any(
            criterion_verdicts[c.id] for c in catalog_for(attribute, Kind.OPTIONAL)
        )
        result[attribute] = essential and optional
    return result


@dataclass(frozen=True)
class ClarityVerdict:
    """Attribute-level verdicts, optionally backed by per-criterion ones.

    When a complete set of criterion verdicts is supplied, it must agree
    with the attribute verdicts under :func:`aggregate`.  A partial set is
    tolerated (annotated corpora do not always record every criterion) and
    left unchecked.
    """

    attribute_verdicts: Mapping[Attribute, bool]
    criterion_verdicts: Mapping[str, bool] | None = None

    def __post_init__(self) -> None:
        missing = [a for a in Attribute if a not in self.attribute_verdicts]
        if missing:
            names = ", ".join(a.value for a in missing)
            raise ValidationError(f"missing attribute verdicts: {names}")
        if self.criterion_verdicts is not None:
            unknown = [k for k in self.criterion_verdicts if k not in _BY_ID]
            if unknown:
                raise ValidationError(f"unknown criterion ids: {', '.join(unknown)}")
            if all(cid in self.criterion_verdicts for cid in CRITERION_IDS):
                derived = aggregate(self.criterion_verdicts)
                if derived != dict(self.attribute_verdicts):
                    raise ValidationError(
                        "attribute verdicts disagree with aggregated criteria"
                    )

    @classmethod
    def from_criteria(cls, criterion_verdicts: Mapping[str, bool]) -> "ClarityVerdict":
        return cls(aggregate(criterion_verdicts), dict(criterion_verdicts))

    def positive(self, attribute: Attribute) -> bool:
        return bool(self.attribute_verdicts[attribute])

    @property
    def all_positive(self) -> bool:
        return all(self.attribute_verdicts[a] for a in Attribute)


@dataclass(frozen=True)
class CheckerConfig:
    """Tunables for the heuristic checkers.

    ``lexicon_dir`` overrides the bundled lexicon files; any file missing
    from the directory falls back to the bundled one.
    """

    assume_code_understood: bool = True
    context_length_threshold: int = 12
    context_clause_minimum: int = 2
    concise_token_cap: int = 60
    filler_run_length: int = 3
    printable_ratio_min: float = 0.95
    repeated_char_run: int = 4
    spell_check: bool = True
    spell_min_length: int = 4
    lexicon_dir: str | None = None

    def lexicon(self, name: str) -> frozenset[str]:
        return _load_lexicon(name, self.lexicon_dir)


@lru_cache(maxsize=None)
def _load_lexicon(name: str, override_dir: str | None) -> frozenset[str]:
    if override_dir is not None:
        candidate = Path(override_dir) / f"{name}.txt"
        if candidate.is_file():
            text = candidate.read_text(encoding="utf-8")
            return _parse_lexicon(text, candidate)
    ref = resources.files(__package__) / "lexicons" / f"{name}.txt"
    return _parse_lexicon(ref.read_text(encoding="utf-8"), ref)


def _parse_lexicon(text: str, source: object) -> frozenset[str]:
    entries = set()
    for line in text.splitlines():
        entry = line.strip().lower()
        if entry and not entry.startswith("#"):
            entries.add(entry)
    if not entries:
        raise ValidationError(f"empty lexicon: {source}")
    return frozenset(entries)


_URL = re.compile(r"https?://\S+|\bwww\.\S+", re.IGNORECASE)
_LINE_REF = re.compile(r"\blines?\s+\d+|\bL\d+\b", re.IGNORECASE)
_ISSUE_REF = re.compile(r"(?:^|\s)#\d+\b|\b[A-Z][A-Z0-9]+-\d+\b|\bissue\s+\d+", re.IGNORECASE)
_BACKTICK_SPAN = re.compile(r"`([^`]+)`")
_QUOTED_SPAN = re.compile(r"\"([^\"]+)\"|'([^']+)'")
_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_CODEISH = re.compile(r"[_.(){}\[\]=:<>/]|  |\w+\(")
_ACCUSATION = re.compile(r"\byou\s+(?:always|never)\b|\bdid you even\b", re.IGNORECASE)
_POSITIONAL = re.compile(
    r"\bhere\b|\bthis (?:line|block|function|method|file)\b|\babove\b|\bbelow\b",
    re.IGNORECASE,
)
_WORD = re.compile(r"[A-Za-z][A-Za-z']*")


def _content_tokens(tokens: list[str], stopwords: frozenset[str]) -> set[str]:
    return {
        t
        for t in tokens
        if t not in MARKER_TOKENS and t not in stopwords and len(t) > 1
    }


def _quoted_spans(comment: str) -> list[str]:
    spans = [m.group(1) for m in _BACKTICK_SPAN.finditer(comment)]
    for m in _QUOTED_SPAN.finditer(comment):
        span = m.group(1) or m.group(2)
        if span and _CODEISH.search(span):
            spans.append(span)
    return spans


def _without_code_spans(comment: str) -> str:
    text = re.sub(r"```.*?```", " ", comment, flags=re.DOTALL)
    text = _BACKTICK_SPAN.sub(" ", text)
    return _URL.sub(" ", text)


def _diff_identifiers(ninput: NormalizedInput) -> set[str]:
    names: set[str] = set()
    for line in ninput.delete_lines + ninput.add_lines:
        names.update(_IDENTIFIER.findall(line))
    return names


def _mentions_diff_identifier(comment: str, ninput: NormalizedInput) -> bool:
    identifiers = {n for n in _diff_identifiers(ninput) if len(n) >= 3}
    words = set(re.findall(r"[A-Za-z_][A-Za-z0-9_]*", comment))
    return bool(identifiers & words)


def _check_relevant_to_change(comment: str, ninput: NormalizedInput, cfg: CheckerConfig) -> bool:
    stop = cfg.lexicon("stopwords")
    overlap = _content_tokens(tokenize(comment), stop) & _content_tokens(
        tokenize(ninput.normalized_diff), stop
    )
    if overlap:
        return True
    diff_text = ninput.normalized_diff
    return any(span.strip() and span.strip() in diff_text for span in _quoted_spans(comment))


def _check_location_given(comment: str, ninput: NormalizedInput, cfg: CheckerConfig) -> bool:
    if _LINE_REF.search(comment):
        return True
    identifiers = _diff_identifiers(ninput)
    for span in _quoted_spans(comment):
        if any(name in span for name in identifiers if len(name) >= 3):
            return True
    return bool(_POSITIONAL.search(comment)) and _mentions_diff_identifier(comment, ninput)


def _check_change_understood(comment: str, ninput: NormalizedInput, cfg: CheckerConfig) -> bool:
    return cfg.assume_code_understood


def _split_sentences(comment: str) -> list[str]:
    parts = re.split(r"[.!?;\n]+", comment)
    return [p.strip() for p in parts if p.strip()]


def _has_imperative_opening(comment: str, cfg: CheckerConfig) -> bool:
    verbs = cfg.lexicon("imperative_verbs")
    skippable = {"please", "kindly", "also", "maybe", "perhaps", "nit", "just"}
    for sentence in _split_sentences(comment):
        words = tokenize(sentence)
        while words and words[0] in skippable:
            words = words[1:]
        if words and words[0] in verbs:
            return True
    return False


def _phrase_in(comment_lower: str, phrases: frozenset[str]) -> bool:
    return any(
        re.search(rf"(?<![A-Za-z]){re.escape(p)}(?![A-Za-z])", comment_lower)
        for p in phrases
    )


def _check_intention_clear(comment: str, ninput: NormalizedInput, cfg: CheckerConfig) -> bool:
    if "?" in comment:
        return True
    if _has_imperative_opening(comment, cfg):
        return True
    return _phrase_in(comment.lower(), cfg.lexicon("suggestion_phrases"))


def _clause_count(comment: str) -> int:
    return 1 + len(re.findall(r"(?<=\w)\s*[,;:.!?]\s*(?=\w)", comment))


def _check_context_given(comment: str, ninput: NormalizedInput, cfg: CheckerConfig) -> bool:
    if _phrase_in(comment.lower(), cfg.lexicon("causal_markers")):
        return True
    tokens = [t for t in tokenize(comment) if t not in MARKER_TOKENS]
    return (
        len(tokens) >= cfg.context_length_threshold
        and _clause_count(comment) >= cfg.context_clause_minimum
    )


def _contains_code_token(comment: str) -> bool:
    if _BACKTICK_SPAN.search(comment):
        return True
    for word in re.findall(r"\S+", comment):
        bare = word.strip(".,;:!?\"'()")
        if not bare or _URL.match(bare):
            continue
        if "_" in bare and _IDENTIFIER.fullmatch(bare):
            return True
        if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*\(\)?", bare) and "(" in bare:
            return True
        if re.fullmatch(r"[a-z0-9]+[A-Z][A-Za-z0-9]*", bare):
            return True
        if re.fullmatch(r"[A-Za-z_][\w.]*\.\w+(\(\))?", bare):
            return True
    return False


def _check_next_step_given(comment: str, ninput: NormalizedInput, cfg: CheckerConfig) -> bool:
    lower = comment.lower()
    if re.search(r"\binstead\b", lower):
        return True
    return _phrase_in(lower, cfg.lexicon("suggestion_phrases")) and _contains_code_token(comment)


def _check_reference_given(comment: str, ninput: NormalizedInput, cfg: CheckerConfig) -> bool:
    if _URL.search(comment) or _ISSUE_REF.search(comment):
        return True
    return _phrase_in(comment.lower(), cfg.lexicon("doc_reference_phrases"))


def _check_concise(comment: str, ninput: NormalizedInput, cfg: CheckerConfig) -> bool:
    tokens = tokenize(comment)
    if len(tokens) > cfg.concise_token_cap:
        return False
    fillers = cfg.lexicon("filler_words")
    run = 0
    for token in tokens:
        run = run + 1 if token in fillers else 0
        if run >= cfg.filler_run_length:
            return False
    for i in range(len(tokens) - cfg.filler_run_length + 1):
        window = tokens[i : i + cfg.filler_run_length]
        if len(set(window)) == 1:
            return False
    return True


def _check_polite(comment: str, ninput: NormalizedInput, cfg: CheckerConfig) -> bool:
    if _ACCUSATION.search(comment):
        return False
    lower = comment.lower()
    terms = cfg.lexicon("impolite_terms")
    tokens = set(tokenize(comment))
    for term in terms:
        if " " in term or "-" in term:
            if _phrase_in(lower, frozenset([term])):
                return False
        elif term in tokens:
            return False
    return True


def _check_readable(comment: str, ninput: NormalizedInput, cfg: CheckerConfig) -> bool:
    if not comment:
        return False
    printable = sum(1 for ch in comment if ch.isprintable() or ch in "\n\t\r")
    if printable / len(comment) < cfg.printable_ratio_min:
        return False
    in_fence = False
    for line in comment.splitlines():
        stripped = line.strip()
        if stripped.startswith("```"):
            in_fence = not in_fence
            continue
        if in_fence or "`" in stripped:
            continue
        if re.search(r"[;{}]$", stripped) and _CODEISH.search(stripped):
            return False
    return True


def _strip_suffixes(word: str) -> set[str]:
    forms = {word}
    if word.endswith("'s"):
        word = word[:-2]
        forms.add(word)
    for suffix in ("ing", "edly", "ed", "es", "s", "ly", "d", "er", "est"):
        if word.endswith(suffix) and len(word) - len(suffix) >= 3:
            stem = word[: -len(suffix)]
            forms.add(stem)
            forms.add(stem + "e")
            if len(stem) >= 2 and stem[-1] == stem[-2]:
                forms.add(stem[:-1])
            if stem.endswith("i"):
                forms.add(stem[:-1] + "y")
    return forms


def _check_well_formed(comment: str, ninput: NormalizedInput, cfg: CheckerConfig) -> bool:
    stripped = comment.lstrip(" \t>*-")
    if not stripped:
        return False
    first = stripped[0]
    opens_well = first.isupper() or first.isdigit() or first in "`["
    if not opens_well and not _contains_code_token(stripped.split()[0]):
        return False

    prose = _without_code_spans(comment)
    diff_names = {n.lower() for n in _diff_identifiers(ninput)}
    diff_tokens = set(tokenize(ninput.normalized_diff))
    run = rf"([A-Za-z])\1{{{cfg.repeated_char_run - 1},}}"
    for match in re.finditer(rf"\w*{run}\w*", prose):
        if match.group(0).lower() not in diff_names:
            return False

    if not cfg.spell_check:
        return True
    vocabulary = cfg.lexicon("common_words")
    for word in _WORD.findall(prose):
        if len(word) < cfg.spell_min_length:
            continue
        if word != word.lower() and word != word.capitalize():
            continue  # mixed case reads as an identifier
        lower = word.lower()
        if lower in diff_names or lower in diff_tokens:
            continue
        if _strip_suffixes(lower) & vocabulary:
            continue
        return False
    return True


_CHECKS = {
    "R.E1": _check_relevant_to_change,
    "R.O1": _check_location_given,
    "R.O2": _check_change_understood,
    "I.E1": _check_intention_clear,
    "I.E2": _check_context_given,
    "I.O1": _check_next_step_given,
    "I.O2": _check_reference_given,
    "E.E1": _check_concise,
    "E.E2": _check_polite,
    "E.O1": _check_readable,
    "E.O2": _check_well_formed,
}


def check(
    criterion: Criterion | str,
    ninput: NormalizedInput,
    config: CheckerConfig | None = None,
) -> bool:
    """Run one heuristic checker against a fused comment/diff input."""
    criterion_id = criterion.id if isinstance(criterion, Criterion) else criterion
    if criterion_id not in _CHECKS:
        raise ValidationError(f"unknown criterion id: {criterion_id!r}")
    cfg = config or CheckerConfig()
    return bool(_CHECKS[criterion_id](ninput.comment, ninput, cfg))


def evaluate_input(
    ninput: NormalizedInput, config: CheckerConfig | None = None
) -> ClarityVerdict:
    """Run all eleven checkers and aggregate into attribute verdicts."""
    cfg = config or CheckerConfig()
    verdicts = {cid: check(cid, ninput, cfg) for cid in CRITERION_IDS}
    return ClarityVerdict.from_criteria(verdicts)


def config_to_dict(cfg: CheckerConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}


def config_from_dict(data: Mapping[str, object]) -> CheckerConfig:
    known = {f.name for f in fields(CheckerConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"unknown checker options: {', '.join(sorted(unknown))}")
    return CheckerConfig(**dict(data))  # type: ignore[arg-type]
