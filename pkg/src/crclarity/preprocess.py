"""Diff normalization, comment/diff fusion, and tokenization.

Every evaluator in the package consumes the same fused text: the raw
review comment, a single ``[SEP]`` marker, then the changed lines of the
diff hunk rewritten with ``[DELETE]`` / ``[ADD]`` markers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ValidationError

DELETE_TOKEN = "[DELETE]"
ADD_TOKEN = "[ADD]"
SEP_TOKEN = "[SEP]"

MARKER_TOKENS = (DELETE_TOKEN, ADD_TOKEN, SEP_TOKEN)

_TOLERANT_MARKER = re.compile(r"^\s*([-+])(.*)$")
_STRICT_MARKER = re.compile(r"^([-+])(.*)$")

_TOKEN = re.compile(r"\[(?:DELETE|ADD|SEP)\]|[A-Za-z0-9]+")
_CAMEL_SPLIT = re.compile(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")


def strip_context(diff_hunk: str, strict: bool = False) -> str:
    """Keep only changed lines of a diff hunk, in their original order.

    A changed line is one whose first non-blank character is ``-`` or ``+``.
    Context lines, hunk headers, and blank lines are dropped.  With
    ``strict=True`` the marker must sit at column zero.
    """
    marker = _STRICT_MARKER if strict else _TOLERANT_MARKER
    kept = [line for line in diff_hunk.splitlines() if marker.match(line)]
    return "\n".join(kept)


def normalize_markers(changed_lines: str, strict: bool = False) -> str:
    """Rewrite ``-``/``+`` markers as [DELETE]/[ADD] and join onto one line.

    Input is expected to be the output of :func:`strip_context`; a line
    without a leading marker raises :class:`ValidationError`.  The empty
    string maps to the empty string.
    """
    if changed_lines == "":
        return ""
    marker = _STRICT_MARKER if strict else _TOLERANT_MARKER
    pieces = []
    for number, line in enumerate(changed_lines.splitlines(), start=1):
        match = marker.match(line)
        if match is None:
            raise ValidationError(f"unmarked line {number}: {line!r}")
        token = DELETE_TOKEN if match.group(1) == "-" else ADD_TOKEN
        content = match.group(2).strip()
        pieces.append(f"{token} {content}" if content else token)
    return " ".join(pieces)


def _split_marked(normalized_diff: str) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Recover per-line contents from a normalized diff string."""
    deletes: list[str] = []
    adds: list[str] = []
    if not normalized_diff:
        return (), ()
    parts = re.split(r"(\[DELETE\]|\[ADD\])", normalized_diff)
    current: list[str] | None = None
    for part in parts:
        if part == DELETE_TOKEN:
            deletes.append("")
            current = deletes
        elif part == ADD_TOKEN:
            adds.append("")
            current = adds
        elif part.strip():
            if current is None:
                raise ValidationError(
                    f"normalized diff does not start with a marker: {normalized_diff!r}"
                )
            current[-1] = part.strip()
    return tuple(deletes), tuple(adds)


@dataclass(frozen=True)
class NormalizedInput:
    """Fused comment/diff text plus the recovered changed-line contents."""

    fused_text: str
    delete_lines: tuple[str, ...]
    add_lines: tuple[str, ...]

    @property
    def comment(self) -> str:
        return self.fused_text.split(f" {SEP_TOKEN} ", 1)[0]

    @property
    def normalized_diff(self) -> str:
        return self.fused_text.split(f" {SEP_TOKEN} ", 1)[1]


def fuse(comment: str, normalized_diff: str) -> NormalizedInput:
    """Join a comment and a normalized diff with a single [SEP] marker.

    The comment must be non-empty, and neither side may already contain
    the reserved ``[SEP]`` token (that would break the round trip back to
    the two parts).  A diff hunk with no changed lines yields an empty
    diff side, which is allowed.
    """
    if not comment.strip():
        raise ValidationError("comment must be non-empty")
    for name, text in (("comment", comment), ("normalized diff", normalized_diff)):
        if SEP_TOKEN in text:
            raise ValidationError(f"{name} contains reserved token {SEP_TOKEN}")
    deletes, adds = _split_marked(normalized_diff)
    return NormalizedInput(
        fused_text=f"{comment} {SEP_TOKEN} {normalized_diff}",
        delete_lines=deletes,
        add_lines=adds,
    )


def normalize_instance(comment: str, diff_hunk: str, strict: bool = False) -> NormalizedInput:
    """Full pipeline: strip context, normalize markers, fuse with the comment."""
    return fuse(comment, normalize_markers(strip_context(diff_hunk, strict), strict))


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens; identifiers are split on case and underscores.

    ``[DELETE]``, ``[ADD]`` and ``[SEP]`` survive as single tokens.  Runs of
    punctuation are dropped, so ``tokenize("")`` and ``tokenize("?!")`` are
    both empty.
    """
    out: list[str] = []
    for match in _TOKEN.finditer(text):
        token = match.group(0)
        if token.startswith("["):
            out.append(token)
            continue
        for part in _CAMEL_SPLIT.split(token):
            if part:
                out.append(part.lower())
    return out
