"""Small synthetic corpora for demos and tests.

``separable_corpus`` builds a deterministic corpus whose positive and
negative comments differ by fixed marker tokens ("refactor", "because" vs
"hmm", "unsure"), so a single vocabulary feature separates the classes
perfectly.  Labels are identical across all three attributes.  The default
40 instances split 24 positive / 16 negative, which keeps every
cross-validation training split at least as positive as negative.
"""

from __future__ import annotations

from .corpus import Corpus, Language, ReviewInstance
from .criteria import Attribute, ClarityVerdict

_LANGS = tuple(Language)


def _verdict(positive: bool) -> ClarityVerdict:
    return ClarityVerdict({a: positive for a in Attribute})


def separable_corpus(n: int = 40, positive_fraction: float = 0.6) -> Corpus:
    """A linearly separable labeled corpus of ``n`` instances."""
    n_positive = round(n * positive_fraction)
    instances = []
    for i in range(n):
        positive = i < n_positive
        name = f"helper_{i}"
        if positive:
            comment = (
                f"Please refactor {name} because the control flow is hard to follow."
            )
        else:
            comment = f"Hmm, unsure about {name} at a glance."
        diff = f"-{name} = legacy(x)\n+{name} = rewrite(x)"
        instances.append(
            ReviewInstance(
                id=f"syn-{i:03d}",
                language=_LANGS[i % len(_LANGS)],
                diff_hunk=diff,
                comment=comment,
                labels=_verdict(positive),
            )
        )
    return Corpus(tuple(instances), source=f"synthetic:separable:{n}")


def skewed_corpus(n: int = 40, negative_every: int = 10) -> Corpus:
    """A mostly-positive corpus: every ``negative_every``-th instance is
    negative on all attributes.  Useful for exercising upsampling."""
    base = separable_corpus(n, positive_fraction=1.0)
    instances = []
    for i, inst in enumerate(base.instances):
        positive = i % negative_every != negative_every - 1
        if not positive:
            inst = ReviewInstance(
                id=inst.id,
                language=inst.language,
                diff_hunk=inst.diff_hunk,
                comment=f"Hmm, unsure about helper_{i} at a glance.",
                labels=_verdict(False),
            )
        else:
            inst = ReviewInstance(
                id=inst.id,
                language=inst.language,
                diff_hunk=inst.diff_hunk,
                comment=inst.comment,
                labels=_verdict(True),
            )
        instances.append(inst)
    return Corpus(tuple(instances), source=f"synthetic:skewed:{n}")
