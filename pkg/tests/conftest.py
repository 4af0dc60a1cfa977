import pytest

from crclarity.corpus import Corpus, Language, ReviewInstance
from crclarity.criteria import Attribute, ClarityVerdict

SAMPLE_DIFF = (
    "@@ -10,4 +10,4 @@ def total(items):\n"
    " context line\n"
    "-def computeTotal(items):\n"
    "-    return 0\n"
    "+def compute_total(items):\n"
    "+    return sum(i.price for i in items)\n"
    " trailing context\n"
)


def verdict(relevance=True, informativeness=True, expression=True, criteria=None):
    return ClarityVerdict(
        {
            Attribute.RELEVANCE: relevance,
            Attribute.INFORMATIVENESS: informativeness,
            Attribute.EXPRESSION: expression,
        },
        criteria,
    )


def instance(i, lang=Language.PYTHON, comment="Looks wrong, fix the return value?",
             diff=SAMPLE_DIFF, labels=None):
    return ReviewInstance(
        id=f"inst-{i:04d}",
        language=lang,
        diff_hunk=diff,
        comment=comment,
        labels=labels,
    )


@pytest.fixture
def sample_diff():
    return SAMPLE_DIFF


@pytest.fixture
def tiny_corpus():
    return Corpus(
        tuple(
            instance(i, labels=verdict(relevance=(i != 2)))
            for i in range(4)
        )
    )
