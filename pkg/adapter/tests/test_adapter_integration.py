"""End-to-end: the evaluation harness drives this worker as a backend.

Prints one PASS/FAIL line for the contract check, mirroring the primary
acceptance suite's style.
"""

import sys
from contextlib import contextmanager

from crclarity.backends import AdapterBackend
from crclarity.corpus import make_folds
from crclarity.criteria import Attribute
from crclarity.evaluation.crossval import EvalReport, evaluate_backends
from crclarity.synthetic import separable_corpus

WORKER = [sys.executable, "-m", "plm_adapter", "--backbone", "stub"]


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[acceptance] {name}: FAIL")
        raise
    print(f"[acceptance] {name}: PASS")


def test_adapter_contract(tmp_path):
    with criterion("adapter contract"):
        corpus = separable_corpus(20)
        with AdapterBackend(WORKER, model_root=tmp_path / "models") as backend:
            report = evaluate_backends([backend], corpus, k=5, seed=13)

        assert report.fold_plan_hash == make_folds(corpus, k=5, seed=13).plan_hash()
        assert list(report.backends()) == ["adapter"]
        assert {r.attribute for r in report.results} == set(Attribute)
        for result in report.results:
            assert not result.failed_folds
            assert len(result.folds) == 5
            assert result.mean.balanced_accuracy is not None
        relevance = next(
            r for r in report.for_backend("adapter")
            if r.attribute is Attribute.RELEVANCE
        )
        assert relevance.mean.balanced_accuracy >= 0.95

        # the report is complete enough to survive its own serialization
        assert EvalReport.from_json(report.to_json()) == report


def test_two_runs_identical_scores(tmp_path):
    corpus = separable_corpus(20)

    def run(tag):
        with AdapterBackend(WORKER, model_root=tmp_path / tag) as backend:
            return evaluate_backends([backend], corpus, k=5, seed=4).to_json()

    assert run("a") == run("b")


def test_adapter_absent_leaves_harness_usable(tmp_path):
    """The backend surfaces a worker that cannot start as a fold failure,
    not a crash of the whole evaluation."""
    corpus = separable_corpus(20)
    backend = AdapterBackend(["/nonexistent/plm-worker"])
    report = evaluate_backends([backend], corpus, k=5, seed=2)
    assert all(f.failed for r in report.results for f in r.folds)
