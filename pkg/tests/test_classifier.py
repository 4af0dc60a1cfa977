import random

import numpy as np
import pytest

from crclarity.classifier import (
    ENGINEERED_FEATURES,
    ForestModel,
    Hyperparameters,
    Vocabulary,
    fit_vocabulary,
    train,
)
from crclarity.corpus import Corpus
from crclarity.criteria import Attribute
from crclarity.errors import ValidationError
from crclarity.preprocess import normalize_instance
from crclarity.synthetic import separable_corpus
from tests.conftest import instance, verdict


def ninputs(*pairs):
    return [normalize_instance(comment, diff) for comment, diff in pairs]


class TestVocabulary:
    def test_min_frequency_cutoff(self):
        inputs = ninputs(
            ("please fix the loop", "+a"),
            ("fix the test", "+b"),
            ("unrelated words entirely", "+c"),
        )
        vocab = fit_vocabulary(inputs, min_frequency=2, use_checker_features=False)
        assert "ngram:fix" in vocab.feature_names
        assert "ngram:the" in vocab.feature_names
        assert "ngram:please" not in vocab.feature_names

    def test_all_unique_tokens_leave_only_markers(self):
        # marker tokens appear in every fused text, so only they survive
        inputs = ninputs(("alpha beta", "+a"), ("gamma delta", "+b"))
        vocab = fit_vocabulary(inputs, min_frequency=2, use_checker_features=False)
        surviving = [n for n in vocab.feature_names if n.startswith("ngram:")]
        assert surviving == ["ngram:[ADD]", "ngram:[SEP]", "ngram:[SEP] [ADD]"]
        assert all(n in vocab.feature_names for n in ENGINEERED_FEATURES)

    def test_bigrams_included(self):
        inputs = ninputs(("fix the loop", "+a"), ("fix the test", "+b"))
        vocab = fit_vocabulary(inputs, min_frequency=2, use_checker_features=False)
        assert "ngram:fix the" in vocab.feature_names

    def test_checker_features_toggle(self):
        inputs = ninputs(("fix the loop", "+a"))
        with_checks = fit_vocabulary(inputs, use_checker_features=True)
        without = fit_vocabulary(inputs, use_checker_features=False)
        assert any(name.startswith("check:") for name in with_checks.feature_names)
        assert not any(name.startswith("check:") for name in without.feature_names)
        assert len(with_checks) == len(without) + 11

    def test_engineered_values(self):
        vocab = Vocabulary(ngrams=(), min_frequency=2, use_checker_features=False)
        fused = normalize_instance(
            "Why does compute_total use sum? See https://example.com",
            "+def compute_total(items):\n+    return sum(items)",
        )
        values = vocab.vectorize(fused)
        named = dict(zip(vocab.feature_names, values))
        assert named["flag:question_mark"] == 1.0
        assert named["flag:url"] == 1.0
        assert named["length:comment_tokens"] == len(
            ["why", "does", "compute", "total", "use", "sum", "see", "https", "example", "com"]
        )
        # compute, total, sum overlap with the diff side
        assert named["count:code_overlap"] == 3.0

    def test_vector_width_matches_names(self):
        corpus = separable_corpus(10)
        inputs = [normalize_instance(i.comment, i.diff_hunk) for i in corpus]
        vocab = fit_vocabulary(inputs)
        assert vocab.vectorize(inputs[0]).shape == (len(vocab),)


class TestTraining:
    def test_perfect_fit_on_separable_data(self):
        corpus = separable_corpus(40)
        model = train(corpus, Attribute.RELEVANCE, seed=3)
        hits = sum(
            model.predict(inst.comment, inst.diff_hunk)[0]
            == inst.labels.positive(Attribute.RELEVANCE)
            for inst in corpus
        )
        assert hits == len(corpus)

    def test_scores_are_probabilities(self):
        corpus = separable_corpus(20)
        model = train(corpus, Attribute.RELEVANCE, seed=3, hyperparameters=Hyperparameters(n_trees=10))
        for inst in corpus:
            label, score = model.predict(inst.comment, inst.diff_hunk)
            assert 0.0 <= score <= 1.0
            assert label == (score >= 0.5)

    def test_deterministic_under_seed(self):
        corpus = separable_corpus(24)
        hp = Hyperparameters(n_trees=15)
        a = train(corpus, Attribute.EXPRESSION, hyperparameters=hp, seed=11)
        b = train(corpus, Attribute.EXPRESSION, hyperparameters=hp, seed=11)
        assert a.trees == b.trees

    def test_seed_changes_forest(self):
        corpus = separable_corpus(24)
        hp = Hyperparameters(n_trees=15)
        a = train(corpus, Attribute.EXPRESSION, hyperparameters=hp, seed=11)
        b = train(corpus, Attribute.EXPRESSION, hyperparameters=hp, seed=12)
        assert a.trees != b.trees

    def test_instance_order_irrelevant(self):
        corpus = separable_corpus(24)
        shuffled = list(corpus.instances)
        random.Random(5).shuffle(shuffled)
        hp = Hyperparameters(n_trees=10)
        a = train(corpus, Attribute.RELEVANCE, hyperparameters=hp, seed=2)
        b = train(Corpus(tuple(shuffled)), Attribute.RELEVANCE, hyperparameters=hp, seed=2)
        assert a.trees == b.trees

    def test_degenerate_labels_rejected(self):
        corpus = separable_corpus(10, positive_fraction=1.0)
        with pytest.raises(ValidationError, match="degenerate"):
            train(corpus, Attribute.RELEVANCE)

    def test_unlabeled_rejected(self):
        corpus = Corpus((instance(0), instance(1, labels=verdict())))
        with pytest.raises(ValidationError, match="unlabeled"):
            train(corpus, Attribute.RELEVANCE)

    def test_empty_rejected(self):
        with pytest.raises(ValidationError, match="empty"):
            train(Corpus(()), Attribute.RELEVANCE)

    def test_hyperparameter_validation(self):
        with pytest.raises(ValidationError):
            Hyperparameters(n_trees=0)
        with pytest.raises(ValidationError):
            Hyperparameters(min_leaf=0)
        with pytest.raises(ValidationError):
            Hyperparameters(feature_fraction=1.5)

    def test_max_depth_limits_trees(self):
        corpus = separable_corpus(30)
        hp = Hyperparameters(n_trees=5, max_depth=1)
        model = train(corpus, Attribute.RELEVANCE, hyperparameters=hp, seed=1)

        def depth(node):
            if "leaf" in node:
                return 0
            return 1 + max(depth(node["left"]), depth(node["right"]))

        assert all(depth(tree) <= 1 for tree in model.trees)


class TestModelIO:
    def test_save_load_identical_predictions(self, tmp_path):
        corpus = separable_corpus(24)
        hp = Hyperparameters(n_trees=10)
        model = train(corpus, Attribute.INFORMATIVENESS, hyperparameters=hp, seed=4)
        path = tmp_path / "model.json"
        model.save(path)
        loaded = ForestModel.load(path)
        assert loaded.attribute is Attribute.INFORMATIVENESS
        assert loaded.hyperparameters == hp
        for inst in corpus:
            assert loaded.predict(inst.comment, inst.diff_hunk) == model.predict(
                inst.comment, inst.diff_hunk
            )

    def test_wrong_format_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text('{"format": "something-else"}', encoding="utf-8")
        with pytest.raises(ValidationError, match="unsupported model format"):
            ForestModel.load(path)

    def test_corrupt_file_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text("not json", encoding="utf-8")
        with pytest.raises(ValidationError, match="cannot read model"):
            ForestModel.load(path)


class TestSeparability:
    def test_single_feature_separates_classes(self):
        """The documented synthetic set really is linearly separable."""
        corpus = separable_corpus(40)
        inputs = [normalize_instance(i.comment, i.diff_hunk) for i in corpus]
        labels = np.array(
            [i.labels.positive(Attribute.RELEVANCE) for i in corpus], dtype=bool
        )
        vocab = fit_vocabulary(inputs, use_checker_features=False)
        X = np.vstack([vocab.vectorize(n) for n in inputs])
        separating = []
        for j, name in enumerate(vocab.feature_names):
            lo = X[labels, j].min()
            hi = X[~labels, j].max()
            if lo > hi or X[labels, j].max() < X[~labels, j].min():
                separating.append(name)
        assert "ngram:refactor" in separating
