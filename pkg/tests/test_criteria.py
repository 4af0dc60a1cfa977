import itertools
import json

import pytest
from hypothesis import given, strategies as st

from crclarity.criteria import (
    CATALOG,
    CRITERION_IDS,
    Attribute,
    CheckerConfig,
    ClarityVerdict,
    Kind,
    aggregate,
    catalog_for,
    catalog_to_json,
    check,
    evaluate_input,
    get_criterion,
)
from crclarity.errors import ValidationError
from crclarity.preprocess import normalize_instance

DIFF = (
    "-def computeTotal(items):\n"
    "-    return 0\n"
    "+def compute_total(items):\n"
    "+    return sum(i.price for i in items)\n"
)


def ninput(comment, diff=DIFF):
    return normalize_instance(comment, diff)


class TestCatalog:
    def test_eleven_criteria(self):
        assert len(CATALOG) == 11
        assert len(set(CRITERION_IDS)) == 11

    def test_split_per_attribute(self):
        assert len(catalog_for(Attribute.RELEVANCE, Kind.ESSENTIAL)) == 1
        assert len(catalog_for(Attribute.RELEVANCE, Kind.OPTIONAL)) == 2
        assert len(catalog_for(Attribute.INFORMATIVENESS, Kind.ESSENTIAL)) == 2
        assert len(catalog_for(Attribute.INFORMATIVENESS, Kind.OPTIONAL)) == 2
        assert len(catalog_for(Attribute.EXPRESSION, Kind.ESSENTIAL)) == 2
        assert len(catalog_for(Attribute.EXPRESSION, Kind.OPTIONAL)) == 2

    def test_ids_follow_attribute_prefixes(self):
        for criterion in CATALOG:
            prefix = criterion.id.split(".")[0]
            assert prefix == criterion.attribute.value[0]

    def test_json_export(self):
        payload = json.loads(catalog_to_json())
        assert [entry["id"] for entry in payload] == list(CRITERION_IDS)
        for entry in payload:
            assert entry["kind"] in ("Essential", "Optional")
            assert entry["description"]

    def test_unknown_criterion(self):
        with pytest.raises(ValidationError, match="unknown criterion"):
            get_criterion("X.Q9")


def brute_force_attribute(verdicts, attribute):
    essential = [verdicts[c.id] for c in CATALOG
                 if c.attribute is attribute and c.kind is Kind.ESSENTIAL]
    optional = [verdicts[c.id] for c in CATALOG
                if c.attribute is attribute and c.kind is Kind.OPTIONAL]
    return all(essential) and any(optional)


class TestAggregate:
    def test_examples(self):
        base = {cid: True for cid in CRITERION_IDS}
        assert aggregate(base) == {a: True for a in Attribute}

        one_optional_down = dict(base, **{"R.O2": False})
        assert aggregate(one_optional_down)[Attribute.RELEVANCE] is True

        essential_down = dict(base, **{"I.E2": False})
        assert aggregate(essential_down)[Attribute.INFORMATIVENESS] is False

        no_optionals = dict(base, **{"E.O1": False, "E.O2": False})
        assert aggregate(no_optionals)[Attribute.EXPRESSION] is False

    def test_missing_verdict_rejected(self):
        partial = {cid: True for cid in CRITERION_IDS[:-1]}
        with pytest.raises(ValidationError, match="missing criterion"):
            aggregate(partial)

    def test_exhaustive_truth_table(self):
        for bits in itertools.product([False, True], repeat=11):
            verdicts = dict(zip(CRITERION_IDS, bits))
            result = aggregate(verdicts)
            for attribute in Attribute:
                assert result[attribute] == brute_force_attribute(verdicts, attribute)

    @given(st.lists(st.booleans(), min_size=11, max_size=11), st.integers(0, 10))
    def test_monotone(self, bits, flip):
        verdicts = dict(zip(CRITERION_IDS, bits))
        raised = dict(verdicts)
        raised[CRITERION_IDS[flip]] = True
        before = aggregate(verdicts)
        after = aggregate(raised)
        for attribute in Attribute:
            assert after[attribute] >= before[attribute]

    def test_attributes_independent(self):
        base = {cid: True for cid in CRITERION_IDS}
        for cid in ("R.E1", "R.O1", "R.O2"):
            flipped = dict(base, **{cid: False})
            result = aggregate(flipped)
            assert result[Attribute.INFORMATIVENESS] is True
            assert result[Attribute.EXPRESSION] is True


class TestClarityVerdict:
    def test_from_criteria(self):
        verdicts = {cid: True for cid in CRITERION_IDS}
        v = ClarityVerdict.from_criteria(verdicts)
        assert v.all_positive

    def test_consistency_enforced_when_complete(self):
        verdicts = {cid: True for cid in CRITERION_IDS}
        with pytest.raises(ValidationError, match="disagree"):
            ClarityVerdict({a: False for a in Attribute}, verdicts)

    def test_partial_criteria_tolerated(self):
        v = ClarityVerdict({a: True for a in Attribute}, {"R.E1": False})
        assert v.positive(Attribute.RELEVANCE)

    def test_unknown_criterion_rejected(self):
        with pytest.raises(ValidationError, match="unknown criterion"):
            ClarityVerdict({a: True for a in Attribute}, {"Z.Z9": True})

    def test_missing_attribute_rejected(self):
        with pytest.raises(ValidationError, match="missing attribute"):
            ClarityVerdict({Attribute.RELEVANCE: True})


class TestRelevanceCheckers:
    def test_token_overlap_passes(self):
        assert check("R.E1", ninput("Why does compute_total skip tax?"))

    def test_vague_cross_reference_fails(self):
        assert not check("R.E1", ninput("Same here. and also all others."))

    def test_quoted_code_span_passes(self):
        assert check("R.E1", ninput("Is `sum(i.price for i in items)` safe on None?"))

    def test_location_by_line_number(self):
        assert check("R.O1", ninput("Line 12 loses the rounding."))

    def test_location_by_quoted_identifier(self):
        assert check("R.O1", ninput("`compute_total` drops the tax handling."))

    def test_positional_word_alone_insufficient(self):
        assert not check("R.O1", ninput("This line looks odd."))

    def test_positional_word_with_identifier(self):
        assert check("R.O1", ninput("The compute_total change here looks odd."))

    def test_understanding_defaults_true(self):
        assert check("R.O2", ninput("Anything at all."))

    def test_understanding_forced_false(self):
        cfg = CheckerConfig(assume_code_understood=False)
        assert not check("R.O2", ninput("Anything at all."), cfg)


class TestInformativenessCheckers:
    def test_question_signals_intention(self):
        assert check("I.E1", ninput("Why was this changed?"))

    def test_imperative_opening(self):
        assert check("I.E1", ninput("Rename this to compute_total."))

    def test_suggestion_phrase(self):
        assert check("I.E1", ninput("Maybe we should cache the result."))

    def test_bare_statement_fails(self):
        assert not check("I.E1", ninput("This change is not correct."))

    def test_reason_marker_gives_context(self):
        assert check("I.E2", ninput("Revert this because it breaks rounding."))

    def test_long_multi_clause_counts_as_context(self):
        comment = ("The new helper recalculates price totals on every call, "
                   "which was the hot path in the profile we captured last week.")
        assert check("I.E2", ninput(comment))

    def test_short_unexplained_fails(self):
        assert not check("I.E2", ninput("This change is not correct."))

    def test_next_step_with_instead(self):
        assert check("I.O1", ninput("Use sum() instead of the loop."))

    def test_next_step_suggestion_with_code(self):
        assert check("I.O1", ninput("Consider `functools.cache` for this."))

    def test_suggestion_without_code_fails(self):
        assert not check("I.O1", ninput("Please make it faster somehow."))

    def test_reference_url(self):
        assert check("I.O2", ninput("See https://example.com/guide for details."))

    def test_reference_issue_number(self):
        assert check("I.O2", ninput("Duplicate of #142, same root cause."))

    def test_reference_doc_phrase(self):
        assert check("I.O2", ninput("The style guide forbids this pattern."))

    def test_no_reference(self):
        assert not check("I.O2", ninput("Looks fine otherwise."))


class TestExpressionCheckers:
    def test_concise_comment_passes(self):
        assert check("E.E1", ninput("Short and clear."))

    def test_over_long_comment_fails(self):
        assert not check("E.E1", ninput("word " * 61))

    def test_filler_run_fails(self):
        assert not check("E.E1", ninput("Well um basically this is fine."))

    def test_repeated_token_run_fails(self):
        assert not check("E.E1", ninput("No no no, this breaks."))

    def test_cap_configurable(self):
        cfg = CheckerConfig(concise_token_cap=3)
        assert not check("E.E1", ninput("One two three four."), cfg)

    def test_polite_comment_passes(self):
        assert check("E.E2", ninput("Could you split this function?"))

    def test_impolite_term_fails(self):
        assert not check("E.E2", ninput("wtf is i1, s2, errCode"))

    def test_accusation_fails(self):
        assert not check("E.E2", ninput("You always break the build."))

    def test_plain_text_is_readable(self):
        assert check("E.O1", ninput("Plain sentence about compute_total."))

    def test_unprintable_garbage_fails(self):
        assert not check("E.O1", ninput("bad" + "\x00\x01\x02\x03" * 20))

    def test_unfenced_code_fails(self):
        assert not check("E.O1", ninput("total = compute_total(items);"))

    def test_fenced_code_is_fine(self):
        comment = "Try this:\n```\ntotal = compute_total(items);\n```"
        assert check("E.O1", ninput(comment))

    def test_clean_sentence_passes_grammar(self):
        assert check("E.O2", ninput("Rename compute_total because the old name was removed."))

    def test_lowercase_start_fails(self):
        assert not check("E.O2", ninput("rename it because the old name was removed."))

    def test_code_token_start_is_fine(self):
        assert check("E.O2", ninput("compute_total should round before adding."))

    def test_repeated_character_typo_fails(self):
        assert not check("E.O2", ninput("Pleaseeee fix this."))

    def test_unknown_word_fails_spell_check(self):
        assert not check("E.O2", ninput("Rename this to avoid shnorgle."))

    def test_diff_identifiers_are_not_typos(self):
        assert check("E.O2", ninput("Why was computeTotal replaced?"))

    def test_spell_check_can_be_disabled(self):
        cfg = CheckerConfig(spell_check=False)
        assert check("E.O2", ninput("Rename this to avoid shnorgle."), cfg)


class TestLexiconOverride:
    def test_override_directory_wins(self, tmp_path):
        (tmp_path / "impolite_terms.txt").write_text("blargh\n", encoding="utf-8")
        cfg = CheckerConfig(lexicon_dir=str(tmp_path))
        assert not check("E.E2", ninput("This is blargh."), cfg)
        # bundled default no longer applies
        assert check("E.E2", ninput("wtf is this"), cfg)

    def test_missing_file_falls_back_to_bundled(self, tmp_path):
        cfg = CheckerConfig(lexicon_dir=str(tmp_path))
        assert not check("E.E2", ninput("wtf is this"), cfg)


class TestEvaluateInput:
    def test_returns_complete_verdict(self):
        verdict = evaluate_input(ninput("Why does compute_total skip tax?"))
        assert set(verdict.criterion_verdicts) == set(CRITERION_IDS)
        derived = aggregate(verdict.criterion_verdicts)
        assert dict(verdict.attribute_verdicts) == derived

    def test_deterministic(self):
        a = evaluate_input(ninput("Rename compute_total, the old name is gone."))
        b = evaluate_input(ninput("Rename compute_total, the old name is gone."))
        assert a == b
