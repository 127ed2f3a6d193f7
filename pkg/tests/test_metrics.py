"""Grounding logic, categorization, exact aggregation, suff/comp analyses."""

from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_question, make_run, peaked
from fpvg.errors import EvaluationError
from fpvg.metrics import (
    FpvgCategory,
    aggregate,
    categorize,
    comprehensiveness,
    evaluate_question,
    evaluate_questions,
    flip_rate_by_category,
    fpvg_question,
    mod_fpvg_question,
    suff_comp_quadrants,
    sufficiency,
)


# ---------------------------------------------------------------------------
# The binary grounding decision
# ---------------------------------------------------------------------------


def test_grounding_logic_table():
    # the five equality patterns of (a_all, a_rel, a_irrel)
    assert fpvg_question("red", "red", "blue") is True  # (x, x, y)
    assert fpvg_question("red", "red", "red") is False  # (x, x, x) blind model
    assert fpvg_question("red", "blue", "red") is False  # (x, y, x)
    assert fpvg_question("red", "blue", "blue") is False  # (x, y, y)
    assert fpvg_question("red", "blue", "green") is False  # (x, y, z)


def test_grounding_uses_normalized_equality():
    assert fpvg_question(" Red", "red ", "BLUE") is True
    assert fpvg_question(" Red", "red ", "BLUE", strict=True) is False


def test_mod_grounding():
    assert mod_fpvg_question("red", "red") is True
    assert mod_fpvg_question("red", "blue") is False
    # a model blind to the image keeps its answer everywhere: the full
    # test rejects it, the ablated one blesses it
    assert fpvg_question("red", "red", "red") is False
    assert mod_fpvg_question("red", "red") is True


@given(st.text(min_size=1, max_size=8), st.text(min_size=1, max_size=8), st.text(max_size=8))
def test_grounding_properties(x, y, z):
    if x.strip().lower() != y.strip().lower():
        assert fpvg_question(x, y, z or "pad") is False
    if x.strip().lower() != (z or "pad").strip().lower():
        assert fpvg_question(x, x, z or "pad") is True


# ---------------------------------------------------------------------------
# Categorization
# ---------------------------------------------------------------------------


def runs_for(a_all, a_rel, a_irrel, qid="q1"):
    return {
        "all": make_run("all", {qid: a_all}),
        "rel": make_run("rel", {qid: a_rel}),
        "irrel": make_run("irrel", {qid: a_irrel}),
    }


def test_categorize_cases():
    # grounded & correct
    assert categorize("q1", "red", runs_for("red", "red", "blue")) == FpvgCategory(True, True)
    # grounded & incorrect
    assert categorize("q1", "red", runs_for("blue", "blue", "red")) == FpvgCategory(True, False)
    # ungrounded & correct
    assert categorize("q1", "red", runs_for("red", "blue", "red")) == FpvgCategory(False, True)
    # ungrounded & incorrect
    assert categorize("q1", "red", runs_for("blue", "red", "blue")) == FpvgCategory(False, False)


def test_categorize_missing_run_names_label():
    runs = runs_for("red", "red", "blue")
    del runs["irrel"].records["q1"]
    with pytest.raises(EvaluationError, match="run-irrel"):
        categorize("q1", "red", runs)


def test_category_labels():
    assert FpvgCategory(True, True).label == "plus_correct"
    assert FpvgCategory(True, False).label == "plus_incorrect"
    assert FpvgCategory(False, True).label == "minus_correct"
    assert FpvgCategory(False, False).label == "minus_incorrect"


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


def outcomes_from(table):
    """table: list of (qid, gold, a_all, a_rel, a_irrel) tuples."""
    questions = [make_question(qid, gold) for qid, gold, *_ in table]
    runs = {
        "all": make_run("all", {qid: a for qid, _, a, _, _ in table}),
        "rel": make_run("rel", {qid: a for qid, _, _, a, _ in table}),
        "irrel": make_run("irrel", {qid: a for qid, _, _, _, a in table}),
    }
    return evaluate_questions(questions, runs, {qid for qid, *_ in table})


def test_aggregate_one_question_per_category():
    outcomes = outcomes_from(
        [
            ("q1", "red", "red", "red", "blue"),  # plus correct
            ("q2", "red", "blue", "blue", "red"),  # plus incorrect
            ("q3", "red", "red", "blue", "red"),  # minus correct
            ("q4", "red", "blue", "red", "blue"),  # minus incorrect
        ]
    )
    agg = aggregate(outcomes)
    assert (agg.plus_correct, agg.plus_incorrect, agg.minus_correct, agg.minus_incorrect) == (
        1,
        1,
        1,
        1,
    )
    assert agg.fpvg_plus == Fraction(1, 2)
    assert agg.fpvg_plus + agg.fpvg_minus == 1
    assert (
        agg.frac(agg.plus_correct)
        + agg.frac(agg.plus_incorrect)
        + agg.frac(agg.minus_correct)
        + agg.frac(agg.minus_incorrect)
        == 1
    )


def test_aggregate_all_grounded_correct():
    outcomes = outcomes_from([(f"q{i}", "red", "red", "red", "blue") for i in range(5)])
    agg = aggregate(outcomes)
    assert agg.frac(agg.plus_correct) == 1
    assert agg.plus_incorrect == agg.minus_correct == agg.minus_incorrect == 0


def test_aggregate_two_thirds():
    outcomes = outcomes_from(
        [
            ("q1", "red", "red", "red", "blue"),
            ("q2", "red", "red", "red", "blue"),
            ("q3", "red", "blue", "green", "blue"),
        ]
    )
    agg = aggregate(outcomes)
    assert agg.fpvg_plus == Fraction(2, 3)
    assert Fraction(agg.acc_all, agg.n) == Fraction(2, 3)
    # correctness partition: correct questions split across grounded sides
    assert agg.plus_correct + agg.minus_correct == agg.acc_all


def test_aggregate_empty_errors():
    with pytest.raises(EvaluationError, match="empty"):
        aggregate([])


def test_mod_aggregates_dominate():
    outcomes = outcomes_from(
        [
            ("q1", "red", "red", "red", "red"),  # blind signature: mod+ but fpvg-
            ("q2", "red", "red", "red", "blue"),
            ("q3", "red", "red", "blue", "blue"),
        ]
    )
    agg = aggregate(outcomes)
    assert agg.mod_fpvg_plus >= agg.fpvg_plus
    assert agg.mod_fpvg_plus == Fraction(2, 3)
    assert agg.fpvg_plus == Fraction(1, 3)


@given(
    st.lists(
        st.tuples(
            st.sampled_from(["red", "blue", "green"]),
            st.sampled_from(["red", "blue", "green"]),
            st.sampled_from(["red", "blue", "green"]),
            st.sampled_from(["red", "blue", "green"]),
        ),
        min_size=1,
        max_size=30,
    )
)
@settings(max_examples=100)
def test_partition_and_renaming_invariance(rows):
    table = [(f"q{i:03d}", gold, a, b, c) for i, (gold, a, b, c) in enumerate(rows)]
    agg = aggregate(outcomes_from(table))
    total = agg.plus_correct + agg.plus_incorrect + agg.minus_correct + agg.minus_incorrect
    assert total == agg.n
    assert agg.fpvg_plus + agg.fpvg_minus == 1
    assert agg.mod_fpvg_plus >= agg.fpvg_plus

    # renaming the answer vocabulary with a bijection changes nothing
    rename = {"red": "apple", "blue": "sky", "green": "grass"}
    renamed = [
        (qid, rename[gold], rename[a], rename[b], rename[c]) for qid, gold, a, b, c in table
    ]
    agg2 = aggregate(outcomes_from(renamed))
    assert (agg.plus_correct, agg.plus_incorrect, agg.minus_correct, agg.minus_incorrect) == (
        agg2.plus_correct,
        agg2.plus_incorrect,
        agg2.minus_correct,
        agg2.minus_incorrect,
    )


# ---------------------------------------------------------------------------
# Sufficiency / comprehensiveness
# ---------------------------------------------------------------------------


def test_suff_comp_pointwise():
    assert sufficiency(0.9, 0.9) == 0.0
    assert sufficiency(0.9, 0.85) == pytest.approx(0.05)
    assert sufficiency(0.6, 0.9) == pytest.approx(-0.3)
    assert comprehensiveness(0.9, 0.9) == 0.0
    assert comprehensiveness(0.9, 0.3) == pytest.approx(0.6)
    assert comprehensiveness(0.5, 0.7) == pytest.approx(-0.2)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0.01, 1))
def test_suff_comp_linear_in_probability_scale(p_all, p_other, alpha):
    assert sufficiency(alpha * p_all, alpha * p_other) == pytest.approx(
        alpha * sufficiency(p_all, p_other), abs=1e-12
    )
    assert comprehensiveness(alpha * p_all, alpha * p_other) == pytest.approx(
        alpha * comprehensiveness(p_all, p_other), abs=1e-12
    )


def test_suff_comp_probability_lookup_follows_base_class():
    vocab = ["red", "blue"]
    question = make_question("q1", "red")
    runs = {
        "all": make_run("all", {"q1": peaked("red", vocab)}),
        # rel run predicts red with lower confidence: suff = 0.9 - 0.6
        "rel": make_run("rel", {"q1": ("red", 0.6, {"red": 0.6, "blue": 0.4})}),
        # irrel run flips to blue; probability of *red* there is 0.2
        "irrel": make_run("irrel", {"q1": ("blue", 0.8, {"blue": 0.8, "red": 0.2})}),
    }
    outcome = evaluate_question(question, runs)
    assert outcome.suff == pytest.approx(0.3)
    assert outcome.comp == pytest.approx(0.7)


def test_suff_comp_top1_only_exclusion():
    question = make_question("q1", "red")
    runs = {
        "all": make_run("all", {"q1": ("red", 0.9)}),
        "rel": make_run("rel", {"q1": ("red", 0.88)}),  # same class: usable
        "irrel": make_run("irrel", {"q1": ("blue", 0.7)}),  # different class, top-1 only
    }
    outcome = evaluate_question(question, runs)
    assert outcome.suff == pytest.approx(0.02)
    assert outcome.comp is None  # excluded, not approximated


def test_quadrants():
    vocab = ["a", "b"]

    def outcome(suff, comp, qid):
        # build records giving exactly these drops
        p_all = 0.9
        runs = {
            "all": make_run("all", {qid: ("a", p_all, {"a": p_all, "b": 1 - p_all})}),
            "rel": make_run(
                "rel", {qid: ("a", p_all - suff, {"a": p_all - suff, "b": 1 - p_all + suff})}
            ),
            "irrel": make_run(
                "irrel", {qid: ("a", p_all - comp, {"a": p_all - comp, "b": 1 - p_all + comp})}
            ),
        }
        return evaluate_question(make_question(qid, "a"), runs)

    o1 = outcome(0.005, 0.10, "q1")  # good suff, bad comp
    o2 = outcome(0.005, 0.60, "q2")  # good suff, good comp
    o3 = outcome(0.30, 0.60, "q3")  # bad suff, good comp
    q = suff_comp_quadrants([o1, o2, o3])
    assert q.good_suff_bad_comp == 1
    assert q.good_suff_good_comp == 1
    assert q.bad_suff_good_comp == 1
    assert q.bad_suff_bad_comp == 0
    assert q.n_scored == 3

    empty = suff_comp_quadrants([])
    assert empty.n_scored == 0
    assert empty.good_suff_good_comp == 0


# ---------------------------------------------------------------------------
# Flip rates
# ---------------------------------------------------------------------------


def test_flip_rates_fpvg_terms_are_extreme():
    outcomes = outcomes_from(
        [
            ("q1", "red", "red", "red", "blue"),
            ("q2", "red", "blue", "blue", "red"),
            ("q3", "red", "red", "red", "green"),
        ]
    )
    rows = {r.category: r for r in flip_rate_by_category(outcomes, "fpvg-terms")}
    assert rows["rel_answer_retained"].pct == 0.0
    assert rows["rel_answer_retained"].total == 3
    assert rows["irrel_answer_changed"].pct == 100.0
    assert rows["irrel_answer_changed"].total == 3
    assert rows["rel_answer_changed"].total == 0
    assert rows["rel_answer_changed"].pct is None


def test_flip_rates_half():
    outcomes = outcomes_from(
        [
            ("q1", "red", "red", "red", "blue"),  # no rel flip
            ("q2", "red", "red", "blue", "blue"),  # rel flip
        ]
    )
    rows = {r.category: r for r in flip_rate_by_category(outcomes, "fpvg-terms")}
    assert rows["rel_answer_retained"].total == 1
    assert rows["rel_answer_changed"].total == 1
    # and a suff-bin view: both have suff=None (no probs) so bins are empty
    binned = flip_rate_by_category(outcomes, "suff-bins")
    assert all(r.total == 0 for r in binned)


def test_flip_rates_suff_bins():
    # Two questions whose predicted class loses under 1% probability in
    # the rel run, yet one of them still flips its answer: the class
    # probability alone cannot see the flip, the answer-based view can.
    base = ("a", 0.4, {"a": 0.4, "b": 0.3, "c": 0.3})
    questions = [make_question("q1", "a"), make_question("q2", "a")]
    runs = {
        "all": make_run("all", {"q1": base, "q2": base}),
        "rel": make_run(
            "rel",
            {
                # suff = 0.4 - 0.396 = 0.004, answer retained
                "q1": ("a", 0.396, {"a": 0.396, "b": 0.304, "c": 0.3}),
                # suff = 0.4 - 0.396 = 0.004, answer flips to b regardless
                "q2": ("b", 0.5, {"b": 0.5, "a": 0.396, "c": 0.104}),
            },
        ),
        "irrel": make_run("irrel", {"q1": base, "q2": base}),
    }
    outcomes = evaluate_questions(questions, runs, {"q1", "q2"})
    best_bin = flip_rate_by_category(outcomes, "suff-bins")[0]
    assert best_bin.category == "suff<0.01"
    assert best_bin.total == 2
    assert best_bin.flips == 1
    assert best_bin.pct == 50.0


def test_flip_rate_unknown_categorizer():
    with pytest.raises(ValueError, match="categorizer"):
        flip_rate_by_category([], "nope")
