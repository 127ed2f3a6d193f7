"""Ranking-match scores and leave-one-out importance."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings, strategies as st

from fpvg.errors import EvaluationError, ValidationError
from fpvg.importance import (
    loo_importance,
    ranking_match,
    ranking_match_by_fpvg,
)
from fpvg.ingest import ImportanceVector, PredictionRecord
from fpvg.relevance import RelevanceAssignment


def vector(scores, qid="q1", method="attention"):
    return ImportanceVector(qid, tuple(scores), method)


def test_top1_relevant_scores_100():
    a = RelevanceAssignment("q1", (0,), (1,), (2,), True)
    score = ranking_match(vector([0.9, 0.1, 0.2]), a)
    assert score.relevant_score == 100.0
    assert score.irrelevant_score == 0.0  # top-1 is object 0, not the irrelevant 1


def test_partial_relevant_match():
    # ranking by score: 5, 1, 2, 0, 3, 4; relevant {2,5}: top-2 = {5,1} -> 50%
    a = RelevanceAssignment("q1", (2, 5), (0, 1), (3, 4), True)
    score = ranking_match(vector([0.3, 0.8, 0.5, 0.2, 0.1, 0.9]), a)
    assert score.relevant_score == 50.0
    # irrelevant {0,1}: top-2 = {5,1} -> one hit -> 50%
    assert score.irrelevant_score == 50.0


def test_irrelevant_ranked_last_scores_zero():
    # ranking: 0, 3, 2, 1; irrelevant {1,2} occupy the bottom -> 0%
    a = RelevanceAssignment("q1", (0, 3), (1, 2), (), True)
    score = ranking_match(vector([0.9, 0.1, 0.2, 0.8]), a)
    assert score.irrelevant_score == 0.0
    assert score.relevant_score == 100.0


def test_six_object_hand_fixture():
    a = RelevanceAssignment("q1", (2, 5), (0, 1), (3, 4), True)
    # ranking: 2, 5, 1, 3, 4, 0
    perfect = ranking_match(vector([0.05, 0.3, 0.9, 0.2, 0.1, 0.8]), a)
    assert (perfect.relevant_score, perfect.irrelevant_score) == (100.0, 0.0)
    # ranking: 0, 1, 2, 3, 4, 5 - relevant at ranks 3 and 6
    inverted = ranking_match(vector([0.9, 0.8, 0.3, 0.2, 0.1, 0.05]), a)
    assert (inverted.relevant_score, inverted.irrelevant_score) == (0.0, 100.0)
    # ranking: 2, 1, 5, 3, 4, 0 - one relevant and one irrelevant in each top set
    mixed = ranking_match(vector([0.05, 0.8, 0.9, 0.2, 0.1, 0.3]), a)
    assert (mixed.relevant_score, mixed.irrelevant_score) == (50.0, 50.0)


def test_tie_break_is_index_order():
    a = RelevanceAssignment("q1", (1,), (0,), (2,), True)
    # all equal scores: top-1 by index is object 0
    score = ranking_match(vector([0.5, 0.5, 0.5]), a)
    assert score.relevant_score == 0.0
    assert score.irrelevant_score == 100.0


def test_length_mismatch_is_hard_error():
    a = RelevanceAssignment("q1", (0,), (1,), (), True)
    with pytest.raises(ValidationError, match="2 objects"):
        ranking_match(vector([0.9, 0.1, 0.2]), a)


def test_ineligible_assignment_refused():
    a = RelevanceAssignment("q1", (0,), (), (1,), False)
    with pytest.raises(EvaluationError, match="eligible"):
        ranking_match(vector([0.5, 0.5]), a)


# ---------------------------------------------------------------------------
# Properties
# ---------------------------------------------------------------------------


@st.composite
def assignment_and_scores(draw):
    n = draw(st.integers(2, 12))
    indices = list(range(n))
    n_rel = draw(st.integers(1, n - 1))
    n_irr = draw(st.integers(1, n - n_rel))
    rel = tuple(indices[:n_rel])
    irr = tuple(indices[n_rel : n_rel + n_irr])
    nei = tuple(indices[n_rel + n_irr :])
    scores = draw(
        st.lists(
            st.floats(-5, 5, allow_nan=False, allow_infinity=False), min_size=n, max_size=n
        )
    )
    return RelevanceAssignment("q1", rel, irr, nei, True), scores


@given(assignment_and_scores())
@settings(max_examples=150)
def test_scores_bounded(pair):
    assignment, scores = pair
    result = ranking_match(vector(scores), assignment)
    assert 0.0 <= result.relevant_score <= 100.0
    assert 0.0 <= result.irrelevant_score <= 100.0


@given(assignment_and_scores())
@settings(max_examples=150)
def test_relevant_on_top_scores_100(pair):
    assignment, scores = pair
    # push every relevant object strictly above everything else
    lo, hi = min(scores), max(scores)
    span = (hi - lo) or 1.0
    boosted = [
        (2.0 if i in assignment.relevant else 0.0) + (s - lo) / (span * 2.0)
        for i, s in enumerate(scores)
    ]
    result = ranking_match(vector(boosted), assignment)
    assert result.relevant_score == 100.0


@st.composite
def grid_assignment_and_scores(draw):
    # coarse score grid so strictly monotone maps stay injective in floats
    assignment, _ = draw(assignment_and_scores())
    n = assignment.n_objects
    scores = draw(
        st.lists(st.integers(-50, 50).map(lambda i: i / 10.0), min_size=n, max_size=n)
    )
    return assignment, scores


@given(grid_assignment_and_scores(), st.sampled_from(["affine", "cube", "exp"]))
@settings(max_examples=150)
def test_monotone_transform_invariance(pair, transform):
    assignment, scores = pair
    fn = {
        "affine": lambda x: 3.0 * x + 11.0,
        "cube": lambda x: x**3,
        "exp": math.exp,
    }[transform]
    base = ranking_match(vector(scores), assignment)
    mapped = ranking_match(vector([fn(s) for s in scores]), assignment)
    assert base.relevant_score == mapped.relevant_score
    assert base.irrelevant_score == mapped.irrelevant_score


# ---------------------------------------------------------------------------
# Grouping by grounding category
# ---------------------------------------------------------------------------


def score_of(qid, rel, irr, method="attention"):
    from fpvg.importance import RankingMatchScore

    return RankingMatchScore(qid, rel, irr, method)


def test_grouped_means():
    scores = [score_of("q1", 100.0, 0.0), score_of("q2", 0.0, 100.0)]
    grouped = ranking_match_by_fpvg(scores, {"q1": True, "q2": False})
    assert grouped.relevant_plus == 100.0
    assert grouped.relevant_minus == 0.0
    assert grouped.irrelevant_plus == 0.0
    assert grouped.irrelevant_minus == 100.0


def test_grouped_empty_group_absent():
    grouped = ranking_match_by_fpvg([score_of("q1", 100.0, 0.0)], {"q1": True})
    assert grouped.relevant_plus == 100.0
    assert grouped.n_minus == 0
    assert grouped.relevant_minus is None
    assert grouped.irrelevant_minus is None


def test_grouped_unknown_question_errors():
    with pytest.raises(EvaluationError, match="no evaluated outcome"):
        ranking_match_by_fpvg([score_of("ghost", 1.0, 1.0)], {"q1": True})


def test_grouped_mixed_methods_refused():
    scores = [score_of("q1", 1.0, 1.0, "attention"), score_of("q2", 1.0, 1.0, "gradcam")]
    with pytest.raises(EvaluationError, match="mixed importance methods"):
        ranking_match_by_fpvg(scores, {"q1": True, "q2": True})


# ---------------------------------------------------------------------------
# Leave-one-out importance
# ---------------------------------------------------------------------------


def record(answer, prob=None, dist=None, qid="q1"):
    return PredictionRecord(qid, answer, prob, dist)


def test_loo_importance_drops():
    base = record("red", 0.9)
    loo = [record("red", 0.9), record("blue", 0.7, {"blue": 0.7, "red": 0.2}), record("red", 0.9)]
    result = loo_importance(base, loo)
    assert result.method_label == "loo"
    assert result.scores[0] == 0.0
    assert result.scores[1] == pytest.approx(0.9 - 0.2)
    assert result.scores[2] == 0.0


def test_loo_importance_zero_vector():
    base = record("red", 0.9)
    result = loo_importance(base, [record("red", 0.9)] * 4)
    assert result.scores == (0.0, 0.0, 0.0, 0.0)


def test_loo_importance_negative_on_improvement():
    base = record("red", 0.6)
    result = loo_importance(base, [record("red", 0.8)])
    assert result.scores[0] == pytest.approx(-0.2)


def test_loo_importance_missing_prob_is_hard_error():
    base = record("red", 0.9)
    # flipped answer with top-1-only export: base-class probability unknowable
    with pytest.raises(EvaluationError, match="leave-one-out\\[0\\]"):
        loo_importance(base, [record("blue", 0.7)])


def test_loo_importance_base_without_prob():
    with pytest.raises(EvaluationError, match="base"):
        loo_importance(record("red"), [record("red", 0.9)])


def test_loo_importance_wrong_question():
    base = record("red", 0.9)
    with pytest.raises(EvaluationError, match="belongs to"):
        loo_importance(base, [record("red", 0.9, qid="other")])
