"""Object-importance ranking match against the relevance partition.

Importance vectors (attention, gradient saliency, feature deletion,
whatever the model side exports) are consumed as-is; the toolkit only
computes leave-one-out importance itself, from per-object omission
runs, since that needs nothing but the prediction files.

The ranking-match scores measure how many of the N relevant objects
(M irrelevant objects) appear among the N (M) highest-importance
objects. Ties are broken by score descending, then object index
ascending, which keeps the scores deterministic and invariant under
strictly monotone rescalings of the importance values.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import fmean
from typing import Iterable, Mapping, Sequence

from .errors import EvaluationError, ValidationError
from .ingest import ImportanceVector, PredictionRecord
from .relevance import RelevanceAssignment


@dataclass(frozen=True)
class RankingMatchScore:
    question_id: str
    relevant_score: float  # percentage in [0, 100]
    irrelevant_score: float  # percentage in [0, 100]
    method_label: str


def _top_k(scores: Sequence[float], k: int) -> set[int]:
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return set(order[:k])


def ranking_match(
    importance: ImportanceVector, assignment: RelevanceAssignment
) -> RankingMatchScore:
    """Overlap of the top-ranked objects with the relevant/irrelevant sets."""
    if not assignment.eligible:
        raise EvaluationError(
            f"question {assignment.question_id!r} is not eligible for ranking match"
        )
    n_objects = assignment.n_objects
    if len(importance.scores) != n_objects:
        raise ValidationError(
            f"importance vector for {importance.question_id!r} has "
            f"{len(importance.scores)} scores but the image has {n_objects} objects"
        )
    relevant = set(assignment.relevant)
    irrelevant = set(assignment.irrelevant)
    top_rel = _top_k(importance.scores, len(relevant))
    top_irr = _top_k(importance.scores, len(irrelevant))
    return RankingMatchScore(
        question_id=importance.question_id,
        relevant_score=100.0 * len(top_rel & relevant) / len(relevant),
        irrelevant_score=100.0 * len(top_irr & irrelevant) / len(irrelevant),
        method_label=importance.method_label,
    )


@dataclass(frozen=True)
class GroupedRankingMatch:
    """Mean ranking-match scores split by grounding category.

    Means are None when a group is empty (absent, not zero).
    """

    method_label: str
    n_plus: int
    n_minus: int
    relevant_plus: float | None
    relevant_minus: float | None
    irrelevant_plus: float | None
    irrelevant_minus: float | None

    def to_dict(self) -> dict:
        return {
            "method": self.method_label,
            "n_plus": self.n_plus,
            "n_minus": self.n_minus,
            "relevant": {"plus": self.relevant_plus, "minus": self.relevant_minus},
            "irrelevant": {"plus": self.irrelevant_plus, "minus": self.irrelevant_minus},
        }


def ranking_match_by_fpvg(
    scores: Iterable[RankingMatchScore],
    grounded_by_question: Mapping[str, bool],
) -> GroupedRankingMatch:
    """Mean relevant/irrelevant scores over grounded (+) and ungrounded (-) questions.

    ``grounded_by_question`` is the per-question grounding verdict from
    an evaluation over the same eligible question set.
    """
    plus: list[RankingMatchScore] = []
    minus: list[RankingMatchScore] = []
    method = None
    for score in scores:
        grounded = grounded_by_question.get(score.question_id)
        if grounded is None:
            raise EvaluationError(
                f"ranking-match score for {score.question_id!r} has no evaluated outcome"
            )
        if method is None:
            method = score.method_label
        elif method != score.method_label:
            raise EvaluationError(
                f"mixed importance methods in one grouping: {method!r} vs "
                f"{score.method_label!r}"
            )
        (plus if grounded else minus).append(score)
    return GroupedRankingMatch(
        method_label=method or "",
        n_plus=len(plus),
        n_minus=len(minus),
        relevant_plus=fmean(s.relevant_score for s in plus) if plus else None,
        relevant_minus=fmean(s.relevant_score for s in minus) if minus else None,
        irrelevant_plus=fmean(s.irrelevant_score for s in plus) if plus else None,
        irrelevant_minus=fmean(s.irrelevant_score for s in minus) if minus else None,
    )


def _base_class_prob(record: PredictionRecord, base_answer: str, role: str) -> float:
    prob = record.class_prob(base_answer)
    if prob is None:
        raise EvaluationError(
            f"{role} prediction for {record.question_id!r} does not expose the "
            f"probability of the base predicted class {base_answer!r}"
        )
    return prob


def loo_importance(
    base: PredictionRecord, loo_runs: Sequence[PredictionRecord]
) -> ImportanceVector:
    """Per-object importance from leave-one-out prediction records.

    ``loo_runs[k]`` must be the prediction with object k omitted; the
    importance of object k is the drop of the base predicted class's
    probability, so omitting an influential object scores high and an
    omission that *helps* the base class scores negative.
    """
    p_base = _base_class_prob(base, base.answer, "base")
    scores = []
    for k, rec in enumerate(loo_runs):
        if rec.question_id != base.question_id:
            raise EvaluationError(
                f"leave-one-out record {k} belongs to {rec.question_id!r}, "
                f"not {base.question_id!r}"
            )
        scores.append(p_base - _base_class_prob(rec, base.answer, f"leave-one-out[{k}]"))
    return ImportanceVector(base.question_id, tuple(scores), "loo")
