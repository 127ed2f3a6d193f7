"""Grounding metrics over three-condition prediction runs.

A question counts as faithfully & plausibly grounded when the model's
answer survives restriction to the relevant objects AND changes under
the irrelevant-only input:

    grounded(j) = Eq(a_all, a_rel) and not Eq(a_all, a_irrel)

The modified variant drops the second conjunct and is kept around
because it misclassifies visually blind models as grounded; reports
carry both. Each evaluated question lands in exactly one of four
sub-categories (grounded x correct), whose fractions are computed in
exact rational arithmetic so the partition identities hold bit-for-bit.

Probability-based companions (sufficiency / comprehensiveness) measure
the drop of the all-condition predicted class's probability under the
rel- / irrel-condition runs. Questions whose runs do not expose that
probability are excluded from those analyses and counted, never
approximated.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import EvaluationError
from .ingest import PredictionRun, QuestionRecord, answers_equal

DEFAULT_SUFF_GOOD = 0.01
DEFAULT_COMP_BAD = 0.20
DEFAULT_BIN_EDGES = (0.01, 0.20, 0.40)

RUN_KEYS = ("all", "rel", "irrel")

CATEGORY_LABELS = ("plus_correct", "plus_incorrect", "minus_correct", "minus_incorrect")


@dataclass(frozen=True)
class FpvgCategory:
    grounded: bool
    correct: bool

    @property
    def label(self) -> str:
        side = "plus" if self.grounded else "minus"
        return f"{side}_{'correct' if self.correct else 'incorrect'}"


@dataclass(frozen=True)
class QuestionOutcome:
    """Everything the per-question analyses need about one question."""

    question_id: str
    gold: str
    answer_all: str
    answer_rel: str
    answer_irrel: str
    grounded: bool
    grounded_mod: bool
    correct: bool
    correct_rel: bool
    correct_irrel: bool
    rel_flip: bool
    irrel_flip: bool
    suff: float | None
    comp: float | None

    @property
    def category(self) -> FpvgCategory:
        return FpvgCategory(self.grounded, self.correct)


# ---------------------------------------------------------------------------
# Per-question grounding decisions
# ---------------------------------------------------------------------------


def fpvg_question(a_all: str, a_rel: str, a_irrel: str, strict: bool = False) -> bool:
    """Binary grounding value from the three condition answers."""
    return answers_equal(a_all, a_rel, strict) and not answers_equal(a_all, a_irrel, strict)


def mod_fpvg_question(a_all: str, a_rel: str, strict: bool = False) -> bool:
    """Ablated variant that ignores the irrelevant-objects test."""
    return answers_equal(a_all, a_rel, strict)


def _record_for(run: PredictionRun, run_key: str, question_id: str):
    rec = run.records.get(question_id)
    if rec is None:
        raise EvaluationError(
            f"question {question_id!r} missing from run {run.run_label!r} ({run_key})"
        )
    return rec


def categorize(
    question_id: str,
    gold: str,
    runs: Mapping[str, PredictionRun],
    strict: bool = False,
) -> FpvgCategory:
    """Four-way category for one question; errors name the missing run."""
    answers = {key: _record_for(runs[key], key, question_id).answer for key in RUN_KEYS}
    return FpvgCategory(
        grounded=fpvg_question(answers["all"], answers["rel"], answers["irrel"], strict),
        correct=answers_equal(answers["all"], gold, strict),
    )


def sufficiency(p_all: float, p_rel: float) -> float:
    """Probability drop of the all-condition predicted class under rel-only input."""
    return p_all - p_rel


def comprehensiveness(p_all: float, p_irrel: float) -> float:
    """Probability drop of the all-condition predicted class under irrel-only input."""
    return p_all - p_irrel


def evaluate_question(
    question: QuestionRecord,
    runs: Mapping[str, PredictionRun],
    strict: bool = False,
) -> QuestionOutcome:
    qid = question.question_id
    rec_all = _record_for(runs["all"], "all", qid)
    rec_rel = _record_for(runs["rel"], "rel", qid)
    rec_irrel = _record_for(runs["irrel"], "irrel", qid)

    # suff/comp track the all-condition predicted class's probability in
    # the other runs; when a run cannot answer that question (top-1-only
    # export for a different class) the question is excluded, not guessed.
    p_all = rec_all.class_prob(rec_all.answer)
    p_rel = rec_rel.class_prob(rec_all.answer)
    p_irrel = rec_irrel.class_prob(rec_all.answer)
    suff = sufficiency(p_all, p_rel) if p_all is not None and p_rel is not None else None
    comp = comprehensiveness(p_all, p_irrel) if p_all is not None and p_irrel is not None else None

    rel_flip = not answers_equal(rec_all.answer, rec_rel.answer, strict)
    irrel_flip = not answers_equal(rec_all.answer, rec_irrel.answer, strict)
    return QuestionOutcome(
        question_id=qid,
        gold=question.gold_answer,
        answer_all=rec_all.answer,
        answer_rel=rec_rel.answer,
        answer_irrel=rec_irrel.answer,
        grounded=(not rel_flip) and irrel_flip,
        grounded_mod=not rel_flip,
        correct=answers_equal(rec_all.answer, question.gold_answer, strict),
        correct_rel=answers_equal(rec_rel.answer, question.gold_answer, strict),
        correct_irrel=answers_equal(rec_irrel.answer, question.gold_answer, strict),
        rel_flip=rel_flip,
        irrel_flip=irrel_flip,
        suff=suff,
        comp=comp,
    )


def evaluate_questions(
    questions: Iterable[QuestionRecord],
    runs: Mapping[str, PredictionRun],
    eligible_ids: set[str],
    strict: bool = False,
) -> list[QuestionOutcome]:
    """Outcomes for every eligible question, ordered by question_id."""
    picked = sorted(
        (q for q in questions if q.question_id in eligible_ids), key=lambda q: q.question_id
    )
    return [evaluate_question(q, runs, strict) for q in picked]


# ---------------------------------------------------------------------------
# Aggregation (exact rational arithmetic)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FpvgAggregates:
    n: int
    plus_correct: int
    plus_incorrect: int
    minus_correct: int
    minus_incorrect: int
    mod_plus_correct: int
    mod_plus_incorrect: int
    mod_minus_correct: int
    mod_minus_incorrect: int
    acc_all: int
    acc_rel: int
    acc_irrel: int

    def frac(self, count: int) -> Fraction:
        return Fraction(count, self.n)

    @property
    def fpvg_plus(self) -> Fraction:
        return self.frac(self.plus_correct + self.plus_incorrect)

    @property
    def fpvg_minus(self) -> Fraction:
        return self.frac(self.minus_correct + self.minus_incorrect)

    @property
    def mod_fpvg_plus(self) -> Fraction:
        return self.frac(self.mod_plus_correct + self.mod_plus_incorrect)

    @property
    def mod_fpvg_minus(self) -> Fraction:
        return self.frac(self.mod_minus_correct + self.mod_minus_incorrect)


def aggregate(outcomes: Sequence[QuestionOutcome]) -> FpvgAggregates:
    """Dataset-level counts; the four sub-category fractions sum to one."""
    if not outcomes:
        raise EvaluationError("cannot aggregate an empty evaluation (no eligible questions)")
    counts = {label: 0 for label in CATEGORY_LABELS}
    mod_counts = {label: 0 for label in CATEGORY_LABELS}
    acc_all = acc_rel = acc_irrel = 0
    for o in outcomes:
        counts[o.category.label] += 1
        mod_counts[FpvgCategory(o.grounded_mod, o.correct).label] += 1
        acc_all += o.correct
        acc_rel += o.correct_rel
        acc_irrel += o.correct_irrel
    return FpvgAggregates(
        n=len(outcomes),
        plus_correct=counts["plus_correct"],
        plus_incorrect=counts["plus_incorrect"],
        minus_correct=counts["minus_correct"],
        minus_incorrect=counts["minus_incorrect"],
        mod_plus_correct=mod_counts["plus_correct"],
        mod_plus_incorrect=mod_counts["plus_incorrect"],
        mod_minus_correct=mod_counts["minus_correct"],
        mod_minus_incorrect=mod_counts["minus_incorrect"],
        acc_all=acc_all,
        acc_rel=acc_rel,
        acc_irrel=acc_irrel,
    )


# ---------------------------------------------------------------------------
# Sufficiency / comprehensiveness analyses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadrantCounts:
    good_suff_good_comp: int
    good_suff_bad_comp: int
    bad_suff_good_comp: int
    bad_suff_bad_comp: int
    n_scored: int
    n_excluded: int
    suff_good: float
    comp_bad: float

    def to_dict(self) -> dict:
        return {
            "good_suff_good_comp": self.good_suff_good_comp,
            "good_suff_bad_comp": self.good_suff_bad_comp,
            "bad_suff_good_comp": self.bad_suff_good_comp,
            "bad_suff_bad_comp": self.bad_suff_bad_comp,
            "n_scored": self.n_scored,
            "n_excluded": self.n_excluded,
            "thresholds": {"suff_good": self.suff_good, "comp_bad": self.comp_bad},
        }


def suff_comp_quadrants(
    outcomes: Sequence[QuestionOutcome],
    suff_good: float = DEFAULT_SUFF_GOOD,
    comp_bad: float = DEFAULT_COMP_BAD,
) -> QuadrantCounts:
    """2x2 counts of (good/bad suff) x (good/bad comp).

    Good suff means the predicted class lost less than ``suff_good``
    probability under rel-only input; bad comp means it lost less than
    ``comp_bad`` under irrel-only input. Questions without both scores
    are excluded and counted.
    """
    cells = {(True, True): 0, (True, False): 0, (False, True): 0, (False, False): 0}
    excluded = 0
    for o in outcomes:
        if o.suff is None or o.comp is None:
            excluded += 1
            continue
        cells[(o.suff < suff_good, o.comp >= comp_bad)] += 1
    return QuadrantCounts(
        good_suff_good_comp=cells[(True, True)],
        good_suff_bad_comp=cells[(True, False)],
        bad_suff_good_comp=cells[(False, True)],
        bad_suff_bad_comp=cells[(False, False)],
        n_scored=sum(cells.values()),
        n_excluded=excluded,
        suff_good=suff_good,
        comp_bad=comp_bad,
    )


@dataclass(frozen=True)
class FlipRateRow:
    category: str
    pairing: str  # which answer pair flips are counted over: rel or irrel
    flips: int
    total: int

    @property
    def pct(self) -> float | None:
        if self.total == 0:
            return None
        return 100.0 * self.flips / self.total

    def to_dict(self) -> dict:
        return {
            "category": self.category,
            "pairing": self.pairing,
            "flips": self.flips,
            "total": self.total,
            "pct": self.pct,
        }


def _bin_label(prefix: str, lo: float | None, hi: float | None) -> str:
    if lo is None:
        return f"{prefix}<{hi}"
    if hi is None:
        return f"{prefix}>={lo}"
    return f"{lo}<={prefix}<{hi}"


def _binned_rows(
    outcomes: Sequence[QuestionOutcome],
    value_name: str,
    pairing: str,
    edges: Sequence[float],
) -> list[FlipRateRow]:
    bounds = [None] + list(edges) + [None]
    rows = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        flips = total = 0
        for o in outcomes:
            value = o.suff if value_name == "suff" else o.comp
            if value is None:
                continue
            if lo is not None and value < lo:
                continue
            if hi is not None and value >= hi:
                continue
            total += 1
            flips += o.rel_flip if pairing == "rel" else o.irrel_flip
        rows.append(FlipRateRow(_bin_label(value_name, lo, hi), pairing, flips, total))
    return rows


def flip_rate_by_category(
    outcomes: Sequence[QuestionOutcome],
    categorizer: str,
    bin_edges: Sequence[float] = DEFAULT_BIN_EDGES,
) -> list[FlipRateRow]:
    """Answer-flip percentage per category.

    Categorizers:
      * "suff-bins": bin by suff score, count all<->rel answer changes.
      * "comp-bins": bin by comp score, count all<->irrel answer changes.
      * "fpvg-terms": group by the grounding test's own two terms
        (rel answer retained / irrel answer changed). These rates are
        extreme by construction, exactly 0% or 100%, because the
        grouping is defined over the very answer changes being counted.
    """
    if categorizer == "suff-bins":
        return _binned_rows(outcomes, "suff", "rel", _checked_edges(bin_edges))
    if categorizer == "comp-bins":
        return _binned_rows(outcomes, "comp", "irrel", _checked_edges(bin_edges))
    if categorizer == "fpvg-terms":
        groups = [
            ("rel_answer_retained", "rel", [o for o in outcomes if not o.rel_flip]),
            ("rel_answer_changed", "rel", [o for o in outcomes if o.rel_flip]),
            ("irrel_answer_changed", "irrel", [o for o in outcomes if o.irrel_flip]),
            ("irrel_answer_retained", "irrel", [o for o in outcomes if not o.irrel_flip]),
        ]
        return [
            FlipRateRow(
                name,
                pairing,
                sum(o.rel_flip if pairing == "rel" else o.irrel_flip for o in members),
                len(members),
            )
            for name, pairing, members in groups
        ]
    raise ValueError(f"unknown categorizer: {categorizer!r}")


def _checked_edges(edges: Sequence[float]) -> list[float]:
    out = list(edges)
    if not out or any(b <= a for a, b in zip(out, out[1:])):
        raise ValueError(f"bin edges must be strictly increasing and non-empty: {edges}")
    return out
