"""Correct-to-incorrect ratios and cross-split degradation tables.

The c2i ratio of a question subset is its number of correctly answered
questions divided by its number of incorrectly answered ones (full-
input answers vs gold); a ratio above 1 means correct answers dominate.
Comparing the ratios of grounded vs ungrounded subsets across test
splits (e.g. an in-distribution and an out-of-distribution split)
exposes how much more a model relies on good grounding in one split
than the other.

Degradation between two ratios is their relative drop,
1 - after/before. The formula is stamped into every table's metadata
so downstream consumers never have to guess it. When a split is backed
by several report files (repeated training runs), each cell reports
the median ratio and the maximum absolute deviation from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import median
from typing import Mapping, Sequence

from .errors import EvaluationError
from .metrics import FpvgAggregates

DEGRADATION_FORMULA = "1 - c2i_after / c2i_before"

SUBSETS = ("all", "plus", "minus")


@dataclass(frozen=True)
class C2iRatio:
    subset_label: str
    correct: int
    incorrect: int

    @property
    def ratio(self) -> float | None:
        """correct/incorrect; +inf when nothing is incorrect; None when empty."""
        if self.incorrect > 0:
            return self.correct / self.incorrect
        if self.correct > 0:
            return math.inf
        return None

    def to_dict(self) -> dict:
        return {
            "subset": self.subset_label,
            "correct": self.correct,
            "incorrect": self.incorrect,
            "ratio": self.ratio,
        }


def c2i(aggregates: FpvgAggregates, subset: str, label_prefix: str = "") -> C2iRatio:
    """c2i ratio over one grounding subset: "all", "plus" or "minus"."""
    if subset == "all":
        correct = aggregates.acc_all
        incorrect = aggregates.n - aggregates.acc_all
    elif subset == "plus":
        correct = aggregates.plus_correct
        incorrect = aggregates.plus_incorrect
    elif subset == "minus":
        correct = aggregates.minus_correct
        incorrect = aggregates.minus_incorrect
    else:
        raise ValueError(f"unknown subset {subset!r}; expected one of {SUBSETS}")
    label = f"{label_prefix}/{subset}" if label_prefix else subset
    return C2iRatio(label, correct, incorrect)


def degradation_values(
    before: float | None, after: float | None
) -> tuple[float | None, str | None]:
    """Relative ratio drop; (None, reason) when the formula cannot apply."""
    if before is None or after is None:
        return None, "undefined ratio (empty subset)"
    if math.isinf(before) or math.isinf(after):
        return None, "infinite ratio (no incorrect answers)"
    if before == 0.0:
        return None, "zero baseline ratio"
    return 1.0 - after / before, None


def degradation(before: C2iRatio, after: C2iRatio) -> tuple[float | None, str | None]:
    """Relative ratio drop from ``before`` to ``after``; positive = worse."""
    return degradation_values(before.ratio, after.ratio)


def _median_ratio(ratios: Sequence[float | None]) -> float | None:
    defined = [r for r in ratios if r is not None]
    if not defined:
        return None
    return median(defined)


def _max_abs_deviation(ratios: Sequence[float | None]) -> float | None:
    med = _median_ratio(ratios)
    defined = [r for r in ratios if r is not None]
    if med is None or math.isinf(med):
        return None
    if any(math.isinf(r) for r in defined):
        return math.inf
    return max(abs(r - med) for r in defined)


def compare_splits_multi(
    reports: Mapping[str, Sequence[FpvgAggregates]],
    fingerprints: Mapping[str, str] | None = None,
) -> dict:
    """Cross-split c2i table; each split may carry several report files.

    The first split is the degradation baseline. Cells of single-report
    splits carry their exact correct/incorrect counts; multi-report
    cells report the median ratio plus its maximum absolute deviation.
    All supplied fingerprints must agree.
    """
    if len(reports) < 2:
        raise EvaluationError("split comparison needs at least two labeled reports")
    if any(not aggs for aggs in reports.values()):
        raise EvaluationError("every split needs at least one report")
    if fingerprints:
        distinct = set(fingerprints.values())
        if len(distinct) > 1:
            raise EvaluationError(
                f"config fingerprint mismatch across reports: {sorted(distinct)}"
            )

    labels = list(reports)
    cells: dict[tuple[str, str], dict] = {}
    for label in labels:
        for subset in SUBSETS:
            ratio_objs = [c2i(agg, subset, label_prefix=label) for agg in reports[label]]
            ratios = [r.ratio for r in ratio_objs]
            cell = {
                "split": label,
                "group": subset,
                "n_reports": len(ratio_objs),
                "ratio": _median_ratio(ratios),
            }
            if len(ratio_objs) == 1:
                cell["correct"] = ratio_objs[0].correct
                cell["incorrect"] = ratio_objs[0].incorrect
            else:
                cell["correct"] = None
                cell["incorrect"] = None
                cell["ratios"] = ratios
                cell["max_abs_deviation"] = _max_abs_deviation(ratios)
            cells[(label, subset)] = cell

    baseline = labels[0]
    table = []
    for label in labels:
        for subset in SUBSETS:
            cell = dict(cells[(label, subset)])
            if label == baseline:
                drop, reason = None, "baseline split"
            else:
                drop, reason = degradation_values(
                    cells[(baseline, subset)]["ratio"], cell["ratio"]
                )
            cell["degradation_vs_baseline"] = drop
            if reason is not None:
                cell["degradation_note"] = reason
            table.append(cell)

    grounding_drop = []
    for label in labels:
        drop, reason = degradation_values(
            cells[(label, "plus")]["ratio"], cells[(label, "minus")]["ratio"]
        )
        entry = {"split": label, "degradation_plus_to_minus": drop}
        if reason is not None:
            entry["note"] = reason
        grounding_drop.append(entry)

    return {
        "degradation_formula": DEGRADATION_FORMULA,
        "baseline_split": baseline,
        "c2i": table,
        "grounding_degradation": grounding_drop,
    }


def compare_splits(
    reports: Mapping[str, FpvgAggregates],
    fingerprints: Mapping[str, str] | None = None,
) -> dict:
    """Cross-split comparison with exactly one report per split label."""
    return compare_splits_multi({k: [v] for k, v in reports.items()}, fingerprints)
