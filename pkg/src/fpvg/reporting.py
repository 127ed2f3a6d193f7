"""Report assembly and rendering.

Every number in report.json ships with its numerator and denominator,
and every output embeds the semantic configuration plus a stable
fingerprint of it, so reports are self-describing and two reports are
comparable exactly when their fingerprints match. Decimal values are
rendered to 12 significant digits; the CSV rendering agrees with the
JSON one to that precision.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import ValidationError
from .ingest import atomic_write_text, write_jsonl
from .metrics import (
    DEFAULT_BIN_EDGES,
    DEFAULT_COMP_BAD,
    DEFAULT_SUFF_GOOD,
    FpvgAggregates,
    QuestionOutcome,
    aggregate,
    flip_rate_by_category,
    suff_comp_quadrants,
)
from .relevance import DropReport

SCHEMA_VERSION = 1

PER_QUESTION_FILENAME = "report_questions.jsonl"


@dataclass(frozen=True)
class ReportConfig:
    """Semantic knobs that make two evaluations comparable."""

    iou_threshold: float = 0.5
    coverage_threshold: float = 0.25
    max_objects: int = 100
    strict_answers: bool = False
    suff_good: float = DEFAULT_SUFF_GOOD
    comp_bad: float = DEFAULT_COMP_BAD
    bin_edges: tuple[float, ...] = DEFAULT_BIN_EDGES

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "iou_threshold": self.iou_threshold,
            "coverage_threshold": self.coverage_threshold,
            "max_objects": self.max_objects,
            "strict_answers": self.strict_answers,
            "suff_good": self.suff_good,
            "comp_bad": self.comp_bad,
            "bin_edges": list(self.bin_edges),
        }

    def fingerprint(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def round12(value: float) -> float:
    """Decimal rendering precision shared by JSON and CSV outputs."""
    return float(f"{value:.12g}")


def ratio_entry(numerator: int, denominator: int) -> dict:
    value = round12(numerator / denominator) if denominator else None
    return {"numerator": numerator, "denominator": denominator, "value": value}


def _aggregate_block(agg: FpvgAggregates, mod: bool) -> dict:
    if mod:
        pc, pi = agg.mod_plus_correct, agg.mod_plus_incorrect
        mc, mi = agg.mod_minus_correct, agg.mod_minus_incorrect
    else:
        pc, pi = agg.plus_correct, agg.plus_incorrect
        mc, mi = agg.minus_correct, agg.minus_incorrect
    return {
        "plus": ratio_entry(pc + pi, agg.n),
        "minus": ratio_entry(mc + mi, agg.n),
        "plus_correct": ratio_entry(pc, agg.n),
        "plus_incorrect": ratio_entry(pi, agg.n),
        "minus_correct": ratio_entry(mc, agg.n),
        "minus_incorrect": ratio_entry(mi, agg.n),
    }


def build_report(
    outcomes: Sequence[QuestionOutcome],
    drop_report: DropReport,
    config: ReportConfig,
    skipped_no_annotation: int = 0,
    per_question_path: str = PER_QUESTION_FILENAME,
) -> tuple[dict, list[dict]]:
    """Assemble report.json content and the per-question sidecar rows."""
    agg = aggregate(outcomes)
    quadrants = suff_comp_quadrants(outcomes, config.suff_good, config.comp_bad)
    n_scored = quadrants.n_scored

    drop_dict = drop_report.to_dict()
    drop_dict["skipped_no_annotation"] = skipped_no_annotation

    quadrant_block = {
        key: ratio_entry(count, n_scored)
        for key, count in (
            ("good_suff_good_comp", quadrants.good_suff_good_comp),
            ("good_suff_bad_comp", quadrants.good_suff_bad_comp),
            ("bad_suff_good_comp", quadrants.bad_suff_good_comp),
            ("bad_suff_bad_comp", quadrants.bad_suff_bad_comp),
        )
    }
    quadrant_block["n_scored"] = n_scored
    quadrant_block["n_excluded"] = quadrants.n_excluded

    flip_block = {
        key: [row.to_dict() for row in flip_rate_by_category(outcomes, key, config.bin_edges)]
        for key in ("suff-bins", "comp-bins", "fpvg-terms")
    }

    report = {
        "config_fingerprint": config.fingerprint(),
        "config": config.to_dict(),
        "n_evaluated": agg.n,
        "drop_report": drop_dict,
        "accuracy": {
            "all": ratio_entry(agg.acc_all, agg.n),
            "rel": ratio_entry(agg.acc_rel, agg.n),
            "irrel": ratio_entry(agg.acc_irrel, agg.n),
        },
        "fpvg": _aggregate_block(agg, mod=False),
        "mod_fpvg": _aggregate_block(agg, mod=True),
        "suff_comp": {"quadrants": quadrant_block, "flip_rates": flip_block},
        "per_question_path": per_question_path,
    }

    per_question = [
        {
            "question_id": o.question_id,
            "category": o.category.label,
            "grounded": o.grounded,
            "grounded_mod": o.grounded_mod,
            "correct": o.correct,
            "answer_all": o.answer_all,
            "answer_rel": o.answer_rel,
            "answer_irrel": o.answer_irrel,
            "suff": o.suff,
            "comp": o.comp,
        }
        for o in sorted(outcomes, key=lambda o: o.question_id)
    ]
    return report, per_question


def _csv_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def report_csv(report: dict) -> str:
    """Flatten the scalar metrics of a report into metric/num/den/value rows."""
    lines = ["metric,numerator,denominator,value"]

    def add(metric: str, entry: dict):
        lines.append(
            f"{metric},{_csv_value(entry['numerator'])},"
            f"{_csv_value(entry['denominator'])},{_csv_value(entry['value'])}"
        )

    for key, entry in report["accuracy"].items():
        add(f"accuracy.{key}", entry)
    for section in ("fpvg", "mod_fpvg"):
        for key, entry in report[section].items():
            add(f"{section}.{key}", entry)
    for key, entry in report["suff_comp"]["quadrants"].items():
        if isinstance(entry, dict):
            add(f"suff_comp.quadrants.{key}", entry)
    for table, rows in report["suff_comp"]["flip_rates"].items():
        for row in rows:
            lines.append(
                f"suff_comp.flip_rates.{table}.{row['category']},"
                f"{_csv_value(row['flips'])},{_csv_value(row['total'])},"
                f"{_csv_value(row['pct'])}"
            )
    return "\n".join(lines) + "\n"


def analysis_csv(comparison: dict) -> str:
    """Split-comparison table as CSV: split,group,correct,incorrect,ratio,degradation."""
    lines = ["split,group,correct,incorrect,ratio,degradation"]
    for row in comparison["c2i"]:
        lines.append(
            f"{row['split']},{row['group']},{_csv_value(row.get('correct'))},"
            f"{_csv_value(row.get('incorrect'))},{_csv_value(_rounded(row.get('ratio')))},"
            f"{_csv_value(_rounded(row.get('degradation_vs_baseline')))}"
        )
    for row in comparison["grounding_degradation"]:
        lines.append(
            f"{row['split']},plus_to_minus,,,,"
            f"{_csv_value(_rounded(row.get('degradation_plus_to_minus')))}"
        )
    return "\n".join(lines) + "\n"


def _rounded(value):
    if isinstance(value, float) and value == value and abs(value) != float("inf"):
        return round12(value)
    return value


def render_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, ensure_ascii=True) + "\n"


def write_report_files(
    report: dict,
    per_question: list[dict],
    out_dir: str | Path,
    formats: str = "json",
) -> dict[str, Path]:
    """Write report.json / report.csv / the per-question sidecar atomically."""
    if formats not in ("json", "csv", "both"):
        raise ValidationError(f"unknown format {formats!r}; expected json, csv or both")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    if formats in ("json", "both"):
        report_path = out_dir / "report.json"
        atomic_write_text(report_path, render_json(report))
        sidecar = out_dir / report["per_question_path"]
        write_jsonl(sidecar, per_question)
        written["report_json"] = report_path
        written["per_question"] = sidecar
    if formats in ("csv", "both"):
        csv_path = out_dir / "report.csv"
        atomic_write_text(csv_path, report_csv(report))
        written["report_csv"] = csv_path
    return written


def aggregates_from_report(report: dict) -> FpvgAggregates:
    """Rebuild the exact counts from a written report (for split analysis)."""
    try:
        n = report["n_evaluated"]
        fpvg = report["fpvg"]
        mod = report["mod_fpvg"]
        acc = report["accuracy"]
        return FpvgAggregates(
            n=n,
            plus_correct=fpvg["plus_correct"]["numerator"],
            plus_incorrect=fpvg["plus_incorrect"]["numerator"],
            minus_correct=fpvg["minus_correct"]["numerator"],
            minus_incorrect=fpvg["minus_incorrect"]["numerator"],
            mod_plus_correct=mod["plus_correct"]["numerator"],
            mod_plus_incorrect=mod["plus_incorrect"]["numerator"],
            mod_minus_correct=mod["minus_correct"]["numerator"],
            mod_minus_incorrect=mod["minus_incorrect"]["numerator"],
            acc_all=acc["all"]["numerator"],
            acc_rel=acc["rel"]["numerator"],
            acc_irrel=acc["irrel"]["numerator"],
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed report: missing {exc}") from None
