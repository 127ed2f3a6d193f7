"""Per-question partition of detected objects into relevant / irrelevant.

A detected box is *relevant* when it overlaps some annotated box with
IoU strictly above the IoU threshold (default 0.5). It is *irrelevant*
when it covers at most the coverage threshold (default 0.25) of every
annotated box, which keeps significant relevant image content out of
the irrelevant set. Boxes in between belong to *neither*: they stay in
the full input but are excluded from both modulated inputs.

Relevance wins over irrelevance: with the default thresholds the two
conditions are mutually exclusive anyway (IoU > 0.5 forces coverage
> 0.5), but the partition must stay disjoint under any configured
thresholds, so a box qualifying as relevant is never also irrelevant.

A question is eligible for evaluation only when both a relevant and an
irrelevant object were detected; everything else is dropped and
counted.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ValidationError
from .geometry import max_overlap_stats
from .ingest import DetectionSet, QuestionRecord, iter_jsonl, write_jsonl

DEFAULT_IOU_THRESHOLD = 0.5
DEFAULT_COVERAGE_THRESHOLD = 0.25
DEFAULT_MAX_OBJECTS = 100


@dataclass(frozen=True)
class RelevanceConfig:
    iou_threshold: float = DEFAULT_IOU_THRESHOLD
    coverage_threshold: float = DEFAULT_COVERAGE_THRESHOLD
    max_objects: int = DEFAULT_MAX_OBJECTS

    def __post_init__(self):
        if not 0.0 < self.iou_threshold < 1.0:
            raise ValidationError(f"iou_threshold must lie in (0,1), got {self.iou_threshold}")
        if not 0.0 < self.coverage_threshold < 1.0:
            raise ValidationError(
                f"coverage_threshold must lie in (0,1), got {self.coverage_threshold}"
            )
        if self.max_objects < 1:
            raise ValidationError(f"max_objects must be positive, got {self.max_objects}")


@dataclass(frozen=True)
class RelevanceAssignment:
    question_id: str
    relevant: tuple[int, ...]
    irrelevant: tuple[int, ...]
    neither: tuple[int, ...]
    eligible: bool

    def __post_init__(self):
        rel, irr, nei = set(self.relevant), set(self.irrelevant), set(self.neither)
        if rel & irr or rel & nei or irr & nei:
            raise ValidationError(f"overlapping relevance sets for {self.question_id!r}")
        if self.eligible != (len(rel) >= 1 and len(irr) >= 1):
            raise ValidationError(f"inconsistent eligibility flag for {self.question_id!r}")

    @property
    def n_objects(self) -> int:
        return len(self.relevant) + len(self.irrelevant) + len(self.neither)

    def all_indices(self) -> tuple[int, ...]:
        return tuple(sorted(self.relevant + self.irrelevant + self.neither))


@dataclass
class DropReport:
    """Why questions were excluded from evaluation (disjoint counts).

    A question lands in exactly one bucket, checked in this order:
    no detected objects at all, then no relevant detection, then no
    irrelevant detection; the remainder is eligible.
    """

    no_detections: int = 0
    no_relevant_detected: int = 0
    no_irrelevant_detected: int = 0
    total_eligible: int = 0

    @property
    def total_questions(self) -> int:
        return (
            self.no_detections
            + self.no_relevant_detected
            + self.no_irrelevant_detected
            + self.total_eligible
        )

    def to_dict(self) -> dict:
        return {
            "no_detections": self.no_detections,
            "no_relevant_detected": self.no_relevant_detected,
            "no_irrelevant_detected": self.no_irrelevant_detected,
            "total_eligible": self.total_eligible,
            "total_questions": self.total_questions,
        }


def assign_relevance(
    question: QuestionRecord,
    detections: DetectionSet,
    config: RelevanceConfig = RelevanceConfig(),
) -> RelevanceAssignment:
    """Partition one image's detected objects for one question.

    Thresholds are strict: relevant needs IoU > iou_threshold against
    some annotated box; irrelevant needs coverage <= coverage_threshold
    against every annotated box.
    """
    if question.image_id != detections.image_id:
        raise ValidationError(
            f"question {question.question_id!r} refers to image "
            f"{question.image_id!r} but detections are for {detections.image_id!r}"
        )
    max_iou, max_cov = max_overlap_stats(detections.boxes, question.relevant_annotation_boxes)
    relevant = []
    irrelevant = []
    neither = []
    for idx in range(len(detections.boxes)):
        if max_iou[idx] > config.iou_threshold:
            relevant.append(idx)
        elif max_cov[idx] <= config.coverage_threshold:
            irrelevant.append(idx)
        else:
            neither.append(idx)
    return RelevanceAssignment(
        question_id=question.question_id,
        relevant=tuple(relevant),
        irrelevant=tuple(irrelevant),
        neither=tuple(neither),
        eligible=bool(relevant) and bool(irrelevant),
    )


def empty_assignment(question_id: str) -> RelevanceAssignment:
    """Assignment for a question whose image has no detections at all."""
    return RelevanceAssignment(question_id, (), (), (), False)


def filter_eligible(
    assignments: Iterable[RelevanceAssignment],
) -> tuple[set[str], DropReport]:
    """Split assignments into the eligible question-id set and drop counts."""
    eligible: set[str] = set()
    report = DropReport()
    for a in assignments:
        if a.eligible:
            eligible.add(a.question_id)
            report.total_eligible += 1
        elif a.n_objects == 0:
            report.no_detections += 1
        elif not a.relevant:
            report.no_relevant_detected += 1
        else:
            report.no_irrelevant_detected += 1
    return eligible, report


# ---------------------------------------------------------------------------
# assignments.jsonl
# ---------------------------------------------------------------------------


def write_assignments(
    assignments: Mapping[str, RelevanceAssignment], path: str | Path
) -> None:
    rows = [
        {
            "question_id": qid,
            "relevant": list(assignments[qid].relevant),
            "irrelevant": list(assignments[qid].irrelevant),
            "neither": list(assignments[qid].neither),
            "eligible": assignments[qid].eligible,
        }
        for qid in sorted(assignments)
    ]
    write_jsonl(path, rows)


def read_assignments(path: str | Path) -> dict[str, RelevanceAssignment]:
    out: dict[str, RelevanceAssignment] = {}
    fname = str(path)
    for line_no, obj in iter_jsonl(path):
        try:
            qid = obj["question_id"]
            assignment = RelevanceAssignment(
                question_id=qid,
                relevant=tuple(sorted(int(i) for i in obj["relevant"])),
                irrelevant=tuple(sorted(int(i) for i in obj["irrelevant"])),
                neither=tuple(sorted(int(i) for i in obj["neither"])),
                eligible=bool(obj["eligible"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(
                f"malformed assignment row: {exc}", file=fname, line=line_no
            ) from None
        if qid in out:
            raise ValidationError(
                f"duplicate question_id {qid!r}", file=fname, line=line_no, field="question_id"
            )
        out[qid] = assignment
    return {k: out[k] for k in sorted(out)}
