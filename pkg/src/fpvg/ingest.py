"""Parsing, validation and canonical serialization of the JSONL inputs.

Four line-oriented JSON files feed the toolkit:

    questions.jsonl   {"question_id", "image_id", "answer",
                       "relevant_boxes": [[x1,y1,x2,y2], ...]}
    detections.jsonl  {"image_id", "boxes": [[x1,y1,x2,y2], ...]}
    predictions.jsonl {"question_id", "answer", "prob"?: float,
                       "distribution"?: {answer: float}}
    importance.jsonl  {"question_id", "method", "scores": [float, ...]}

Schema violations are hard errors carrying file, line and field;
questions without relevance annotations are soft-skipped and counted.
Writers emit the canonical form (records sorted by id, schema field
order, sorted distribution keys), so serialize(parse(x)) is
byte-identical for canonical inputs.
"""

from __future__ import annotations

import json
import os
import tempfile
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .conditions import Condition
from .errors import ValidationError
from .geometry import BoundingBox

DISTRIBUTION_SUM_TOL = 1e-4
PROB_MATCH_TOL = 1e-9
DEFAULT_MAX_OBJECTS = 100


# ---------------------------------------------------------------------------
# Answer equality
# ---------------------------------------------------------------------------


def normalize_answer(answer: str) -> str:
    """Canonical answer form: Unicode NFC, trimmed, lowercased."""
    return unicodedata.normalize("NFC", answer).strip().lower()


def answers_equal(a: str, b: str, strict: bool = False) -> bool:
    """Answer-string equality; normalized unless ``strict`` is set."""
    if strict:
        return a == b
    return normalize_answer(a) == normalize_answer(b)


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuestionRecord:
    question_id: str
    image_id: str
    gold_answer: str
    relevant_annotation_boxes: tuple[BoundingBox, ...]


@dataclass(frozen=True)
class DetectionSet:
    """Detected boxes in the exact feature-row order the model consumes."""

    image_id: str
    boxes: tuple[BoundingBox, ...]


@dataclass(frozen=True)
class PredictionRecord:
    question_id: str
    answer: str
    predicted_class_prob: float | None = None
    distribution: dict[str, float] | None = None

    def class_prob(self, answer_key: str) -> float | None:
        """Probability this record assigns to ``answer_key``.

        A present distribution is treated as complete: classes it does
        not list carry zero mass. With only a top-1 probability the
        value is known solely for the record's own answer; anything
        else returns None (caller decides whether to skip or fail).
        """
        if self.distribution is not None:
            return self.distribution.get(answer_key, 0.0)
        if self.predicted_class_prob is not None and answer_key == self.answer:
            return self.predicted_class_prob
        return None


@dataclass
class PredictionRun:
    condition: Condition
    records: dict[str, PredictionRecord]
    run_label: str


@dataclass(frozen=True)
class ImportanceVector:
    question_id: str
    scores: tuple[float, ...]
    method_label: str


@dataclass
class QuestionParseStats:
    total_lines: int = 0
    parsed: int = 0
    skipped_no_annotation: int = 0


# ---------------------------------------------------------------------------
# Low-level helpers
# ---------------------------------------------------------------------------


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, object) for each non-empty line of a JSONL file."""
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            stripped = raw.strip()
            if not stripped:
                continue
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise ValidationError(
                    f"malformed JSON: {exc.msg}", file=str(path), line=line_no
                ) from None
            if not isinstance(obj, dict):
                raise ValidationError(
                    "each line must be a JSON object", file=str(path), line=line_no
                )
            yield line_no, obj


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via temp file + rename so readers never see partial output."""
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def write_jsonl(path: str | Path, objs: Iterable[dict]) -> None:
    lines = [json.dumps(o, ensure_ascii=True) for o in objs]
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def _require(obj: dict, name: str, file: str, line: int):
    if name not in obj:
        raise ValidationError(f"missing field {name!r}", file=file, line=line, field=name)
    return obj[name]


def _require_str(obj: dict, name: str, file: str, line: int) -> str:
    value = _require(obj, name, file, line)
    if not isinstance(value, str) or not value:
        raise ValidationError(
            f"field {name!r} must be a non-empty string", file=file, line=line, field=name
        )
    return value


def _as_number(value, name: str, file: str, line: int) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(
            f"field {name!r} must be a number", file=file, line=line, field=name
        )
    return float(value)


def _parse_box(value, file: str, line: int, field_name: str) -> BoundingBox:
    if not isinstance(value, (list, tuple)) or len(value) != 4:
        raise ValidationError(
            f"field {field_name!r} must be a [x1,y1,x2,y2] quadruple",
            file=file,
            line=line,
            field=field_name,
        )
    coords = [_as_number(v, field_name, file, line) for v in value]
    try:
        return BoundingBox.from_sequence(coords)
    except ValueError as exc:
        raise ValidationError(str(exc), file=file, line=line, field=field_name) from None


# ---------------------------------------------------------------------------
# Parsers
# ---------------------------------------------------------------------------


def parse_questions(path: str | Path) -> tuple[list[QuestionRecord], QuestionParseStats]:
    """Load questions.jsonl.

    Questions whose ``relevant_boxes`` list is empty are skipped and
    counted in the returned stats; every other schema violation is a
    hard error. Records come back sorted by question_id regardless of
    file order.
    """
    stats = QuestionParseStats()
    records: dict[str, QuestionRecord] = {}
    fname = str(path)
    for line_no, obj in iter_jsonl(path):
        stats.total_lines += 1
        qid = _require_str(obj, "question_id", fname, line_no)
        image_id = _require_str(obj, "image_id", fname, line_no)
        answer = _require_str(obj, "answer", fname, line_no)
        boxes_raw = _require(obj, "relevant_boxes", fname, line_no)
        if not isinstance(boxes_raw, list):
            raise ValidationError(
                "field 'relevant_boxes' must be a list",
                file=fname,
                line=line_no,
                field="relevant_boxes",
            )
        if qid in records:
            raise ValidationError(
                f"duplicate question_id {qid!r}", file=fname, line=line_no, field="question_id"
            )
        if not boxes_raw:
            stats.skipped_no_annotation += 1
            continue
        boxes = tuple(_parse_box(b, fname, line_no, "relevant_boxes") for b in boxes_raw)
        records[qid] = QuestionRecord(qid, image_id, answer, boxes)
        stats.parsed += 1
    return [records[qid] for qid in sorted(records)], stats


def parse_detections(
    path: str | Path, max_objects: int = DEFAULT_MAX_OBJECTS
) -> dict[str, DetectionSet]:
    """Load detections.jsonl into a map image_id -> DetectionSet."""
    out: dict[str, DetectionSet] = {}
    fname = str(path)
    for line_no, obj in iter_jsonl(path):
        image_id = _require_str(obj, "image_id", fname, line_no)
        boxes_raw = _require(obj, "boxes", fname, line_no)
        if not isinstance(boxes_raw, list):
            raise ValidationError(
                "field 'boxes' must be a list", file=fname, line=line_no, field="boxes"
            )
        if image_id in out:
            raise ValidationError(
                f"duplicate image_id {image_id!r}", file=fname, line=line_no, field="image_id"
            )
        if len(boxes_raw) > max_objects:
            raise ValidationError(
                f"image {image_id!r} has {len(boxes_raw)} boxes, exceeding "
                f"max_objects={max_objects}",
                file=fname,
                line=line_no,
                field="boxes",
            )
        boxes = tuple(_parse_box(b, fname, line_no, "boxes") for b in boxes_raw)
        out[image_id] = DetectionSet(image_id, boxes)
    return {k: out[k] for k in sorted(out)}


def _parse_prediction_record(obj: dict, fname: str, line_no: int) -> PredictionRecord:
    qid = _require_str(obj, "question_id", fname, line_no)
    answer = _require_str(obj, "answer", fname, line_no)
    prob = None
    if "prob" in obj:
        prob = _as_number(obj["prob"], "prob", fname, line_no)
        if not 0.0 <= prob <= 1.0:
            raise ValidationError(
                f"prob must lie in [0,1], got {prob}", file=fname, line=line_no, field="prob"
            )
    distribution = None
    if "distribution" in obj:
        dist_raw = obj["distribution"]
        if not isinstance(dist_raw, dict) or not dist_raw:
            raise ValidationError(
                "field 'distribution' must be a non-empty object",
                file=fname,
                line=line_no,
                field="distribution",
            )
        distribution = {}
        for key, value in dist_raw.items():
            p = _as_number(value, "distribution", fname, line_no)
            if not 0.0 <= p <= 1.0:
                raise ValidationError(
                    f"distribution value for {key!r} must lie in [0,1], got {p}",
                    file=fname,
                    line=line_no,
                    field="distribution",
                )
            distribution[key] = p
        total = sum(distribution.values())
        if abs(total - 1.0) > DISTRIBUTION_SUM_TOL:
            raise ValidationError(
                f"distribution sums to {total!r}, outside 1±{DISTRIBUTION_SUM_TOL}",
                file=fname,
                line=line_no,
                field="distribution",
            )
        if answer not in distribution:
            raise ValidationError(
                f"answer {answer!r} missing from distribution",
                file=fname,
                line=line_no,
                field="distribution",
            )
        if distribution[answer] != max(distribution.values()):
            raise ValidationError(
                f"answer {answer!r} is not the distribution argmax",
                file=fname,
                line=line_no,
                field="distribution",
            )
        if prob is not None and abs(prob - distribution[answer]) > PROB_MATCH_TOL:
            raise ValidationError(
                f"prob={prob} disagrees with distribution[{answer!r}]={distribution[answer]}",
                file=fname,
                line=line_no,
                field="prob",
            )
        if prob is None:
            prob = distribution[answer]
    return PredictionRecord(qid, answer, prob, distribution)


def parse_predictions(
    path: str | Path, condition: Condition | str, run_label: str | None = None
) -> PredictionRun:
    """Load one prediction run (one file per test condition)."""
    if isinstance(condition, str):
        condition = Condition.parse(condition)
    fname = str(path)
    records: dict[str, PredictionRecord] = {}
    for line_no, obj in iter_jsonl(path):
        rec = _parse_prediction_record(obj, fname, line_no)
        if rec.question_id in records:
            raise ValidationError(
                f"duplicate question_id {rec.question_id!r}",
                file=fname,
                line=line_no,
                field="question_id",
            )
        records[rec.question_id] = rec
    label = run_label if run_label is not None else Path(path).stem
    return PredictionRun(condition, {k: records[k] for k in sorted(records)}, label)


def parse_importance(
    path: str | Path, expected_lengths: Mapping[str, int] | None = None
) -> dict[str, ImportanceVector]:
    """Load importance.jsonl into a map question_id -> ImportanceVector.

    When ``expected_lengths`` is given (question_id -> object count) it
    defines the known question universe: unknown ids and length
    mismatches are hard errors.
    """
    out: dict[str, ImportanceVector] = {}
    fname = str(path)
    for line_no, obj in iter_jsonl(path):
        qid = _require_str(obj, "question_id", fname, line_no)
        method = _require_str(obj, "method", fname, line_no)
        scores_raw = _require(obj, "scores", fname, line_no)
        if not isinstance(scores_raw, list) or not scores_raw:
            raise ValidationError(
                "field 'scores' must be a non-empty list",
                file=fname,
                line=line_no,
                field="scores",
            )
        scores = tuple(_as_number(v, "scores", fname, line_no) for v in scores_raw)
        if qid in out:
            raise ValidationError(
                f"duplicate question_id {qid!r}", file=fname, line=line_no, field="question_id"
            )
        if expected_lengths is not None:
            if qid not in expected_lengths:
                raise ValidationError(
                    f"importance for unknown question {qid!r}",
                    file=fname,
                    line=line_no,
                    field="question_id",
                )
            if len(scores) != expected_lengths[qid]:
                raise ValidationError(
                    f"importance for {qid!r} has {len(scores)} scores, expected "
                    f"{expected_lengths[qid]}",
                    file=fname,
                    line=line_no,
                    field="scores",
                )
        out[qid] = ImportanceVector(qid, scores, method)
    return {k: out[k] for k in sorted(out)}


# ---------------------------------------------------------------------------
# Canonical writers
# ---------------------------------------------------------------------------


def _box_list(boxes: Iterable[BoundingBox]) -> list[list[float]]:
    return [[b.x1, b.y1, b.x2, b.y2] for b in boxes]


def write_questions(records: Iterable[QuestionRecord], path: str | Path) -> None:
    rows = [
        {
            "question_id": r.question_id,
            "image_id": r.image_id,
            "answer": r.gold_answer,
            "relevant_boxes": _box_list(r.relevant_annotation_boxes),
        }
        for r in sorted(records, key=lambda r: r.question_id)
    ]
    write_jsonl(path, rows)


def write_detections(detections: Mapping[str, DetectionSet], path: str | Path) -> None:
    rows = [
        {"image_id": image_id, "boxes": _box_list(detections[image_id].boxes)}
        for image_id in sorted(detections)
    ]
    write_jsonl(path, rows)


def write_predictions(run: PredictionRun, path: str | Path) -> None:
    rows = []
    for qid in sorted(run.records):
        rec = run.records[qid]
        row: dict = {"question_id": rec.question_id, "answer": rec.answer}
        if rec.predicted_class_prob is not None:
            row["prob"] = rec.predicted_class_prob
        if rec.distribution is not None:
            row["distribution"] = {k: rec.distribution[k] for k in sorted(rec.distribution)}
        rows.append(row)
    write_jsonl(path, rows)


def write_importance(vectors: Mapping[str, ImportanceVector], path: str | Path) -> None:
    rows = [
        {
            "question_id": qid,
            "method": vectors[qid].method_label,
            "scores": list(vectors[qid].scores),
        }
        for qid in sorted(vectors)
    ]
    write_jsonl(path, rows)
