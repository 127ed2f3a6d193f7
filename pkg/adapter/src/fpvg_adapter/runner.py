"""Apply manifests to the feature store and export prediction runs.

Consumes the toolkit's wire formats directly (manifests.jsonl for the
per-question object indices, questions.jsonl for the question-to-image
mapping) and writes one predictions.jsonl per test condition in the
exact schema the toolkit ingests, so exports drop straight into
``fpvg evaluate``. Exports are refused when a model emits a broken
distribution rather than letting the toolkit reject them later.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from .apply import POLICIES, apply_manifest
from .feature_store import FeatureStore

DISTRIBUTION_SUM_TOL = 1e-4

ModelCallable = Callable[[str, np.ndarray], tuple[str, dict[str, float]]]


class ExportError(Exception):
    """A prediction could not be exported in a toolkit-valid form."""


@dataclass(frozen=True)
class ManifestRow:
    question_id: str
    condition: str  # "all" / "rel" / "irrel" / "loo:<k>"
    object_indices: tuple[int, ...]


def read_manifests(path: str | Path) -> Iterator[ManifestRow]:
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            try:
                condition = row["condition"]
                if condition == "loo":
                    condition = f"loo:{row['loo_index']}"
                yield ManifestRow(
                    question_id=row["question_id"],
                    condition=condition,
                    object_indices=tuple(int(i) for i in row["object_indices"]),
                )
            except KeyError as exc:
                raise ExportError(f"{path}:{line_no}: manifest row missing {exc}") from None


def read_image_map(questions_path: str | Path) -> dict[str, str]:
    """question_id -> image_id from a questions.jsonl file."""
    mapping: dict[str, str] = {}
    with open(questions_path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            mapping[row["question_id"]] = row["image_id"]
    return mapping


def _validated_record(question_id: str, answer: str, distribution: dict[str, float]) -> dict:
    if not distribution:
        raise ExportError(f"question {question_id!r}: model returned an empty distribution")
    total = sum(distribution.values())
    if abs(total - 1.0) > DISTRIBUTION_SUM_TOL:
        raise ExportError(
            f"question {question_id!r}: distribution sums to {total!r}; export refused"
        )
    if answer not in distribution or distribution[answer] != max(distribution.values()):
        raise ExportError(
            f"question {question_id!r}: answer {answer!r} is not the distribution argmax"
        )
    return {
        "question_id": question_id,
        "answer": answer,
        "prob": distribution[answer],
        "distribution": {k: distribution[k] for k in sorted(distribution)},
    }


def _condition_filename(condition: str) -> str:
    if condition.startswith("loo:"):
        return f"predictions_loo_{int(condition.split(':', 1)[1]):03d}.jsonl"
    return f"predictions_{condition}.jsonl"


def run_and_export(
    model: ModelCallable,
    manifests_path: str | Path,
    questions_path: str | Path,
    store: FeatureStore,
    out_dir: str | Path,
    policy: str = "zero_pad",
    metadata: dict | None = None,
) -> dict[str, Path]:
    """Run the model once per manifest row; one output file per condition."""
    if policy not in POLICIES:
        raise ExportError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    image_of = read_image_map(questions_path)
    by_condition: dict[str, dict[str, dict]] = {}
    for row in read_manifests(manifests_path):
        image_id = image_of.get(row.question_id)
        if image_id is None:
            raise ExportError(f"manifest question {row.question_id!r} not in questions file")
        features = apply_manifest(store, image_id, row.object_indices, policy)
        try:
            answer, distribution = model(row.question_id, features)
        except Exception as exc:
            raise ExportError(f"model failed on question {row.question_id!r}: {exc}") from exc
        record = _validated_record(row.question_id, answer, distribution)
        by_condition.setdefault(row.condition, {})[row.question_id] = record

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    for condition in sorted(by_condition):
        path = out_dir / _condition_filename(condition)
        records = by_condition[condition]
        with open(path, "w", encoding="utf-8") as handle:
            for qid in sorted(records):
                handle.write(json.dumps(records[qid], ensure_ascii=True) + "\n")
        written[condition] = path

    meta = {"policy": policy, **(metadata or {})}
    with open(out_dir / "run_metadata.json", "w", encoding="utf-8") as handle:
        json.dump(meta, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return written
