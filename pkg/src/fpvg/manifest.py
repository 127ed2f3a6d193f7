"""Object-index manifests defining each test condition's visual input.

A manifest lists which detection indices a model runner should keep
when building the visual input for one question under one condition.
Indices are always strictly ascending (the original detection order);
how excluded rows are realized (zero-padding, compaction, feature
swapping) is the runner's concern, not encoded here.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .conditions import Condition
from .errors import ValidationError
from .ingest import iter_jsonl, write_jsonl
from .relevance import RelevanceAssignment


@dataclass(frozen=True)
class Manifest:
    question_id: str
    condition: Condition
    object_indices: tuple[int, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.object_indices, self.object_indices[1:])):
            raise ValidationError(
                f"manifest indices must be strictly ascending: {self.object_indices}"
            )


def build_condition_manifests(assignment: RelevanceAssignment) -> dict[str, Manifest]:
    """The three per-question manifests: all / rel / irrel.

    Refuses ineligible assignments; callers must filter first.
    """
    if not assignment.eligible:
        raise ValidationError(
            f"question {assignment.question_id!r} is not eligible "
            "(needs at least one relevant and one irrelevant object)"
        )
    qid = assignment.question_id
    return {
        "all": Manifest(qid, Condition.all(), assignment.all_indices()),
        "rel": Manifest(qid, Condition.rel(), tuple(sorted(assignment.relevant))),
        "irrel": Manifest(qid, Condition.irrel(), tuple(sorted(assignment.irrelevant))),
    }


def build_loo_manifests(assignment: RelevanceAssignment) -> list[Manifest]:
    """One manifest per object index, each omitting exactly that object."""
    indices = assignment.all_indices()
    out = []
    for k in indices:
        kept = tuple(i for i in indices if i != k)
        out.append(Manifest(assignment.question_id, Condition.loo(k), kept))
    return out


# ---------------------------------------------------------------------------
# manifests.jsonl
# ---------------------------------------------------------------------------


def write_manifests(manifests: Iterable[Manifest], path: str | Path) -> None:
    rows = []
    for m in manifests:
        row: dict = {"question_id": m.question_id, "condition": m.condition.kind}
        if m.condition.kind == "loo":
            row["loo_index"] = m.condition.loo_index
        row["object_indices"] = list(m.object_indices)
        rows.append(row)
    write_jsonl(path, rows)


def read_manifests(path: str | Path) -> Iterator[Manifest]:
    fname = str(path)
    for line_no, obj in iter_jsonl(path):
        try:
            kind = obj["condition"]
            if kind == "loo":
                condition = Condition.loo(int(obj["loo_index"]))
            else:
                condition = Condition(kind)
            yield Manifest(
                question_id=obj["question_id"],
                condition=condition,
                object_indices=tuple(int(i) for i in obj["object_indices"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(
                f"malformed manifest row: {exc}", file=fname, line=line_no
            ) from None
