"""Synthetic datasets and reference model behaviors with known outcomes.

The generator emits questions/detections in the exact ingest schemas,
constructed so that every question is eligible: each image carries at
least one detection overlapping its annotation above the IoU threshold
and at least one detection disjoint from the annotation. On top of
such a world, four simulated answerer kinds provide analytically exact
metric targets:

  * grounded_oracle - answers are a stable hash of which relevant
    objects are present in the input, so the answer survives the
    rel-only input and collapses to a reserved out-of-vocabulary token
    when no relevant object remains. Grounded on every question.
  * blind_prior    - answers depend on the question id only; identical
    across conditions. Grounded on no question (but the ablated metric
    that skips the irrelevant test scores it perfectly, which is the
    failure mode the third test exists to expose).
  * uniform_random - answer drawn per (question, condition).
  * mixed(alpha)   - per question, grounded_oracle with probability
    alpha else blind_prior; the seeded choice is exposed so tests can
    count the exact expected fraction.

Seeding is hierarchical: every question draws from streams keyed by
(world seed, question index), so growing a world never perturbs
existing questions, and everything is bit-reproducible from the seed.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .conditions import Condition
from .errors import GenerationError, ValidationError
from .geometry import BoundingBox, coverage_fraction, iou
from .ingest import (
    DetectionSet,
    PredictionRecord,
    PredictionRun,
    QuestionRecord,
    write_detections,
    write_predictions,
    write_questions,
)
from .manifest import Manifest, build_condition_manifests
from .relevance import RelevanceAssignment, RelevanceConfig, assign_relevance

EMPTY_SET_TOKEN = "∅"  # reserved answer when no relevant object is visible
PEAK_PROB = 0.9
MODEL_KINDS = ("grounded_oracle", "blind_prior", "uniform_random", "mixed")

# per-question rng stream ids
_STREAM_GEOMETRY = 0
_STREAM_GOLD = 1
_STREAM_MIXED = 2
_STREAM_UNIFORM = 3

_PLACEMENT_ATTEMPTS = 200


@dataclass(frozen=True)
class SyntheticWorldConfig:
    n_questions: int = 100
    objects_min: int = 4
    objects_max: int = 10
    answer_vocab_size: int = 20
    rng_seed: int = 7
    image_min: int = 200
    image_max: int = 400
    box_min: int = 20
    box_max: int = 80
    relevance: RelevanceConfig = field(default_factory=RelevanceConfig)

    def __post_init__(self):
        if self.n_questions < 0:
            raise ValidationError(f"n_questions must be >= 0, got {self.n_questions}")
        if self.objects_min < 2:
            raise ValidationError(
                "objects_min must be >= 2: eligibility needs one relevant and one "
                "irrelevant detection per question"
            )
        if self.objects_max < self.objects_min:
            raise ValidationError("objects_max must be >= objects_min")
        if self.answer_vocab_size < 2:
            raise ValidationError("answer_vocab_size must be >= 2")
        if self.rng_seed < 0:
            raise ValidationError("rng_seed must be non-negative")
        if not (0 < self.box_min <= self.box_max):
            raise ValidationError("need 0 < box_min <= box_max")
        if not (0 < self.image_min <= self.image_max):
            raise ValidationError("need 0 < image_min <= image_max")


@dataclass(frozen=True)
class SyntheticModelKind:
    kind: str
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValidationError(f"unknown model kind {self.kind!r}; expected {MODEL_KINDS}")
        if self.kind == "mixed":
            if self.alpha is None or not 0.0 <= self.alpha <= 1.0:
                raise ValidationError("mixed model needs alpha in [0,1]")
        elif self.alpha is not None:
            raise ValidationError(f"model kind {self.kind!r} takes no alpha")


@dataclass
class SyntheticWorld:
    config: SyntheticWorldConfig
    vocab: tuple[str, ...]
    questions: list[QuestionRecord]
    detections: dict[str, DetectionSet]
    assignments: dict[str, RelevanceAssignment]

    def question_index(self, question_id: str) -> int:
        return self._index[question_id]

    def __post_init__(self):
        self._index = {q.question_id: i for i, q in enumerate(self.questions)}


def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, *stream])


def _randint(rng: np.random.Generator, lo: int, hi: int) -> int:
    """Uniform integer in [lo, hi], inclusive."""
    return int(rng.integers(lo, hi + 1))


def _place_annotation(rng, width: int, height: int, cfg: SyntheticWorldConfig):
    for _ in range(_PLACEMENT_ATTEMPTS):
        w = _randint(rng, cfg.box_min, cfg.box_max)
        h = _randint(rng, cfg.box_min, cfg.box_max)
        margin = max(1, min(w, h) // 10)
        if width - w - 2 * margin <= 0 or height - h - 2 * margin <= 0:
            continue
        x1 = _randint(rng, margin, width - w - margin)
        y1 = _randint(rng, margin, height - h - margin)
        return BoundingBox(float(x1), float(y1), float(x1 + w), float(y1 + h)), margin
    raise GenerationError(
        f"cannot place a {cfg.box_min}..{cfg.box_max} px annotation inside a "
        f"{width}x{height} image"
    )


def _jittered_match(rng, ann: BoundingBox, shift: int, iou_threshold: float) -> BoundingBox:
    for _ in range(_PLACEMENT_ATTEMPTS):
        dx = float(_randint(rng, -shift, shift))
        dy = float(_randint(rng, -shift, shift))
        candidate = BoundingBox(ann.x1 + dx, ann.y1 + dy, ann.x2 + dx, ann.y2 + dy)
        if iou(candidate, ann) > iou_threshold:
            return candidate
    return ann  # exact copy always satisfies IoU > threshold


def _disjoint_box(rng, width: int, height: int, ann: BoundingBox, cfg: SyntheticWorldConfig):
    for _ in range(_PLACEMENT_ATTEMPTS):
        w = _randint(rng, cfg.box_min, min(cfg.box_max, width - 1))
        h = _randint(rng, cfg.box_min, min(cfg.box_max, height - 1))
        if w < cfg.box_min or h < cfg.box_min:
            continue
        x1 = _randint(rng, 0, width - w)
        y1 = _randint(rng, 0, height - h)
        candidate = BoundingBox(float(x1), float(y1), float(x1 + w), float(y1 + h))
        if coverage_fraction(candidate, ann) == 0.0:
            return candidate
    raise GenerationError(
        f"cannot place a detection disjoint from the annotation in a "
        f"{width}x{height} image with boxes {cfg.box_min}..{cfg.box_max} px; "
        "shrink the boxes or grow the image"
    )


def _random_box(rng, width: int, height: int, cfg: SyntheticWorldConfig) -> BoundingBox:
    w = _randint(rng, cfg.box_min, min(cfg.box_max, width - 1))
    h = _randint(rng, cfg.box_min, min(cfg.box_max, height - 1))
    x1 = _randint(rng, 0, width - w)
    y1 = _randint(rng, 0, height - h)
    return BoundingBox(float(x1), float(y1), float(x1 + w), float(y1 + h))


def default_vocab(size: int) -> tuple[str, ...]:
    return tuple(f"ans{i:03d}" for i in range(size))


def generate_world(cfg: SyntheticWorldConfig) -> SyntheticWorld:
    """Build a fully eligible world; same config (seed) gives identical bytes."""
    vocab = default_vocab(cfg.answer_vocab_size)
    questions: list[QuestionRecord] = []
    detections: dict[str, DetectionSet] = {}
    assignments: dict[str, RelevanceAssignment] = {}

    for j in range(cfg.n_questions):
        rng = _rng(cfg.rng_seed, j, _STREAM_GEOMETRY)
        width = _randint(rng, cfg.image_min, cfg.image_max)
        height = _randint(rng, cfg.image_min, cfg.image_max)
        ann, margin = _place_annotation(rng, width, height, cfg)
        matched = _jittered_match(rng, ann, margin, cfg.relevance.iou_threshold)
        disjoint = _disjoint_box(rng, width, height, ann, cfg)
        boxes = [matched, disjoint]
        n_objects = _randint(rng, cfg.objects_min, cfg.objects_max)
        for _ in range(n_objects - 2):
            boxes.append(_random_box(rng, width, height, cfg))
        order = rng.permutation(len(boxes))
        boxes = [boxes[int(i)] for i in order]

        gold_rng = _rng(cfg.rng_seed, j, _STREAM_GOLD)
        gold = vocab[_randint(gold_rng, 0, cfg.answer_vocab_size - 1)]

        qid = f"q{j:06d}"
        image_id = f"img{j:06d}"
        question = QuestionRecord(qid, image_id, gold, (ann,))
        detection_set = DetectionSet(image_id, tuple(boxes))
        assignment = assign_relevance(question, detection_set, cfg.relevance)
        if not assignment.eligible:
            raise GenerationError(f"generated question {qid} is not eligible (generator bug)")
        questions.append(question)
        detections[image_id] = detection_set
        assignments[qid] = assignment

    return SyntheticWorld(cfg, vocab, questions, detections, assignments)


def write_world(world: SyntheticWorld, out_dir: str | Path) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "questions": out_dir / "questions.jsonl",
        "detections": out_dir / "detections.jsonl",
    }
    write_questions(world.questions, paths["questions"])
    write_detections(world.detections, paths["detections"])
    return paths


# ---------------------------------------------------------------------------
# Simulated answerers
# ---------------------------------------------------------------------------


def _hash_to_vocab(vocab: tuple[str, ...], *parts: str) -> str:
    digest = hashlib.sha256("|".join(parts).encode("utf-8")).digest()
    return vocab[int.from_bytes(digest[:8], "big") % len(vocab)]


def _grounded_answer(world: SyntheticWorld, question_id: str, manifest: Manifest) -> str:
    relevant = set(world.assignments[question_id].relevant)
    present = sorted(relevant & set(manifest.object_indices))
    if not present:
        return EMPTY_SET_TOKEN
    return _hash_to_vocab(world.vocab, question_id, ",".join(map(str, present)))


def _blind_answer(world: SyntheticWorld, question_id: str) -> str:
    return _hash_to_vocab(world.vocab, question_id, "blind")


def _uniform_answer(world: SyntheticWorld, question_id: str, condition: Condition) -> str:
    kind_code = {"all": 0, "rel": 1, "irrel": 2, "loo": 3}[condition.kind]
    loo = condition.loo_index if condition.loo_index is not None else 0
    rng = _rng(
        world.config.rng_seed,
        world.question_index(question_id),
        _STREAM_UNIFORM,
        kind_code,
        loo,
    )
    return world.vocab[_randint(rng, 0, len(world.vocab) - 1)]


def mixed_grounded_flags(world: SyntheticWorld, alpha: float) -> dict[str, bool]:
    """The exact per-question grounded/blind choice a mixed model makes."""
    flags = {}
    for j, question in enumerate(world.questions):
        rng = _rng(world.config.rng_seed, j, _STREAM_MIXED)
        flags[question.question_id] = bool(rng.random() < alpha)
    return flags


def _peaked_distribution(vocab: tuple[str, ...], answer: str) -> dict[str, float]:
    support = list(vocab) if answer in vocab else [*vocab, answer]
    others = len(support) - 1
    if others == 0:
        return {answer: 1.0}
    floor = (1.0 - PEAK_PROB) / others
    dist = {c: floor for c in support}
    dist[answer] = PEAK_PROB
    return dist


def run_model(
    kind: SyntheticModelKind,
    manifests: Iterable[Manifest],
    world: SyntheticWorld,
) -> dict[str, PredictionRun]:
    """Simulate one answerer over manifests, one PredictionRun per condition."""
    mixed_flags = (
        mixed_grounded_flags(world, kind.alpha) if kind.kind == "mixed" else {}
    )
    by_condition: dict[str, dict[str, PredictionRecord]] = {}
    for manifest in manifests:
        qid = manifest.question_id
        if qid not in world.assignments:
            raise ValidationError(f"manifest references unknown question {qid!r}")
        if kind.kind == "grounded_oracle":
            answer = _grounded_answer(world, qid, manifest)
        elif kind.kind == "blind_prior":
            answer = _blind_answer(world, qid)
        elif kind.kind == "uniform_random":
            answer = _uniform_answer(world, qid, manifest.condition)
        else:  # mixed
            if mixed_flags[qid]:
                answer = _grounded_answer(world, qid, manifest)
            else:
                answer = _blind_answer(world, qid)
        dist = _peaked_distribution(world.vocab, answer)
        record = PredictionRecord(qid, answer, dist[answer], dist)
        by_condition.setdefault(str(manifest.condition), {})[qid] = record

    runs = {}
    for cond_text, records in by_condition.items():
        condition = Condition.parse(cond_text)
        label = f"{kind.kind}/{cond_text}"
        runs[cond_text] = PredictionRun(condition, dict(sorted(records.items())), label)
    return runs


def condition_manifests(world: SyntheticWorld) -> list[Manifest]:
    """The three per-question manifests for every question in the world."""
    out: list[Manifest] = []
    for question in world.questions:
        per_q = build_condition_manifests(world.assignments[question.question_id])
        out.extend([per_q["all"], per_q["rel"], per_q["irrel"]])
    return out


def write_runs(
    runs: Mapping[str, PredictionRun], out_dir: str | Path, prefix: str = "predictions"
) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for cond_text in sorted(runs):
        condition = runs[cond_text].condition
        if condition.kind == "loo":
            name = f"{prefix}_loo_{condition.loo_index:03d}.jsonl"
        else:
            name = f"{prefix}_{condition.kind}.jsonl"
        path = out_dir / name
        write_predictions(runs[cond_text], path)
        paths[cond_text] = path
    return paths
