"""Synthetic world generation and the simulated answerer kinds."""

from __future__ import annotations

import pytest

from fpvg.errors import GenerationError, ValidationError
from fpvg.ingest import parse_detections, parse_questions
from fpvg.manifest import Manifest, build_loo_manifests
from fpvg.conditions import Condition
from fpvg.metrics import aggregate, evaluate_questions, suff_comp_quadrants
from fpvg.relevance import assign_relevance, filter_eligible
from fpvg.synthetic import (
    SyntheticModelKind,
    SyntheticWorldConfig,
    condition_manifests,
    generate_world,
    mixed_grounded_flags,
    run_model,
    write_runs,
    write_world,
)

SMALL = SyntheticWorldConfig(n_questions=40, rng_seed=123)


@pytest.fixture(scope="module")
def small_world():
    return generate_world(SMALL)


@pytest.fixture(scope="module")
def small_manifests(small_world):
    return condition_manifests(small_world)


def evaluate_kind(world, manifests, kind):
    runs = run_model(kind, manifests, world)
    eligible, _ = filter_eligible(world.assignments.values())
    return evaluate_questions(world.questions, runs, eligible)


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


def test_same_seed_same_bytes(tmp_path, small_world):
    paths_a = write_world(small_world, tmp_path / "a")
    paths_b = write_world(generate_world(SMALL), tmp_path / "b")
    for key in paths_a:
        assert paths_a[key].read_bytes() == paths_b[key].read_bytes()


def test_different_seed_differs(tmp_path, small_world):
    other = generate_world(SyntheticWorldConfig(n_questions=40, rng_seed=124))
    paths_a = write_world(small_world, tmp_path / "a")
    paths_b = write_world(other, tmp_path / "b")
    assert paths_a["detections"].read_bytes() != paths_b["detections"].read_bytes()


def test_prefix_stability():
    # growing the world must not perturb the existing questions
    bigger = generate_world(SyntheticWorldConfig(n_questions=45, rng_seed=123))
    smaller = generate_world(SMALL)
    assert bigger.questions[:40] == smaller.questions
    assert [bigger.detections[q.image_id] for q in smaller.questions] == [
        smaller.detections[q.image_id] for q in smaller.questions
    ]


def test_every_question_eligible_through_independent_reparse(tmp_path, small_world):
    # round-trip through the files and recompute relevance from scratch
    paths = write_world(small_world, tmp_path)
    questions, _ = parse_questions(paths["questions"])
    detections = parse_detections(paths["detections"])
    assignments = [
        assign_relevance(q, detections[q.image_id]) for q in questions
    ]
    eligible, drop = filter_eligible(assignments)
    assert len(eligible) == len(questions) == 40
    assert drop.no_relevant_detected == drop.no_irrelevant_detected == 0


def test_empty_world(tmp_path):
    world = generate_world(SyntheticWorldConfig(n_questions=0))
    paths = write_world(world, tmp_path)
    assert paths["questions"].read_bytes() == b""
    assert paths["detections"].read_bytes() == b""


def test_object_count_range(small_world):
    counts = {len(d.boxes) for d in small_world.detections.values()}
    assert counts <= set(range(SMALL.objects_min, SMALL.objects_max + 1))


def test_infeasible_geometry_errors():
    cramped = SyntheticWorldConfig(
        n_questions=1, image_min=40, image_max=40, box_min=25, box_max=30
    )
    with pytest.raises(GenerationError):
        generate_world(cramped)


def test_config_validation():
    with pytest.raises(ValidationError, match="objects_min"):
        SyntheticWorldConfig(objects_min=1)
    with pytest.raises(ValidationError, match="alpha"):
        SyntheticModelKind("mixed")
    with pytest.raises(ValidationError, match="no alpha"):
        SyntheticModelKind("blind_prior", alpha=0.2)
    with pytest.raises(ValidationError, match="model kind"):
        SyntheticModelKind("clever_hans")


# ---------------------------------------------------------------------------
# Model kinds
# ---------------------------------------------------------------------------


def test_grounded_oracle_is_always_grounded(small_world, small_manifests):
    outcomes = evaluate_kind(small_world, small_manifests, SyntheticModelKind("grounded_oracle"))
    assert all(o.grounded for o in outcomes)
    assert all(not o.rel_flip for o in outcomes)  # zero flips under rel-only input
    assert all(o.irrel_flip for o in outcomes)  # all flips under irrel-only input
    agg = aggregate(outcomes)
    assert agg.fpvg_plus == 1


def test_grounded_oracle_good_suff_good_comp(small_world, small_manifests):
    outcomes = evaluate_kind(small_world, small_manifests, SyntheticModelKind("grounded_oracle"))
    assert all(o.suff == 0.0 for o in outcomes)
    floor = 0.1 / SMALL.answer_vocab_size
    assert all(o.comp == pytest.approx(0.9 - floor) for o in outcomes)
    assert all(o.comp > 0.20 for o in outcomes)


def test_blind_prior_signature(small_world, small_manifests):
    outcomes = evaluate_kind(small_world, small_manifests, SyntheticModelKind("blind_prior"))
    agg = aggregate(outcomes)
    assert agg.fpvg_plus == 0
    assert agg.mod_fpvg_plus == 1
    assert all(o.suff == 0.0 and o.comp == 0.0 for o in outcomes)
    quadrants = suff_comp_quadrants(outcomes)
    assert quadrants.good_suff_bad_comp == quadrants.n_scored == len(outcomes)


def test_uniform_random_is_reproducible(small_world, small_manifests):
    kind = SyntheticModelKind("uniform_random")
    runs_a = run_model(kind, small_manifests, small_world)
    runs_b = run_model(kind, small_manifests, small_world)
    assert runs_a.keys() == runs_b.keys()
    for key in runs_a:
        assert runs_a[key].records == runs_b[key].records


def test_mixed_matches_flag_count_exactly(small_world, small_manifests):
    alpha = 0.4
    outcomes = evaluate_kind(
        small_world, small_manifests, SyntheticModelKind("mixed", alpha)
    )
    flags = mixed_grounded_flags(small_world, alpha)
    expected = sum(flags.values())
    assert sum(o.grounded for o in outcomes) == expected
    for o in outcomes:
        assert o.grounded == flags[o.question_id]


def test_unknown_question_in_manifest(small_world):
    ghost = Manifest("ghost", Condition.all(), (0, 1))
    with pytest.raises(ValidationError, match="unknown question"):
        run_model(SyntheticModelKind("blind_prior"), [ghost], small_world)


def test_loo_runs_and_files(tmp_path, small_world):
    # single-question slice: oracle answer changes when a relevant object
    # is left out, stays put otherwise
    qid = small_world.questions[0].question_id
    assignment = small_world.assignments[qid]
    manifests = [m for m in condition_manifests(small_world) if m.question_id == qid]
    manifests += build_loo_manifests(assignment)
    runs = run_model(SyntheticModelKind("grounded_oracle"), manifests, small_world)
    base_answer = runs["all"].records[qid].answer
    for k in assignment.all_indices():
        answer_k = runs[f"loo:{k}"].records[qid].answer
        if k in assignment.relevant:
            assert answer_k != base_answer or len(assignment.relevant) > 1
        else:
            assert answer_k == base_answer
    paths = write_runs(runs, tmp_path)
    assert paths["loo:0"].name == "predictions_loo_000.jsonl"
