"""Command-line pipeline: prepare, manifest, evaluate, importance, analyze, synth.

Exit codes: 0 success, 1 validation error (machine-readable JSON
diagnostic on stderr), 2 I/O failure. All outputs are written
atomically and are byte-identical across reruns on identical inputs.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from .conditions import Condition
from .errors import EvaluationError, FpvgError, GenerationError, ValidationError
from .importance import loo_importance, ranking_match, ranking_match_by_fpvg
from .ingest import (
    iter_jsonl,
    parse_detections,
    parse_importance,
    parse_predictions,
    parse_questions,
    write_jsonl,
)
from .manifest import build_condition_manifests, build_loo_manifests, write_manifests
from .metrics import evaluate_questions
from .relevance import (
    RelevanceConfig,
    assign_relevance,
    empty_assignment,
    filter_eligible,
    read_assignments,
    write_assignments,
)
from .reporting import (
    ReportConfig,
    aggregates_from_report,
    analysis_csv,
    atomic_write_text,
    build_report,
    render_json,
    write_report_files,
)
from .analysis import compare_splits_multi
from .synthetic import (
    SyntheticModelKind,
    SyntheticWorldConfig,
    condition_manifests,
    generate_world,
    run_model,
    write_runs,
    write_world,
)


def _add_relevance_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--iou-threshold", type=float, default=0.5)
    parser.add_argument("--coverage-threshold", type=float, default=0.25)
    parser.add_argument("--max-objects", type=int, default=100)


def _add_metric_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--suff-good", type=float, default=0.01)
    parser.add_argument("--comp-bad", type=float, default=0.20)
    parser.add_argument(
        "--bin-edges",
        type=str,
        default="0.01,0.20,0.40",
        help="comma-separated ascending edges for suff/comp score bins",
    )
    parser.add_argument(
        "--strict-answers",
        action="store_true",
        help="compare answers as raw strings (no normalization)",
    )


def _report_config(args: argparse.Namespace) -> ReportConfig:
    try:
        edges = tuple(float(x) for x in args.bin_edges.split(",") if x.strip())
    except ValueError:
        raise ValidationError(f"--bin-edges must be comma-separated numbers: {args.bin_edges!r}")
    if not edges or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValidationError(f"--bin-edges must be strictly increasing: {args.bin_edges!r}")
    return ReportConfig(
        iou_threshold=args.iou_threshold,
        coverage_threshold=args.coverage_threshold,
        max_objects=args.max_objects,
        strict_answers=args.strict_answers,
        suff_good=args.suff_good,
        comp_bad=args.comp_bad,
        bin_edges=edges,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fpvg",
        description="Grounding metrics over three-condition VQA prediction runs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="compute relevance assignments and drop report")
    p.add_argument("--questions", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--out-dir", required=True)
    _add_relevance_flags(p)

    p = sub.add_parser("manifest", help="emit per-question object-index manifests")
    p.add_argument("--assignments", required=True)
    p.add_argument("--mode", choices=("conditions", "loo"), default="conditions")
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="compute the grounding report from three runs")
    p.add_argument("--questions", required=True)
    p.add_argument("--assignments", required=True)
    p.add_argument("--pred-all", required=True)
    p.add_argument("--pred-rel", required=True)
    p.add_argument("--pred-irrel", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--format", choices=("json", "csv", "both"), default="json")
    _add_relevance_flags(p)
    _add_metric_flags(p)

    p = sub.add_parser("importance", help="ranking-match validation of importance vectors")
    p.add_argument("--assignments", required=True)
    p.add_argument("--report", required=True, help="report.json from evaluate")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--importance", help="importance.jsonl (attention/gradients/...)")
    p.add_argument("--loo-base", help="predictions_all.jsonl for leave-one-out importance")
    p.add_argument("--loo-dir", help="directory of per-omitted-index prediction files")
    p.add_argument(
        "--loo-prefix",
        default="predictions_loo_",
        help="filename prefix of the per-index files in --loo-dir",
    )

    p = sub.add_parser("analyze", help="compare c2i ratios across labeled reports")
    p.add_argument(
        "--report",
        action="append",
        required=True,
        metavar="LABEL=PATH",
        help="repeatable; repeat a label to aggregate seed runs (median, max deviation)",
    )
    p.add_argument("--out-dir", required=True)
    p.add_argument("--format", choices=("json", "csv", "both"), default="json")

    p = sub.add_parser("synth", help="generate a synthetic world and prediction runs")
    p.add_argument("--out-dir", required=True)
    p.add_argument(
        "--model",
        choices=("grounded_oracle", "blind_prior", "uniform_random", "mixed"),
        default="grounded_oracle",
    )
    p.add_argument("--alpha", type=float, help="grounded fraction for --model mixed")
    p.add_argument("--n-questions", type=int, default=100)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--vocab-size", type=int, default=20)
    p.add_argument("--objects-min", type=int, default=4)
    p.add_argument("--objects-max", type=int, default=10)
    p.add_argument("--image-min", type=int, default=200)
    p.add_argument("--image-max", type=int, default=400)
    p.add_argument("--box-min", type=int, default=20)
    p.add_argument("--box-max", type=int, default=80)
    p.add_argument("--emit-loo", action="store_true", help="also write per-index LOO runs")
    return parser


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_prepare(args) -> int:
    config = RelevanceConfig(args.iou_threshold, args.coverage_threshold, args.max_objects)
    questions, stats = parse_questions(args.questions)
    detections = parse_detections(args.detections, config.max_objects)
    assignments = {}
    for question in questions:
        detection_set = detections.get(question.image_id)
        if detection_set is None:
            assignments[question.question_id] = empty_assignment(question.question_id)
        else:
            assignments[question.question_id] = assign_relevance(
                question, detection_set, config
            )
    _, drop = filter_eligible(assignments.values())

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_assignments(assignments, out_dir / "assignments.jsonl")
    report_config = ReportConfig(
        iou_threshold=config.iou_threshold,
        coverage_threshold=config.coverage_threshold,
        max_objects=config.max_objects,
    )
    drop_payload = {
        "config_fingerprint": report_config.fingerprint(),
        "config": report_config.to_dict(),
        "drop_report": {
            **drop.to_dict(),
            "skipped_no_annotation": stats.skipped_no_annotation,
        },
    }
    atomic_write_text(out_dir / "drop_report.json", render_json(drop_payload))
    print(
        json.dumps(
            {
                "assignments": str(out_dir / "assignments.jsonl"),
                "drop_report": str(out_dir / "drop_report.json"),
                "eligible": drop.total_eligible,
                "total_questions": drop.total_questions,
            }
        )
    )
    return 0


def cmd_manifest(args) -> int:
    assignments = read_assignments(args.assignments)
    manifests = []
    for qid in sorted(assignments):
        assignment = assignments[qid]
        if not assignment.eligible:
            continue
        if args.mode == "conditions":
            per_q = build_condition_manifests(assignment)
            manifests.extend([per_q["all"], per_q["rel"], per_q["irrel"]])
        else:
            manifests.extend(build_loo_manifests(assignment))
    write_manifests(manifests, args.out)
    print(json.dumps({"manifests": args.out, "rows": len(manifests)}))
    return 0


def cmd_evaluate(args) -> int:
    config = _report_config(args)
    questions, stats = parse_questions(args.questions)
    assignments = read_assignments(args.assignments)
    for question in questions:
        if question.question_id not in assignments:
            raise ValidationError(
                f"question {question.question_id!r} has no relevance assignment; "
                "run prepare on the same questions file first"
            )
    eligible, drop = filter_eligible(assignments.values())
    known = {q.question_id for q in questions}
    orphans = eligible - known
    if orphans:
        raise ValidationError(
            f"assignments cover {len(orphans)} question(s) missing from the "
            f"questions file, e.g. {sorted(orphans)[0]!r}"
        )
    runs = {
        "all": parse_predictions(args.pred_all, Condition.all()),
        "rel": parse_predictions(args.pred_rel, Condition.rel()),
        "irrel": parse_predictions(args.pred_irrel, Condition.irrel()),
    }
    outcomes = evaluate_questions(questions, runs, eligible, config.strict_answers)
    report, per_question = build_report(
        outcomes, drop, config, skipped_no_annotation=stats.skipped_no_annotation
    )
    written = write_report_files(report, per_question, args.out_dir, args.format)
    print(json.dumps({key: str(path) for key, path in written.items()}))
    return 0


def _read_grounded_flags(report_path: str) -> dict[str, bool]:
    with open(report_path, "r", encoding="utf-8") as handle:
        report = json.load(handle)
    sidecar = Path(report_path).parent / report["per_question_path"]
    flags = {}
    for _, row in iter_jsonl(sidecar):
        flags[row["question_id"]] = bool(row["grounded"])
    return flags


def _collect_loo_runs(loo_dir: str, prefix: str) -> list:
    pattern = re.compile(re.escape(prefix) + r"(\d+)\.jsonl$")
    indexed = {}
    for path in Path(loo_dir).iterdir():
        match = pattern.fullmatch(path.name)
        if match:
            indexed[int(match.group(1))] = path
    if not indexed:
        raise ValidationError(f"no {prefix}NNN.jsonl files found in {loo_dir}")
    expected = range(len(indexed))
    if sorted(indexed) != list(expected):
        raise ValidationError(
            f"leave-one-out files in {loo_dir} must cover contiguous indices "
            f"0..{len(indexed) - 1}, found {sorted(indexed)}"
        )
    return [
        parse_predictions(indexed[k], Condition.loo(k)) for k in expected
    ]


def cmd_importance(args) -> int:
    if bool(args.importance) == bool(args.loo_base):
        raise ValidationError(
            "importance needs exactly one input: --importance, or --loo-base with --loo-dir"
        )
    assignments = read_assignments(args.assignments)
    eligible, _ = filter_eligible(assignments.values())
    grounded_flags = _read_grounded_flags(args.report)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.importance:
        lengths = {qid: a.n_objects for qid, a in assignments.items()}
        vectors = parse_importance(args.importance, expected_lengths=lengths)
    else:
        if not args.loo_dir:
            raise ValidationError("--loo-base requires --loo-dir")
        base_run = parse_predictions(args.loo_base, Condition.all())
        loo_runs = _collect_loo_runs(args.loo_dir, args.loo_prefix)
        vectors = {}
        for qid in sorted(eligible):
            base = base_run.records.get(qid)
            if base is None:
                raise EvaluationError(
                    f"question {qid!r} missing from run {base_run.run_label!r} (all)"
                )
            n = assignments[qid].n_objects
            if n > len(loo_runs):
                raise ValidationError(
                    f"question {qid!r} has {n} objects but only {len(loo_runs)} "
                    "leave-one-out runs were provided"
                )
            records = []
            for k in range(n):
                rec = loo_runs[k].records.get(qid)
                if rec is None:
                    raise EvaluationError(
                        f"question {qid!r} missing from run {loo_runs[k].run_label!r} (loo:{k})"
                    )
                records.append(rec)
            vectors[qid] = loo_importance(base, records)
        write_jsonl(
            out_dir / "loo_importance.jsonl",
            [
                {
                    "question_id": qid,
                    "method": vectors[qid].method_label,
                    "scores": list(vectors[qid].scores),
                }
                for qid in sorted(vectors)
            ],
        )

    scores = []
    skipped_ineligible = 0
    for qid in sorted(vectors):
        if qid not in eligible:
            skipped_ineligible += 1
            continue
        scores.append(ranking_match(vectors[qid], assignments[qid]))
    grouped = ranking_match_by_fpvg(scores, grounded_flags)

    write_jsonl(
        out_dir / "ranking_match.jsonl",
        [
            {
                "question_id": s.question_id,
                "method": s.method_label,
                "relevant_score": s.relevant_score,
                "irrelevant_score": s.irrelevant_score,
            }
            for s in scores
        ],
    )
    summary = {
        "n_scored": len(scores),
        "n_skipped_ineligible": skipped_ineligible,
        "top_k_tie_break": "score descending, then object index ascending",
        "ranking_match": grouped.to_dict(),
    }
    atomic_write_text(out_dir / "importance_summary.json", render_json(summary))
    print(
        json.dumps(
            {
                "ranking_match": str(out_dir / "ranking_match.jsonl"),
                "summary": str(out_dir / "importance_summary.json"),
            }
        )
    )
    return 0


def cmd_analyze(args) -> int:
    reports: dict[str, list] = {}
    fingerprints: dict[str, str] = {}
    for item in args.report:
        if "=" not in item:
            raise ValidationError(f"--report expects LABEL=PATH, got {item!r}")
        label, path = item.split("=", 1)
        with open(path, "r", encoding="utf-8") as handle:
            report = json.load(handle)
        reports.setdefault(label, []).append(aggregates_from_report(report))
        fingerprints[f"{label}#{len(reports[label])}"] = report.get("config_fingerprint", "")
    comparison = compare_splits_multi(reports, fingerprints)
    comparison["config_fingerprint"] = next(iter(fingerprints.values()))

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    if args.format in ("json", "both"):
        path = out_dir / "analysis.json"
        atomic_write_text(path, render_json(comparison))
        written["analysis_json"] = str(path)
    if args.format in ("csv", "both"):
        path = out_dir / "analysis.csv"
        atomic_write_text(path, analysis_csv(comparison))
        written["analysis_csv"] = str(path)
    print(json.dumps(written))
    return 0


def cmd_synth(args) -> int:
    if args.model == "mixed" and args.alpha is None:
        raise ValidationError("--model mixed requires --alpha")
    kind = SyntheticModelKind(args.model, args.alpha if args.model == "mixed" else None)
    config = SyntheticWorldConfig(
        n_questions=args.n_questions,
        objects_min=args.objects_min,
        objects_max=args.objects_max,
        answer_vocab_size=args.vocab_size,
        rng_seed=args.seed,
        image_min=args.image_min,
        image_max=args.image_max,
        box_min=args.box_min,
        box_max=args.box_max,
    )
    world = generate_world(config)
    out_dir = Path(args.out_dir)
    paths = {key: str(p) for key, p in write_world(world, out_dir).items()}

    manifests = condition_manifests(world)
    if args.emit_loo:
        for qid in sorted(world.assignments):
            manifests.extend(build_loo_manifests(world.assignments[qid]))
    runs = run_model(kind, manifests, world)
    for cond_text, path in write_runs(runs, out_dir).items():
        paths[f"predictions[{cond_text}]"] = str(path)
    print(json.dumps({"n_questions": len(world.questions), **paths}))
    return 0


COMMANDS = {
    "prepare": cmd_prepare,
    "manifest": cmd_manifest,
    "evaluate": cmd_evaluate,
    "importance": cmd_importance,
    "analyze": cmd_analyze,
    "synth": cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValidationError, EvaluationError, GenerationError) as exc:
        diagnostic = (
            exc.to_diagnostic()
            if isinstance(exc, ValidationError)
            else {"error": "validation", "message": str(exc)}
        )
        print(json.dumps(diagnostic), file=sys.stderr)
        return 1
    except FpvgError as exc:
        print(json.dumps({"error": "validation", "message": str(exc)}), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
