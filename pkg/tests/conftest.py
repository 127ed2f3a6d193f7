"""Shared fixtures and small builders for the test suite."""

from __future__ import annotations

import subprocess
import sys

import pytest

from fpvg.conditions import Condition
from fpvg.geometry import BoundingBox
from fpvg.ingest import PredictionRecord, PredictionRun, QuestionRecord


def make_question(qid: str, gold: str = "red", image_id: str | None = None) -> QuestionRecord:
    return QuestionRecord(
        question_id=qid,
        image_id=image_id or f"img_{qid}",
        gold_answer=gold,
        relevant_annotation_boxes=(BoundingBox(0, 0, 10, 10),),
    )


def make_run(condition: str, answers: dict, label: str | None = None) -> PredictionRun:
    """Build a PredictionRun from {qid: answer} or {qid: (answer, prob, dist)}."""
    records = {}
    for qid, spec in answers.items():
        if isinstance(spec, str):
            records[qid] = PredictionRecord(qid, spec)
        else:
            answer, prob, dist = (spec + (None, None))[:3]
            records[qid] = PredictionRecord(qid, answer, prob, dist)
    cond = Condition.parse(condition)
    return PredictionRun(cond, records, label or f"run-{condition}")


def peaked(answer: str, support: list[str], peak: float = 0.9) -> tuple:
    """(answer, prob, distribution) peaked on ``answer`` over ``support``."""
    classes = support if answer in support else support + [answer]
    floor = (1.0 - peak) / (len(classes) - 1)
    dist = {c: floor for c in classes}
    dist[answer] = peak
    return (answer, peak, dist)


@pytest.fixture
def run_cli(tmp_path):
    """Run the installed CLI in a subprocess; returns CompletedProcess."""

    def _run(*args: str, cwd=None, env_extra: dict | None = None):
        env = None
        if env_extra:
            import os

            env = {**os.environ, **env_extra}
        return subprocess.run(
            [sys.executable, "-m", "fpvg.cli", *args],
            capture_output=True,
            text=True,
            cwd=cwd or tmp_path,
            env=env,
        )

    return _run
