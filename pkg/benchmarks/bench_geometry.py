#!/usr/bin/env python3
"""Benchmark the compiled overlap kernel against the pure-Python fallback.

The relevance partition calls max_overlap_stats once per question with
up to max_objects detections against a handful of annotated boxes; at
real dataset scale (~10^5 questions) that pairwise loop dominates the
prepare stage, which is why it has a compiled twin. This script times
both backends on the same workload (plus the raw kernel on pre-built
arrays, i.e. without per-call box conversion) and verifies that both
backends agree bit-exactly.

Usage: python benchmarks/bench_geometry.py [--questions 20000]
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from fpvg import geometry
from fpvg.geometry import BoundingBox, max_overlap_stats


def build_workload(n_questions: int, det_count: int, ann_count: int, seed: int = 7):
    rng = random.Random(seed)

    def box():
        x1 = rng.uniform(0, 900)
        y1 = rng.uniform(0, 900)
        return BoundingBox(x1, y1, x1 + rng.uniform(5, 120), y1 + rng.uniform(5, 120))

    return [
        ([box() for _ in range(det_count)], [box() for _ in range(ann_count)])
        for _ in range(n_questions)
    ]


def time_backend(workload, backend: str) -> float:
    start = time.perf_counter()
    for det, ann in workload:
        max_overlap_stats(det, ann, backend=backend)
    return time.perf_counter() - start


def time_kernel_on_arrays(workload) -> float:
    arrays = [
        (
            np.array([b.as_tuple() for b in det], dtype=np.float64),
            np.array([b.as_tuple() for b in ann], dtype=np.float64),
        )
        for det, ann in workload
    ]
    from fpvg import _geometry_fast

    start = time.perf_counter()
    for det_arr, ann_arr in arrays:
        _geometry_fast.max_overlap_stats(det_arr, ann_arr)
    return time.perf_counter() - start


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--questions", type=int, default=20_000)
    parser.add_argument("--detections", type=int, default=100)
    parser.add_argument("--annotations", type=int, default=5)
    args = parser.parse_args()

    print(
        f"workload: {args.questions} questions x "
        f"({args.detections} detections vs {args.annotations} annotations)"
    )
    workload = build_workload(args.questions, args.detections, args.annotations)
    pairs = args.questions * args.detections * args.annotations

    def report(name: str, seconds: float):
        print(
            f"{name:32s}: {seconds:8.3f} s   "
            f"({pairs / seconds / 1e6:7.1f} M box pairs/s)"
        )

    pure_time = time_backend(workload, "pure")
    report("pure python", pure_time)

    if geometry.active_backend() != "compiled":
        print("compiled: extension not built (pip install -e . --no-build-isolation)")
        return 0

    compiled_time = time_backend(workload, "compiled")
    report("compiled (boxes in, lists out)", compiled_time)
    kernel_time = time_kernel_on_arrays(workload)
    report("compiled kernel (array-resident)", kernel_time)
    print(f"end-to-end speedup : {pure_time / compiled_time:6.1f} x")
    print(f"kernel-only speedup: {pure_time / kernel_time:6.1f} x")

    mismatches = 0
    for det, ann in workload[: min(2000, len(workload))]:
        if max_overlap_stats(det, ann, backend="pure") != max_overlap_stats(
            det, ann, backend="compiled"
        ):
            mismatches += 1
    print(f"bit-exact agreement: {'yes' if mismatches == 0 else f'NO ({mismatches} diffs)'}")
    return 0 if mismatches == 0 else 1


if __name__ == "__main__":
    raise SystemExit(main())
