"""Axis-aligned bounding-box arithmetic.

Boxes use the corner convention (x1, y1, x2, y2) with x1 < x2 and
y1 < y2, i.e. strictly positive area. Degenerate boxes are rejected at
construction; the overlap operations below may therefore assume valid
input and never divide by zero.

Two backends compute the batch overlap statistics consumed by the
relevance partition: a compiled extension (``fpvg._geometry_fast``) and
a pure-Python fallback. Both evaluate the same IEEE-754 expressions in
the same order, so their results are bit-identical; the backend is
selected at import time and can be forced with the ``FPVG_GEOMETRY``
environment variable (``auto`` / ``compiled`` / ``pure``).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

try:
    from . import _geometry_fast
except ImportError:  # extension not built; pure fallback below
    _geometry_fast = None


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned rectangle in pixel coordinates, corners (x1,y1)-(x2,y2)."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(
                f"degenerate box: need x1<x2 and y1<y2, got "
                f"({self.x1}, {self.y1}, {self.x2}, {self.y2})"
            )

    @classmethod
    def from_sequence(cls, seq: Sequence[float]) -> "BoundingBox":
        if len(seq) != 4:
            raise ValueError(f"box needs exactly 4 coordinates, got {len(seq)}")
        return cls(float(seq[0]), float(seq[1]), float(seq[2]), float(seq[3]))

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


BoxLike = "BoundingBox | Sequence[float]"


def _corners(box) -> tuple[float, float, float, float]:
    if isinstance(box, BoundingBox):
        return box.as_tuple()
    x1, y1, x2, y2 = box
    return (float(x1), float(y1), float(x2), float(y2))


def intersection_area(a, b) -> float:
    """Overlap area of two boxes; 0.0 for disjoint or merely touching boxes."""
    ax1, ay1, ax2, ay2 = _corners(a)
    bx1, by1, bx2, by2 = _corners(b)
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    return iw * ih


def iou(a, b) -> float:
    """Intersection over union of two boxes, in [0, 1].

    Symmetric in its arguments. Boxes that only share an edge have
    measure-zero overlap and score 0.
    """
    ax1, ay1, ax2, ay2 = _corners(a)
    bx1, by1, bx2, by2 = _corners(b)
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    area_a = (ax2 - ax1) * (ay2 - ay1)
    area_b = (bx2 - bx1) * (by2 - by1)
    return inter / (area_a + area_b - inter)


def coverage_fraction(candidate, reference) -> float:
    """Fraction of ``reference``'s area covered by ``candidate``, in [0, 1].

    Not symmetric: the denominator is the reference box's area.
    """
    rx1, ry1, rx2, ry2 = _corners(reference)
    inter = intersection_area(candidate, reference)
    if inter == 0.0:
        return 0.0
    return inter / ((rx2 - rx1) * (ry2 - ry1))


def _max_overlap_stats_pure(
    det: Sequence[tuple[float, float, float, float]],
    ann: Sequence[tuple[float, float, float, float]],
) -> tuple[list[float], list[float]]:
    # Mirror of the compiled kernel; keep the expression order in sync
    # with _geometry_fast.pyx so both backends agree bit-for-bit.
    max_iou = []
    max_cov = []
    for dx1, dy1, dx2, dy2 in det:
        area_d = (dx2 - dx1) * (dy2 - dy1)
        best_iou = 0.0
        best_cov = 0.0
        for ax1, ay1, ax2, ay2 in ann:
            iw = min(dx2, ax2) - max(dx1, ax1)
            ih = min(dy2, ay2) - max(dy1, ay1)
            if iw <= 0.0 or ih <= 0.0:
                continue
            inter = iw * ih
            area_a = (ax2 - ax1) * (ay2 - ay1)
            v = inter / (area_d + area_a - inter)
            if v > best_iou:
                best_iou = v
            c = inter / area_a
            if c > best_cov:
                best_cov = c
        max_iou.append(best_iou)
        max_cov.append(best_cov)
    return max_iou, max_cov


def _max_overlap_stats_compiled(det, ann):
    import numpy as np

    det_arr = np.asarray(det, dtype=np.float64).reshape(len(det), 4)
    ann_arr = np.asarray(ann, dtype=np.float64).reshape(len(ann), 4)
    out_iou, out_cov = _geometry_fast.max_overlap_stats(det_arr, ann_arr)
    return out_iou.tolist(), out_cov.tolist()


def _select_backend() -> str:
    mode = os.environ.get("FPVG_GEOMETRY", "auto")
    if mode not in ("auto", "compiled", "pure"):
        raise ValueError(f"FPVG_GEOMETRY must be auto/compiled/pure, got {mode!r}")
    if mode == "pure":
        return "pure"
    if _geometry_fast is None:
        if mode == "compiled":
            raise ImportError("fpvg._geometry_fast extension is not built")
        return "pure"
    return "compiled"


_BACKEND = _select_backend()


def active_backend() -> str:
    """Name of the batch-kernel backend selected at import: compiled or pure."""
    return _BACKEND


def max_overlap_stats(
    det_boxes: Sequence[BoundingBox],
    ann_boxes: Sequence[BoundingBox],
    backend: str | None = None,
) -> tuple[list[float], list[float]]:
    """Per-detection best IoU and best coverage against a set of reference boxes.

    Args:
        det_boxes: detected boxes, one entry per object index.
        ann_boxes: annotated reference boxes.
        backend: override the import-time backend ("compiled" / "pure").

    Returns:
        (max_iou, max_cov): for each detected box i, the maximum of
        iou(det[i], ann[j]) and of coverage_fraction(det[i], ann[j])
        over all reference boxes j. Empty reference set yields zeros.
    """
    det = [_corners(b) for b in det_boxes]
    ann = [_corners(b) for b in ann_boxes]
    chosen = backend or _BACKEND
    if chosen == "compiled":
        if _geometry_fast is None:
            raise ImportError("fpvg._geometry_fast extension is not built")
        if not det or not ann:
            return ([0.0] * len(det), [0.0] * len(det))
        return _max_overlap_stats_compiled(det, ann)
    if chosen != "pure":
        raise ValueError(f"unknown geometry backend: {chosen!r}")
    return _max_overlap_stats_pure(det, ann)
