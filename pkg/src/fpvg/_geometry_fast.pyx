# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch overlap kernel.

Must stay arithmetically in sync with the pure fallback in
fpvg.geometry (_max_overlap_stats_pure): same expressions, same
evaluation order, so both backends produce bit-identical doubles.
"""

import numpy as np


def max_overlap_stats(double[:, ::1] det, double[:, ::1] ann):
    """Per-detection max IoU and max coverage over the reference boxes.

    det, ann: C-contiguous (n, 4) / (m, 4) arrays of (x1, y1, x2, y2).
    Returns two float64 arrays of length n.
    """
    cdef Py_ssize_t n = det.shape[0]
    cdef Py_ssize_t m = ann.shape[0]
    out_iou = np.zeros(n, dtype=np.float64)
    out_cov = np.zeros(n, dtype=np.float64)
    cdef double[::1] oi = out_iou
    cdef double[::1] oc = out_cov
    cdef Py_ssize_t i, j
    cdef double dx1, dy1, dx2, dy2, ax1, ay1, ax2, ay2
    cdef double area_d, area_a, iw, ih, inter, v, c
    cdef double best_iou, best_cov

    for i in range(n):
        dx1 = det[i, 0]
        dy1 = det[i, 1]
        dx2 = det[i, 2]
        dy2 = det[i, 3]
        area_d = (dx2 - dx1) * (dy2 - dy1)
        best_iou = 0.0
        best_cov = 0.0
        for j in range(m):
            ax1 = ann[j, 0]
            ay1 = ann[j, 1]
            ax2 = ann[j, 2]
            ay2 = ann[j, 3]
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
        oi[i] = best_iou
        oc[i] = best_cov
    return out_iou, out_cov
