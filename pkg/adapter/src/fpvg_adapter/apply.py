"""Turning an object-index manifest into a model-ready feature matrix."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .feature_store import FeatureStore

POLICIES = ("zero_pad", "compact")


def apply_manifest(
    store: FeatureStore,
    image_id: str,
    object_indices: Sequence[int],
    policy: str = "zero_pad",
) -> np.ndarray:
    """Select the manifest's rows from the image's feature matrix.

    zero_pad keeps the matrix shape and zeroes the excluded rows (the
    usual way to respect a model's fixed size expectations); compact
    returns only the kept rows in their original order.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    matrix = store.load(image_id)
    n_rows = matrix.shape[0]
    kept = list(object_indices)
    for idx in kept:
        if not 0 <= idx < n_rows:
            raise IndexError(
                f"manifest index {idx} out of range for image {image_id!r} "
                f"with {n_rows} objects"
            )
    if policy == "compact":
        return matrix[kept] if kept else matrix[:0]
    out = np.zeros_like(matrix)
    if kept:
        out[kept] = matrix[kept]
    return out
