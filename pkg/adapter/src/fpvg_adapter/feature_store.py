"""Per-image object feature storage.

Layout: one directory holding an ``index.json`` mapping
``image_id -> {"file", "rows", "dim"}`` plus one row-major float32
binary file per image. Row index equals the detection index of the
image, so a manifest's object indices select rows directly. The format
is deliberately trivial so any training stack can dump into it; see the
README for converter recipes from common feature archives.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

INDEX_FILENAME = "index.json"


class StoreError(Exception):
    """Feature store inconsistency or lookup failure."""


@dataclass
class FeatureStore:
    root: Path
    index: dict[str, dict]

    @classmethod
    def open(cls, root: str | Path) -> "FeatureStore":
        root = Path(root)
        index_path = root / INDEX_FILENAME
        if not index_path.exists():
            raise StoreError(f"no {INDEX_FILENAME} in {root}")
        with open(index_path, "r", encoding="utf-8") as handle:
            index = json.load(handle)
        return cls(root, index)

    def __contains__(self, image_id: str) -> bool:
        return image_id in self.index

    def rows(self, image_id: str) -> int:
        return self._entry(image_id)["rows"]

    def _entry(self, image_id: str) -> dict:
        entry = self.index.get(image_id)
        if entry is None:
            raise StoreError(f"feature store has no image {image_id!r}")
        return entry

    def load(self, image_id: str) -> np.ndarray:
        """Feature matrix of shape (rows, dim), float32."""
        entry = self._entry(image_id)
        path = self.root / entry["file"]
        data = np.fromfile(path, dtype=np.float32)
        rows, dim = entry["rows"], entry["dim"]
        if data.size != rows * dim:
            raise StoreError(
                f"{path} holds {data.size} floats, expected {rows}x{dim} for {image_id!r}"
            )
        return data.reshape(rows, dim)


class FeatureStoreWriter:
    """Writes the per-image binaries and the index in one pass."""

    def __init__(self, root: str | Path, dim: int):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.dim = dim
        self._index: dict[str, dict] = {}

    def add(self, image_id: str, features: np.ndarray) -> None:
        if image_id in self._index:
            raise StoreError(f"duplicate image {image_id!r}")
        matrix = np.ascontiguousarray(features, dtype=np.float32)
        if matrix.ndim != 2 or matrix.shape[1] != self.dim:
            raise StoreError(
                f"features for {image_id!r} must be (rows, {self.dim}), got {matrix.shape}"
            )
        filename = f"{image_id}.bin"
        matrix.tofile(self.root / filename)
        self._index[image_id] = {
            "file": filename,
            "rows": int(matrix.shape[0]),
            "dim": self.dim,
        }

    def close(self) -> FeatureStore:
        index = {k: self._index[k] for k in sorted(self._index)}
        with open(self.root / INDEX_FILENAME, "w", encoding="utf-8") as handle:
            json.dump(index, handle, indent=2, sort_keys=True)
            handle.write("\n")
        return FeatureStore(self.root, index)


def build_store_from_detections(
    detections_path: str | Path, out_dir: str | Path, dim: int = 64, seed: int = 5
) -> FeatureStore:
    """Synthesize a store matching a detections.jsonl file's row counts.

    Each row encodes its box coordinates (scaled) in the leading columns
    plus seeded noise, which is enough to drive the toy model. Real
    deployments replace this with a converter from their own feature
    archive (see README).
    """
    writer = FeatureStoreWriter(out_dir, dim)
    with open(detections_path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            image_id = row["image_id"]
            boxes = row["boxes"]
            rng = _image_rng(seed, image_id)
            matrix = rng.normal(0.0, 0.1, size=(len(boxes), dim)).astype(np.float32)
            for i, box in enumerate(boxes):
                coords = np.asarray(box, dtype=np.float32) / 1000.0
                matrix[i, : min(4, dim)] = coords[: min(4, dim)]
            writer.add(image_id, matrix)
    return writer.close()


def _image_rng(seed: int, image_id: str) -> np.random.Generator:
    # stable across processes: derive the stream from the full image id
    digest = hashlib.sha256(image_id.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "big") for i in range(0, 16, 4)]
    return np.random.default_rng([seed, *words])
