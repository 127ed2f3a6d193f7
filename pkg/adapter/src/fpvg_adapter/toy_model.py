"""A tiny deterministic answerer for exercising the export path.

Sum-pools the object features and scores a fixed answer vocabulary with
a seeded linear layer plus a per-question offset. Sum pooling makes the
model invariant both to row order and to zeroed-out rows, so the
zero_pad and compact manifest policies provoke bit-identical outputs,
which the round-trip tests rely on.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np

DEFAULT_VOCAB_SIZE = 12


def sum_pool(features: np.ndarray) -> np.ndarray:
    """Column sums via exact (correctly rounded) summation.

    fsum makes the pool independent of row order and of interleaved
    zero rows down to the last bit, which is what lets zero-padded and
    compacted inputs produce identical outputs.
    """
    if features.shape[0] == 0:
        return np.zeros(features.shape[1])
    cols = features.astype(np.float64)
    return np.array([math.fsum(cols[:, d]) for d in range(cols.shape[1])])


class ToyLinearSoftmaxModel:
    def __init__(self, feature_dim: int, vocab_size: int = DEFAULT_VOCAB_SIZE, seed: int = 5):
        self.vocab = tuple(f"tok{i:02d}" for i in range(vocab_size))
        self.seed = seed
        rng = np.random.default_rng([seed, feature_dim, vocab_size])
        self.weights = rng.normal(0.0, 1.0, size=(vocab_size, feature_dim))
        self.bias = rng.normal(0.0, 0.1, size=vocab_size)

    def _question_offset(self, question_id: str) -> np.ndarray:
        digest = hashlib.sha256(f"{self.seed}|{question_id}".encode("utf-8")).digest()
        words = [int.from_bytes(digest[i : i + 4], "big") for i in range(0, 16, 4)]
        rng = np.random.default_rng(words)
        return rng.normal(0.0, 1.0, size=len(self.vocab))

    def __call__(self, question_id: str, features: np.ndarray) -> tuple[str, dict[str, float]]:
        pooled = sum_pool(features)
        logits = self.weights @ pooled + self.bias + self._question_offset(question_id)
        logits -= logits.max()
        exp = np.exp(logits)
        probs = exp / exp.sum()
        distribution = {tok: float(p) for tok, p in zip(self.vocab, probs)}
        answer = self.vocab[int(np.argmax(probs))]
        return answer, distribution
