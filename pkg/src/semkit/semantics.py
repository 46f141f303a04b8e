"""Semantic distance between answer strings via their token embeddings.

A string's embedding is the arithmetic mean of its token vectors; the
distance between two strings is one minus the cosine similarity of those
pooled vectors, so it lives in [0, 2]. All accumulation runs in float64
even though interchange files store float32.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .embed_io import EmbeddingTable, KnowledgeItem, answer_key
from .errors import (
    DistanceOutOfRange,
    EmptyMatrix,
    MissingNewAnswer,
    ZeroNormVector,
)


class AnswerPair(Enum):
    """Which pair of answers a distance compares against the target."""

    OLD_VS_TARGET = "old"
    NEW_VS_TARGET = "new"


def mean_pool(tokens) -> np.ndarray:
    """Coordinate-wise mean over the token rows of a T x d matrix."""
    arr = np.asarray(tokens, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise EmptyMatrix(f"expected a T x d matrix with T >= 1, got shape {arr.shape}")
    return arr.mean(axis=0)


def cosine_distance(a, b) -> float:
    """1 - cos(a, b), clamped into [0, 2] to absorb rounding."""
    va = np.asarray(a, dtype=np.float64).ravel()
    vb = np.asarray(b, dtype=np.float64).ravel()
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0:
        raise ZeroNormVector("first vector has zero Euclidean norm")
    if nb == 0.0:
        raise ZeroNormVector("second vector has zero Euclidean norm")
    sim = float(va @ vb) / (na * nb)
    return min(2.0, max(0.0, 1.0 - sim))


def target_distance(
    item: KnowledgeItem, table: EmbeddingTable, which: AnswerPair
) -> float:
    """Distance between the selected answer's pooled embedding and the target's."""
    if which is AnswerPair.NEW_VS_TARGET and item.new is None:
        raise MissingNewAnswer([item.id])
    key_a = answer_key(item.id, which.value)
    key_b = answer_key(item.id, "target")
    pooled_a = mean_pool(table.tokens(key_a))
    pooled_b = mean_pool(table.tokens(key_b))
    try:
        return cosine_distance(pooled_a, pooled_b)
    except ZeroNormVector as e:
        key = key_a if "first" in str(e) else key_b
        raise ZeroNormVector(f"pooled embedding {key!r} has zero norm") from e


def reweight_lambda(d: float) -> float:
    """Loss re-weighting coefficient: 1 - sin(pi * d) for d in [0, 1].

    Equals 1 at both endpoints and 0 at d = 0.5, where the re-weighted loss
    reduces to the plain loss. Inputs outside [0, 1] are rejected rather
    than extrapolated.
    """
    if not (0.0 <= d <= 1.0):
        raise DistanceOutOfRange(f"distance {d!r} outside [0, 1]")
    return 1.0 - math.sin(math.pi * d)
