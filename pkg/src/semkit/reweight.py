"""Per-example loss multipliers derived from pre-tune target distance.

Each item gets weight 1 + gamma * (1 - sin(pi * d)), so examples whose old
answer sits very close to or very far from the target are emphasized while
mid-distance examples keep the plain loss. The training loop itself is
external; it just multiplies each example's loss by ``weight``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .embed_io import EmbeddingTable, KnowledgeItem
from .errors import DistanceOutOfRange, InvalidConfig, LengthMismatch
from .semantics import AnswerPair, reweight_lambda, target_distance


@dataclass
class WeightRecord:
    item_id: str
    distance: float
    lambda_value: float
    weight: float
    gamma: float

    def to_json_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "distance": self.distance,
            "lambda_value": self.lambda_value,
            "weight": self.weight,
            "gamma": self.gamma,
        }


def emit_weights(
    items: list[KnowledgeItem], table: EmbeddingTable, gamma: float = 1.0
) -> list[WeightRecord]:
    """One weight record per item, in input order."""
    if gamma < 0:
        raise InvalidConfig(f"gamma must be >= 0, got {gamma}")

    distances = [
        (item.id, target_distance(item, table, AnswerPair.OLD_VS_TARGET))
        for item in items
    ]
    out_of_range = [(i, d) for i, d in distances if d > 1.0]
    if out_of_range:
        listing = ", ".join(f"{i!r} at {d}" for i, d in out_of_range)
        raise DistanceOutOfRange(
            f"re-weighting is defined for distances in [0, 1]; out of range: {listing}"
        )

    records = []
    for item_id, d in distances:
        lam = reweight_lambda(d)
        records.append(
            WeightRecord(
                item_id=item_id,
                distance=d,
                lambda_value=lam,
                weight=1.0 + gamma * lam,
                gamma=gamma,
            )
        )
    return records


def compose_loss(per_example_losses, weights: list[WeightRecord]) -> float:
    """Weighted total loss: sum of weight_i * loss_i, stably accumulated."""
    losses = list(per_example_losses)
    if len(losses) != len(weights):
        raise LengthMismatch(
            f"{len(losses)} losses vs {len(weights)} weight records"
        )
    return math.fsum(w.weight * l for w, l in zip(weights, losses))
