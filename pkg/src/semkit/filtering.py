"""Greedy curation of a fine-tuning working set against a candidate pool.

The optimizer minimizes mean(distances) - lambda * dispersion(distances)
over the working set's pre-tune target distances, subject to a strict
window on the mean. Each step swaps one working item for one pool item:
all (removal, addition) pairs are scanned and the feasible pair with the
lowest resulting objective is taken, so every accepted swap is a per-step
optimum. Ties break on the lexicographically smallest (removed id,
added id). Removed items never re-enter the pool.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .embed_io import EmbeddingTable, KnowledgeItem
from .errors import DuplicateId, EmptySet, InvalidConfig
from .semantics import AnswerPair, target_distance


class Dispersion(Enum):
    VARIANCE = "variance"
    STDDEV = "stddev"


class StopReason(Enum):
    NO_IMPROVING_SWAP = "NoImprovingSwap"
    CONSTRAINT_INFEASIBLE = "ConstraintInfeasible"


@dataclass
class FilterConfig:
    """Objective weights, mean window, and step budget for the optimizer."""

    lambda_weight: float = 1.0
    mean_min: float = 0.2
    mean_max: float = 0.8
    replace_fraction: float = 0.6
    dispersion: Dispersion = Dispersion.VARIANCE
    seed: int = 0

    def validate(self) -> None:
        if self.lambda_weight < 0:
            raise InvalidConfig(f"lambda_weight must be >= 0, got {self.lambda_weight}")
        if not (0.0 <= self.mean_min < self.mean_max <= 2.0):
            raise InvalidConfig(
                f"need 0 <= mean_min < mean_max <= 2, got ({self.mean_min}, {self.mean_max})"
            )
        if not (0.0 <= self.replace_fraction <= 1.0):
            raise InvalidConfig(
                f"replace_fraction must be in [0, 1], got {self.replace_fraction}"
            )
        if not isinstance(self.dispersion, Dispersion):
            raise InvalidConfig(f"unknown dispersion mode {self.dispersion!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InvalidConfig(f"seed must be a non-negative integer, got {self.seed!r}")

    def to_json_dict(self) -> dict:
        return {
            "lambda_weight": self.lambda_weight,
            "mean_min": self.mean_min,
            "mean_max": self.mean_max,
            "replace_fraction": self.replace_fraction,
            "dispersion": self.dispersion.value,
            "seed": self.seed,
        }


@dataclass
class Swap:
    removed_id: str
    added_id: str
    objective_before: float
    objective_after: float

    def to_json_dict(self) -> dict:
        return {
            "removed_id": self.removed_id,
            "added_id": self.added_id,
            "objective_before": self.objective_before,
            "objective_after": self.objective_after,
        }


@dataclass
class FilterResult:
    final_set: list[str]
    swaps: list[Swap] = field(default_factory=list)
    objective_trace: list[float] = field(default_factory=list)
    stopped_early: bool = False
    stop_reason: StopReason | None = None

    def to_json_dict(self) -> dict:
        obj: dict = {
            "final_set": list(self.final_set),
            "swaps": [s.to_json_dict() for s in self.swaps],
            "objective_trace": list(self.objective_trace),
            "stopped_early": self.stopped_early,
        }
        if self.stop_reason is not None:
            obj["stop_reason"] = self.stop_reason.value
        return obj


def objective(distances, cfg: FilterConfig) -> float:
    """mean - lambda * dispersion over a non-empty list of distances."""
    arr = np.asarray(distances, dtype=np.float64)
    if arr.size == 0:
        raise EmptySet("objective of an empty set is undefined")
    mean = float(arr.mean())
    var = float(np.mean((arr - mean) ** 2))
    disp = math.sqrt(var) if cfg.dispersion is Dispersion.STDDEV else var
    return mean - cfg.lambda_weight * disp


def target_distances(
    items: list[KnowledgeItem], table: EmbeddingTable
) -> dict[str, float]:
    """Pre-tune target distance for every item, keyed by item id."""
    out: dict[str, float] = {}
    for item in items:
        if item.id in out:
            raise DuplicateId(f"duplicate item id {item.id!r}")
        out[item.id] = target_distance(item, table, AnswerPair.OLD_VS_TARGET)
    return out


def _check_inputs(
    working: list[KnowledgeItem], pool: list[KnowledgeItem], cfg: FilterConfig
) -> None:
    cfg.validate()
    if not working:
        raise EmptySet("working set is empty")
    overlap = {i.id for i in working} & {i.id for i in pool}
    if overlap:
        raise InvalidConfig(
            f"working set and pool share ids: {sorted(overlap)[:5]}"
        )


def _swap_budget(n: int, replace_fraction: float) -> int:
    return math.ceil(replace_fraction * n)


def greedy_filter(
    working: list[KnowledgeItem],
    pool: list[KnowledgeItem],
    table: EmbeddingTable,
    cfg: FilterConfig,
) -> FilterResult:
    """Iteratively swap working items for pool items to minimize the objective.

    Runs ceil(replace_fraction * |working|) steps unless no feasible swap
    remains (ConstraintInfeasible) or no swap strictly improves the
    objective (NoImprovingSwap). Every accepted set satisfies
    mean_min < mean < mean_max.
    """
    _check_inputs(working, pool, cfg)
    dist = target_distances(working, table)
    dist.update(target_distances(pool, table))

    current = [item.id for item in working]
    pool_ids = sorted(item.id for item in pool)
    n = len(current)
    lam = cfg.lambda_weight
    use_std = cfg.dispersion is Dispersion.STDDEV

    def set_objective(ids: list[str]) -> float:
        return objective([dist[i] for i in ids], cfg)

    result = FilterResult(final_set=current)
    result.objective_trace.append(set_objective(current))

    for _ in range(_swap_budget(n, cfg.replace_fraction)):
        if not pool_ids:
            result.stopped_early = True
            result.stop_reason = StopReason.NO_IMPROVING_SWAP
            break

        cur_sorted = sorted(current)
        dr = np.array([dist[i] for i in cur_sorted], dtype=np.float64)
        da = np.array([dist[i] for i in pool_ids], dtype=np.float64)
        s1 = float(dr.sum())
        s2 = float((dr * dr).sum())

        # objective of every candidate set reachable by one swap
        s1p = s1 - dr[:, None] + da[None, :]
        s2p = s2 - (dr * dr)[:, None] + (da * da)[None, :]
        mu = s1p / n
        var = np.maximum(s2p / n - mu * mu, 0.0)
        obj = mu - lam * (np.sqrt(var) if use_std else var)

        feasible = (mu > cfg.mean_min) & (mu < cfg.mean_max)
        if not feasible.any():
            result.stopped_early = True
            result.stop_reason = StopReason.CONSTRAINT_INFEASIBLE
            break

        # argmin over row-major (removal, addition) order: both axes are
        # id-sorted, so the first minimum is the lexicographic tie-break
        flat = int(np.argmin(np.where(feasible, obj, np.inf)))
        removed_id = cur_sorted[flat // len(pool_ids)]
        added_id = pool_ids[flat % len(pool_ids)]

        candidate = [added_id if i == removed_id else i for i in current]
        objective_before = result.objective_trace[-1]
        objective_after = set_objective(candidate)
        if not objective_after < objective_before:
            result.stopped_early = True
            result.stop_reason = StopReason.NO_IMPROVING_SWAP
            break

        current = candidate
        pool_ids.remove(added_id)
        result.swaps.append(
            Swap(removed_id, added_id, objective_before, objective_after)
        )
        result.objective_trace.append(objective_after)

    result.final_set = current
    return result


def random_baseline(
    working: list[KnowledgeItem],
    pool: list[KnowledgeItem],
    table: EmbeddingTable,
    cfg: FilterConfig,
) -> FilterResult:
    """Replace the same number of items uniformly at random, for comparison.

    Seeded and deterministic; no objective or mean-window condition is
    applied, so the trace simply records what random replacement does.
    """
    _check_inputs(working, pool, cfg)
    dist = target_distances(working, table)
    dist.update(target_distances(pool, table))

    current = [item.id for item in working]
    budget = _swap_budget(len(current), cfg.replace_fraction)
    k = min(budget, len(pool))

    rng = random.Random(cfg.seed)
    removals = rng.sample(sorted(current), k)
    additions = rng.sample(sorted(item.id for item in pool), k)

    def set_objective(ids: list[str]) -> float:
        return objective([dist[i] for i in ids], cfg)

    result = FilterResult(final_set=current)
    result.objective_trace.append(set_objective(current))
    for removed_id, added_id in zip(removals, additions):
        objective_before = result.objective_trace[-1]
        current = [added_id if i == removed_id else i for i in current]
        objective_after = set_objective(current)
        result.swaps.append(
            Swap(removed_id, added_id, objective_before, objective_after)
        )
        result.objective_trace.append(objective_after)

    if k < budget:
        result.stopped_early = True
        result.stop_reason = StopReason.NO_IMPROVING_SWAP
    result.final_set = current
    return result
