"""Dataset-level evaluation: answer scoring, deviation diagnostics, and
distance-binned reports.

String comparison is exact match after Unicode NFC normalization, trimming,
and collapsing internal whitespace runs; casing is preserved because answer
casing is meaningful for proper nouns.
"""

from __future__ import annotations

import math
import unicodedata
from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum

from .embed_io import EmbeddingTable, KnowledgeItem
from .errors import InvalidBinWidth, MissingNewAnswer
from .semantics import AnswerPair, target_distance


def _normalize(s: str) -> str:
    return " ".join(unicodedata.normalize("NFC", s).split())


def exact_match(predicted: str, target: str) -> bool:
    """Whitespace- and NFC-normalized, case-sensitive string equality."""
    return _normalize(predicted) == _normalize(target)


def relative_deviation(dist_new: float, dist_old: float) -> float | None:
    """(dist_new - dist_old) / dist_old; None when dist_old is zero."""
    if dist_old == 0.0:
        return None
    return (dist_new - dist_old) / dist_old


# --- scoring -------------------------------------------------------------------

@dataclass
class ScoreReport:
    """Accuracy over items plus optional generality/locality over probe pools."""

    accuracy: float
    generality: float | None
    locality: float | None
    n_items: int
    n_rephrases: int
    n_probes: int

    def to_json_dict(self) -> dict:
        obj: dict = {"accuracy": self.accuracy}
        if self.generality is not None:
            obj["generality"] = self.generality
        if self.locality is not None:
            obj["locality"] = self.locality
        obj.update(
            n_items=self.n_items, n_rephrases=self.n_rephrases, n_probes=self.n_probes
        )
        return obj


def _require_new(items: list[KnowledgeItem]) -> None:
    missing = [i.id for i in items if i.new is None]
    if missing:
        raise MissingNewAnswer(missing)


def score_dataset(items: list[KnowledgeItem]) -> ScoreReport:
    """Fraction of items whose post-tune answer matches the target, plus
    rephrase (vs. target) and locality (new vs. old answer) match rates."""
    _require_new(items)
    n_items = len(items)
    accuracy_hits = sum(exact_match(i.new, i.target) for i in items)

    rephrase_hits = 0
    n_rephrases = 0
    probe_hits = 0
    n_probes = 0
    for item in items:
        for r in item.rephrases:
            n_rephrases += 1
            rephrase_hits += exact_match(r.answer, item.target)
        for p in item.locality_probes:
            n_probes += 1
            probe_hits += exact_match(p.new_answer, p.old_answer)

    return ScoreReport(
        accuracy=accuracy_hits / n_items if n_items else 0.0,
        generality=rephrase_hits / n_rephrases if n_rephrases else None,
        locality=probe_hits / n_probes if n_probes else None,
        n_items=n_items,
        n_rephrases=n_rephrases,
        n_probes=n_probes,
    )


# --- deviation analysis ----------------------------------------------------------

@dataclass
class DeviationRecord:
    """Per-item distances before/after tuning and the derived deviation flags.

    An item is a bad case when its answer is not an exact match or its
    post-tune distance is nonzero; ``rd`` is absent when dist_old is zero.
    """

    item_id: str
    dist_old_target: float
    dist_new_target: float
    deviated: bool
    rd: float | None
    is_bad_case: bool

    def to_json_dict(self) -> dict:
        obj: dict = {
            "item_id": self.item_id,
            "dist_old_target": self.dist_old_target,
            "dist_new_target": self.dist_new_target,
            "deviated": self.deviated,
        }
        if self.rd is not None:
            obj["rd"] = self.rd
        obj["is_bad_case"] = self.is_bad_case
        return obj


@dataclass
class DeviationSummary:
    proportion_all: float
    proportion_bad_cases: float | None
    mean_rd: float | None
    n_items: int
    n_deviated: int
    n_bad_cases: int

    def to_json_dict(self) -> dict:
        obj: dict = {"proportion_all": self.proportion_all}
        if self.proportion_bad_cases is not None:
            obj["proportion_bad_cases"] = self.proportion_bad_cases
        if self.mean_rd is not None:
            obj["mean_rd"] = self.mean_rd
        obj.update(
            n_items=self.n_items,
            n_deviated=self.n_deviated,
            n_bad_cases=self.n_bad_cases,
        )
        return obj


def deviation_record(item: KnowledgeItem, table: EmbeddingTable) -> DeviationRecord:
    dist_old = target_distance(item, table, AnswerPair.OLD_VS_TARGET)
    dist_new = target_distance(item, table, AnswerPair.NEW_VS_TARGET)
    return DeviationRecord(
        item_id=item.id,
        dist_old_target=dist_old,
        dist_new_target=dist_new,
        deviated=dist_new > dist_old,
        rd=relative_deviation(dist_new, dist_old),
        is_bad_case=(not exact_match(item.new, item.target)) or dist_new > 0.0,
    )


def deviation_analysis(
    items: list[KnowledgeItem], table: EmbeddingTable
) -> tuple[list[DeviationRecord], DeviationSummary]:
    """Per-item deviation records plus aggregate proportions and mean RD."""
    _require_new(items)
    records = [deviation_record(item, table) for item in items]

    n_deviated = sum(r.deviated for r in records)
    bad = [r for r in records if r.is_bad_case]
    rds = [r.rd for r in records if r.rd is not None]
    summary = DeviationSummary(
        proportion_all=n_deviated / len(records) if records else 0.0,
        proportion_bad_cases=(
            sum(r.deviated for r in bad) / len(bad) if bad else None
        ),
        mean_rd=math.fsum(rds) / len(rds) if rds else None,
        n_items=len(records),
        n_deviated=n_deviated,
        n_bad_cases=len(bad),
    )
    return records, summary


# --- binned reports ---------------------------------------------------------------

class BinStat(Enum):
    ACCURACY = "accuracy"
    DEVIATION = "deviation"


ALL_STATS = frozenset(BinStat)


@dataclass
class Bin:
    lo: float
    hi: float
    n_items: int = 0
    accuracy: float | None = None
    deviation_proportion: float | None = None
    mean_rd: float | None = None

    def to_json_dict(self) -> dict:
        obj: dict = {"lo": self.lo, "hi": self.hi, "n_items": self.n_items}
        for key in ("accuracy", "deviation_proportion", "mean_rd"):
            value = getattr(self, key)
            if value is not None:
                obj[key] = value
        return obj


@dataclass
class BinnedReport:
    """Per-bin statistics over items grouped by pre-tune target distance.

    Bins partition [0, 2], left-closed right-open except the final bin,
    which also includes its upper edge.
    """

    bin_width: float
    bins: list[Bin] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "bin_width": self.bin_width,
            "bins": [b.to_json_dict() for b in self.bins],
        }


def binned_report(
    items: list[KnowledgeItem],
    table: EmbeddingTable,
    bin_width: float = 0.05,
    stat_set: frozenset[BinStat] = ALL_STATS,
) -> BinnedReport:
    """Group items by dist(old, target) and report per-bin statistics."""
    if not (0.0 < bin_width <= 1.0):
        raise InvalidBinWidth(f"bin width must be in (0, 1], got {bin_width!r}")
    if not stat_set:
        raise ValueError("stat_set must request at least one statistic")

    n_bins = math.ceil(2.0 / bin_width)
    edges = [i * bin_width for i in range(n_bins)]
    bins = [
        Bin(lo=edges[i], hi=(edges[i + 1] if i + 1 < n_bins else 2.0))
        for i in range(n_bins)
    ]

    # both statistics compare against the post-tune answer
    _require_new(items)

    grouped: list[list[KnowledgeItem]] = [[] for _ in range(n_bins)]
    for item in items:
        dist_old = target_distance(item, table, AnswerPair.OLD_VS_TARGET)
        idx = min(bisect_right(edges, dist_old) - 1, n_bins - 1)
        grouped[idx].append(item)

    for b, members in zip(bins, grouped):
        b.n_items = len(members)
        if not members:
            continue
        if BinStat.ACCURACY in stat_set:
            b.accuracy = sum(exact_match(i.new, i.target) for i in members) / len(members)
        if BinStat.DEVIATION in stat_set:
            records = [deviation_record(i, table) for i in members]
            b.deviation_proportion = sum(r.deviated for r in records) / len(records)
            rds = [r.rd for r in records if r.rd is not None]
            if rds:
                b.mean_rd = math.fsum(rds) / len(rds)
    return BinnedReport(bin_width=bin_width, bins=bins)
