"""Shared fixture builders.

Distances in most fixtures are planted as exact rationals: an answer vector
with integer coordinates, first coordinate p and Euclidean norm exactly q,
has cosine similarity p/q against the first basis vector, so the computed
distance is the correctly rounded float of 1 - p/q with no accumulation
noise. Any |p| <= q is reachable because q^2 - p^2 decomposes into at most
four squares.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from semkit.embed_io import EmbeddingRecord, EmbeddingTable, KnowledgeItem

DIM = 5
BASIS = [1, 0, 0, 0, 0]


def four_square(n: int) -> tuple[int, int, int, int]:
    """Decompose n >= 0 into a sum of four integer squares."""
    for a in range(math.isqrt(n), -1, -1):
        r1 = n - a * a
        for b in range(math.isqrt(r1), -1, -1):
            r2 = r1 - b * b
            c = math.isqrt(r2)
            d = math.isqrt(r2 - c * c)
            if c * c + d * d == r2:
                return (a, b, c, d)
    raise AssertionError(f"no decomposition for {n}")


def sim_vector(sim: Fraction) -> list[int]:
    """Integer vector whose cosine similarity with BASIS is exactly sim."""
    p, q = sim.numerator, sim.denominator
    assert abs(p) <= q
    return [p, *four_square(q * q - p * p)]


def planted_distance(sim: Fraction) -> float:
    """The float distance the library will compute for sim_vector(sim)."""
    return 1.0 - sim.numerator / sim.denominator


def make_item(item_id: str, **kwargs) -> KnowledgeItem:
    defaults = dict(
        prompt=f"prompt {item_id}", target="right answer", old="wrong answer"
    )
    defaults.update(kwargs)
    return KnowledgeItem(id=item_id, **defaults)


def build_table(entries: dict[str, object], dim: int = DIM) -> EmbeddingTable:
    """entries maps record key to a Fraction (similarity vs. target), a
    vector, or a T x d matrix."""
    arrays = {}
    for key, value in entries.items():
        if isinstance(value, Fraction):
            arrays[key] = [sim_vector(value)]
        else:
            arrays[key] = value
    return EmbeddingTable.from_arrays(dim, arrays)


def planted_dataset(
    specs: list[tuple[str, Fraction, Fraction | None]],
    accurate: set[str] = frozenset(),
) -> tuple[list[KnowledgeItem], EmbeddingTable]:
    """Items with planted old (and optionally new) target distances.

    specs: (item_id, sim_old, sim_new or None). Items in ``accurate`` get
    new == target so they score as exact matches.
    """
    items = []
    entries: dict[str, object] = {}
    for item_id, sim_old, sim_new in specs:
        new = "right answer" if item_id in accurate else "some other answer"
        items.append(
            make_item(item_id, new=new if sim_new is not None else None)
        )
        entries[f"{item_id}#target"] = [BASIS]
        entries[f"{item_id}#old"] = sim_old
        if sim_new is not None:
            entries[f"{item_id}#new"] = sim_new
    return items, build_table(entries)


def twelve_item_fixture() -> tuple[list[KnowledgeItem], EmbeddingTable, dict]:
    """Hand-built 12-item dataset with every aggregate known in advance.

    Per-item plan (sim_old, sim_new as fractions; match = new equals target):

        i01  3/5 -> 4/5   no match   rd ~ -1/2
        i02  1/2 -> 1/4   no match   deviated, rd = 1/2
        i03  1/1 -> 1/1   match      good case, rd absent
        i04  1/1 -> 0/1   no match   deviated, dist_old = 0 so rd absent
        i05  4/5 -> 4/5   match      bad case anyway (dist_new > 0), rd = 0
        i06  3/5 -> 1/5   no match   deviated, rd ~ 1
        i07  1/5 -> 3/5   match      rd ~ -1/2
        i08 -1/2 -> 1/2   no match   rd = -2/3
        i09  1/2 -> 3/4   match      rd = -1/2
        i10  1/4 -> 1/8   no match   deviated, rd = 1/6
        i11  1/1 -> 1/1   match      good case, rd absent
        i12  2/5 -> 1/5   no match   deviated, rd ~ 1/3

    Accuracy 5/12; deviated 5/12 overall, 5/10 within bad cases.
    Rephrases: 9 pairs, 6 matching (2/3). Probes: 7, 4 consistent (4/7).
    """
    from semkit.embed_io import LocalityProbe, Rephrase

    sims = {
        "i01": (Fraction(3, 5), Fraction(4, 5)),
        "i02": (Fraction(1, 2), Fraction(1, 4)),
        "i03": (Fraction(1, 1), Fraction(1, 1)),
        "i04": (Fraction(1, 1), Fraction(0, 1)),
        "i05": (Fraction(4, 5), Fraction(4, 5)),
        "i06": (Fraction(3, 5), Fraction(1, 5)),
        "i07": (Fraction(1, 5), Fraction(3, 5)),
        "i08": (Fraction(-1, 2), Fraction(1, 2)),
        "i09": (Fraction(1, 2), Fraction(3, 4)),
        "i10": (Fraction(1, 4), Fraction(1, 8)),
        "i11": (Fraction(1, 1), Fraction(1, 1)),
        "i12": (Fraction(2, 5), Fraction(1, 5)),
    }
    matches = {"i03", "i05", "i07", "i09", "i11"}

    def hit(n):  # rephrase/probe helpers
        return Rephrase(prompt=f"r{n}", answer="right answer")

    def miss(n):
        return Rephrase(prompt=f"r{n}", answer="wrong")

    def probe(n, consistent):
        return LocalityProbe(
            prompt=f"q{n}",
            old_answer="stable answer",
            new_answer="stable  answer" if consistent else "drifted",
        )

    extras: dict[str, dict] = {
        "i01": {"rephrases": [hit(1), hit(2), hit(3)]},
        "i02": {"rephrases": [miss(1), miss(2)]},
        "i03": {"locality_probes": [probe(1, True), probe(2, True), probe(3, False)]},
        "i05": {"rephrases": [hit(1), miss(2)]},
        "i06": {"locality_probes": [probe(1, True), probe(2, False)]},
        "i08": {"rephrases": [hit(1), hit(2)]},
        "i12": {"locality_probes": [probe(1, True), probe(2, False)]},
    }

    items = []
    entries: dict[str, object] = {}
    for item_id, (sim_old, sim_new) in sims.items():
        items.append(
            make_item(
                item_id,
                new="right answer" if item_id in matches else "some other answer",
                **extras.get(item_id, {}),
            )
        )
        entries[f"{item_id}#target"] = [BASIS]
        entries[f"{item_id}#old"] = sim_old
        entries[f"{item_id}#new"] = sim_new

    dist = {
        item_id: (planted_distance(s_old), planted_distance(s_new))
        for item_id, (s_old, s_new) in sims.items()
    }
    expected_rds = [
        (dn - do) / do for do, dn in (dist[i] for i in sims) if do != 0.0
    ]
    expected = {
        "accuracy": 5 / 12,
        "generality": 6 / 9,
        "locality": 4 / 7,
        "n_items": 12,
        "n_rephrases": 9,
        "n_probes": 7,
        "proportion_all": 5 / 12,
        "proportion_bad_cases": 5 / 10,
        "n_bad_cases": 10,
        "mean_rd": math.fsum(expected_rds) / len(expected_rds),
        "n_with_rd": len(expected_rds),
        "distances": dist,
    }
    return items, build_table(entries), expected


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
