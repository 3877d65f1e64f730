"""Seeded random instances from GS-by-construction families."""
from __future__ import annotations

import random
from fractions import Fraction

from .errors import DomainError
from .model import Instance, PiecewisePrice
from .valuations import OXS, Additive, MatroidRank, PartitionMatroid, UnitDemand

FAMILIES = ("additive", "unit_demand", "matroid_rank", "oxs")
SLOPES = (Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2), Fraction(3))


def random_valuation(rng: random.Random, family: str, m: int, top: int = 10):
    items = list(range(m))
    if family == "additive":
        return Additive({j: rng.randint(1, top) for j in items})
    if family == "unit_demand":
        return UnitDemand({j: rng.randint(1, top) for j in items})
    if family == "matroid_rank":
        order = items[:]
        rng.shuffle(order)
        nblocks = rng.randint(1, m)
        cuts = sorted(rng.sample(range(1, m), nblocks - 1)) if nblocks > 1 else []
        blocks = [order[a:b] for a, b in zip([0] + cuts, cuts + [m])]
        limits = [rng.randint(1, len(b)) for b in blocks]
        weights = {j: rng.randint(1, top) for j in items}
        return MatroidRank(PartitionMatroid(blocks, limits), weights, rng.randint(1, 2))
    if family == "oxs":
        parts = []
        for _ in range(rng.randint(1, max(1, m))):
            chosen = [j for j in items if rng.random() < 0.7] or [rng.choice(items)]
            parts.append({j: rng.randint(1, top) for j in chosen})
        return OXS(parts)
    raise DomainError(f"unknown family {family!r}")


def random_price_fn(rng: random.Random, segments: int, top: int = 10) -> PiecewisePrice:
    count = rng.randint(1, max(1, segments))
    top = max(top, 2 * count)
    starts = [Fraction(0)] + sorted(Fraction(x) for x in rng.sample(range(1, top + 1), count - 1))
    if count <= len(SLOPES) and rng.random() < 0.5:
        slopes = sorted(rng.sample(SLOPES, count))  # convex
    else:
        slopes = [rng.choice(SLOPES) for _ in range(count)]
    return PiecewisePrice(tuple(zip(starts, slopes)))


def random_instance(family: str, n: int, m: int, caps: int = 1, segments: int = 1, seed: int = 0,
                    mixed: bool = False) -> Instance:
    """n buyers and m items; capacities in 1..caps; up to ``segments`` pieces per price function.

    With ``mixed`` each buyer draws its own family.
    """
    if n < 1 or m < 1 or caps < 1 or segments < 1:
        raise DomainError("sizes must be at least 1")
    rng = random.Random(seed)
    vals = []
    for _ in range(n):
        fam = rng.choice(FAMILIES) if mixed else family
        vals.append(random_valuation(rng, fam, m))
    capacities = [rng.randint(1, caps) for _ in range(m)]
    fns = {(i, j): random_price_fn(rng, segments) for i in range(n) for j in range(m)}
    return Instance(vals, capacities, fns)
