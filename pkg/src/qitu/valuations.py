"""Gross-substitutes valuation families, greedy demand oracles and GS checks.

A valuation is a callable on item sets. Items outside its ground set are
ignored, which is how dummy items end up worth nothing. Values are cached per
bundle since the solver asks for the same bundles over and over.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import CapacityError, DomainError
from .model import IDENTITY, as_rat

ZERO = Fraction(0)


class Valuation:
    family = "abstract"

    def __init__(self, ground: Iterable[int]):
        self.ground = frozenset(int(j) for j in ground)
        self._cache = {}

    def __call__(self, bundle) -> Fraction:
        key = frozenset(bundle) & self.ground
        val = self._cache.get(key)
        if val is None:
            val = self._cache[key] = self._evaluate(key)
        return val

    def _evaluate(self, bundle: frozenset) -> Fraction:
        raise NotImplementedError

    def _key(self):
        raise NotImplementedError

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self._key() == other._key()

    def __hash__(self) -> int:
        return hash((type(self).__name__, self._key()))

    def __repr__(self) -> str:
        return f"{type(self).__name__}{self._key()!r}"


def _weights(weights: Mapping) -> dict:
    return {int(j): as_rat(w) for j, w in dict(weights).items()}


class Additive(Valuation):
    family = "additive"

    def __init__(self, weights: Mapping):
        self.weights = _weights(weights)
        super().__init__(self.weights)

    def _evaluate(self, bundle):
        return sum((self.weights[j] for j in bundle), ZERO)

    def _key(self):
        return tuple(sorted(self.weights.items()))


class UnitDemand(Valuation):
    family = "unit_demand"

    def __init__(self, weights: Mapping):
        self.weights = _weights(weights)
        super().__init__(self.weights)

    def _evaluate(self, bundle):
        return max((self.weights[j] for j in bundle), default=ZERO)

    def _key(self):
        return tuple(sorted(self.weights.items()))


class PartitionMatroid:
    kind = "partition"

    def __init__(self, blocks, limits):
        self.blocks = tuple(tuple(sorted(int(j) for j in b)) for b in blocks)
        self.limits = tuple(int(x) for x in limits)
        if len(self.blocks) != len(self.limits):
            raise DomainError("one limit per block")
        seen = [j for b in self.blocks for j in b]
        if len(seen) != len(set(seen)):
            raise DomainError("partition blocks overlap")
        self._block_of = {j: b for b, block in enumerate(self.blocks) for j in block}

    @property
    def ground(self) -> frozenset:
        return frozenset(self._block_of)

    def is_independent(self, items) -> bool:
        count = [0] * len(self.blocks)
        for j in items:
            b = self._block_of.get(j)
            if b is None:
                return False
            count[b] += 1
            if count[b] > self.limits[b]:
                return False
        return True

    def _key(self):
        return ("partition", self.blocks, self.limits)

    def __eq__(self, other):
        return isinstance(other, PartitionMatroid) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())


class UniformMatroid:
    kind = "uniform"

    def __init__(self, ground, rank):
        self._ground = frozenset(int(j) for j in ground)
        self.rank = int(rank)

    @property
    def ground(self) -> frozenset:
        return self._ground

    def is_independent(self, items) -> bool:
        items = set(items)
        return items <= self._ground and len(items) <= self.rank

    def _key(self):
        return ("uniform", tuple(sorted(self._ground)), self.rank)

    def __eq__(self, other):
        return isinstance(other, UniformMatroid) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())


class MatroidRank(Valuation):
    """scale * (max weight of an independent subset); weights default to 1."""

    family = "weighted_matroid_rank"

    def __init__(self, matroid, weights: Mapping | None = None, scale=1):
        self.matroid = matroid
        self.weights = _weights(weights) if weights is not None else None
        self.scale = as_rat(scale)
        if self.scale <= 0:
            raise DomainError("scale must be positive")
        super().__init__(matroid.ground)

    def weight(self, j: int) -> Fraction:
        return self.weights.get(j, ZERO) if self.weights is not None else Fraction(1)

    def _evaluate(self, bundle):
        chosen, total = [], ZERO
        for j in sorted(bundle, key=lambda j: (-self.weight(j), j)):
            if self.weight(j) > 0 and self.matroid.is_independent(chosen + [j]):
                chosen.append(j)
                total += self.weight(j)
        return self.scale * total

    def _key(self):
        w = tuple(sorted(self.weights.items())) if self.weights is not None else None
        return (self.matroid._key(), w, self.scale)


class OXS(Valuation):
    """Each part is a unit-demand valuation; items are assigned to distinct parts."""

    family = "oxs"

    def __init__(self, parts):
        self.parts = tuple(_weights(p) for p in parts)
        super().__init__(set().union(*self.parts) if self.parts else ())

    def _evaluate(self, bundle):
        # best assignment of items to parts, memoized over (item index, used parts)
        items = sorted(bundle)
        best = {0: ZERO}
        for j in items:
            nxt = dict(best)
            for used, val in best.items():
                for x, part in enumerate(self.parts):
                    if j in part and not used >> x & 1:
                        key = used | 1 << x
                        cand = val + part[j]
                        if key not in nxt or cand > nxt[key]:
                            nxt[key] = cand
            best = nxt
        return max(best.values())

    def _key(self):
        return tuple(tuple(sorted(p.items())) for p in self.parts)


class Table(Valuation):
    """Explicit value table; may be non-GS. Missing bundles are an error except the empty one."""

    family = "table"

    def __init__(self, values: Mapping, ground: Iterable[int] | None = None):
        self.values = {frozenset(int(j) for j in T): as_rat(x) for T, x in dict(values).items()}
        self.values.setdefault(frozenset(), ZERO)
        if ground is None:
            ground = set().union(*self.values)
        super().__init__(ground)

    def _evaluate(self, bundle):
        try:
            return self.values[bundle]
        except KeyError:
            raise DomainError(f"table valuation has no entry for {sorted(bundle)}") from None

    def _key(self):
        return (tuple(sorted((tuple(sorted(T)), x) for T, x in self.values.items())),
                tuple(sorted(self.ground)))


class Capped(Valuation):
    family = "capped"

    def __init__(self, base: Valuation, limit: int, penalty=None):
        self.base = base
        self.limit = int(limit)
        if penalty is None:
            top = max((abs(base({j})) for j in base.ground), default=ZERO)
            penalty = 1 + top * len(base.ground)
        self.penalty = as_rat(penalty)
        super().__init__(base.ground)

    def _evaluate(self, bundle):
        excess = max(0, len(bundle) - self.limit)
        return self.base(bundle) - self.penalty * excess

    def _key(self):
        return (self.base, self.limit, self.penalty)


class Endowed(Valuation):
    """T -> v(T | T0) - sum of costs over T, defined on items outside T0."""

    family = "endowed"

    def __init__(self, base: Valuation, endowment: frozenset, costs: Mapping):
        self.base = base
        self.endowment = frozenset(endowment)
        self.costs = {int(j): as_rat(c) for j, c in costs.items()}
        self._base_value = base(self.endowment)
        super().__init__(set(self.costs) - self.endowment)

    def __call__(self, bundle) -> Fraction:
        bundle = frozenset(bundle)
        if bundle & self.endowment:
            raise DomainError("bundle overlaps the endowment")
        return super().__call__(bundle)

    def _evaluate(self, bundle):
        cost = sum((self.costs[j] for j in bundle), ZERO)
        return self.base(bundle | self.endowment) - self._base_value - cost

    def _key(self):
        return (self.base, tuple(sorted(self.endowment)), tuple(sorted(self.costs.items())))


class Convolution(Valuation):
    family = "convolution"
    MAX_STATES = 1_000_000

    def __init__(self, parts):
        self.parts = tuple(parts)
        if not self.parts:
            raise DomainError("convolution of nothing")
        super().__init__(set().union(*(p.ground for p in self.parts)))
        if len(self.parts) ** len(self.ground) > self.MAX_STATES:
            raise CapacityError("convolution ground set too large for enumeration")

    def _evaluate(self, bundle):
        items = sorted(bundle)
        best = None
        for labels in itertools.product(range(len(self.parts)), repeat=len(items)):
            groups = [[] for _ in self.parts]
            for j, x in zip(items, labels):
                groups[x].append(j)
            val = sum((p(g) for p, g in zip(self.parts, groups)), ZERO)
            if best is None or val > best:
                best = val
        return best

    def _key(self):
        return self.parts


# constructors matching the operation names


def additive(weights) -> Additive:
    return Additive(weights)


def unit_demand(weights) -> UnitDemand:
    return UnitDemand(weights)


def capped(v: Valuation, limit: int, penalty=None) -> Capped:
    return Capped(v, limit, penalty)


def endowed(v: Valuation, T0=frozenset(), prices=None, price_fns=None, buyer=None) -> Endowed:
    """Valuation of extra bundles given endowment T0 at prices p.

    ``price_fns`` is keyed by item, or by (buyer, item) when ``buyer`` is set.
    Without price functions the identity is used; without prices all are 0.
    """
    costs = {}
    for j in v.ground - frozenset(T0):
        pj = ZERO if prices is None else as_rat(prices[j])
        if price_fns is None:
            q = IDENTITY
        else:
            q = price_fns[(buyer, j)] if buyer is not None else price_fns[j]
        costs[j] = q(pj)
    return Endowed(v, frozenset(T0), costs)


def convolve(*parts: Valuation) -> Valuation:
    if len(parts) == 1:
        return parts[0]
    return Convolution(parts)


# ---------------------------------------------------------------------------
# demand oracles


def _price_items(prices):
    if isinstance(prices, Mapping):
        return sorted(int(j) for j in prices)
    return list(range(len(prices)))


def bundle_utility(v: Valuation, i: int, T, prices, price_fns) -> Fraction:
    cost = sum((price_fns[(i, j)](prices[j]) for j in T), ZERO)
    return v(T) - cost


def greedy_demand(v: Valuation, i: int, prices, price_fns, items=None) -> frozenset:
    """Add the item with the largest strictly positive marginal utility until none is left."""
    items = _price_items(prices) if items is None else sorted(items)
    T, base = set(), v(frozenset())
    costs = {j: price_fns[(i, j)](prices[j]) for j in items}
    while True:
        best, best_gain = None, ZERO
        for j in items:
            if j in T:
                continue
            gain = v(T | {j}) - base - costs[j]
            if gain > best_gain:
                best, best_gain = j, gain
        if best is None:
            return frozenset(T)
        T.add(best)
        base = v(T)


def greedy_best_of_size(v: Valuation, i: int, prices, price_fns, size: int, items=None) -> frozenset:
    """Best bundle of exactly ``size`` items, built by greedy marginal utility."""
    items = _price_items(prices) if items is None else sorted(items)
    if size < 0 or size > len(items):
        raise DomainError(f"cannot pick {size} of {len(items)} items")
    T, base = set(), v(frozenset())
    costs = {j: price_fns[(i, j)](prices[j]) for j in items}
    for _ in range(size):
        best, best_gain = None, None
        for j in items:
            if j in T:
                continue
            gain = v(T | {j}) - base - costs[j]
            if best_gain is None or gain > best_gain:
                best, best_gain = j, gain
        T.add(best)
        base = v(T)
    return frozenset(T)


def brute_demand(v: Valuation, i: int, prices, price_fns, items=None, size=None):
    """(max utility, list of maximizers), optionally restricted to bundles of one size."""
    items = _price_items(prices) if items is None else sorted(items)
    if len(items) > 16:
        raise CapacityError("too many items for exhaustive demand")
    sizes = range(len(items) + 1) if size is None else [size]
    best, argmax = None, []
    for s in sizes:
        for T in itertools.combinations(items, s):
            u = bundle_utility(v, i, T, prices, price_fns)
            if best is None or u > best:
                best, argmax = u, [frozenset(T)]
            elif u == best:
                argmax.append(frozenset(T))
    return best, argmax


def demand_bases(v: Valuation, i: int, prices, price_fns, size: int, items=None) -> list:
    """All utility-maximizing bundles of exactly ``size`` items."""
    items = _price_items(prices) if items is None else sorted(items)
    if size > len(items):
        raise DomainError(f"cannot pick {size} of {len(items)} items")
    return brute_demand(v, i, prices, price_fns, items, size)[1]


# ---------------------------------------------------------------------------
# GS checker


@dataclass(frozen=True)
class GsWitness:
    """Outcome of :func:`check_gs`: ``kind`` is "pass", "submodularity" or "iso"."""

    kind: str
    bundle: tuple = ()
    items: tuple = ()

    @property
    def passed(self) -> bool:
        return self.kind == "pass"

    def __bool__(self) -> bool:
        return self.passed


def check_gs(v: Valuation, max_items: int = 12) -> GsWitness:
    """Exhaustive submodularity + ISO check.

    Bundles are visited in increasing bitmask order (item at position t of the
    sorted ground set is bit t), then item tuples in ascending order.
    """
    ground = sorted(v.ground)
    m = len(ground)
    if m > max_items:
        raise CapacityError(f"GS check enumerates 2^{m} bundles; limit is {max_items} items")
    val = [v(frozenset(ground[t] for t in range(m) if mask >> t & 1)) for mask in range(1 << m)]

    def unpack(mask):
        return tuple(ground[t] for t in range(m) if mask >> t & 1)

    for mask in range(1 << m):
        free = [t for t in range(m) if not mask >> t & 1]
        for a, b in itertools.combinations(free, 2):
            A, B = 1 << a, 1 << b
            if val[mask | A] + val[mask | B] < val[mask | A | B] + val[mask]:
                return GsWitness("submodularity", unpack(mask), (ground[a], ground[b]))
    for mask in range(1 << m):
        free = [t for t in range(m) if not mask >> t & 1]
        base = val[mask]
        for a, b, c in itertools.combinations(free, 3):
            for x, y, z in ((a, b, c), (a, c, b), (b, c, a)):
                X, Y, Z = 1 << x, 1 << y, 1 << z
                lhs = val[mask | X | Y] + val[mask | Z] - 2 * base
                r1 = val[mask | X | Z] + val[mask | Y] - 2 * base
                r2 = val[mask | Y | Z] + val[mask | X] - 2 * base
                if lhs > max(r1, r2):
                    return GsWitness("iso", unpack(mask), (ground[x], ground[y], ground[z]))
    return GsWitness("pass")
