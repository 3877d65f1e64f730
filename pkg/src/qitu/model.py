"""Core domain types: effective price functions, instances, outcomes and matchings.

All numbers are ``fractions.Fraction``. Items are integers ``0..m-1`` and
buyers are integers ``0..n-1``. A unit-buyer is the pair ``(buyer, copy)``.
Prices are passed around as tuples indexed by item id; the public helpers also
accept mappings and convert them with :func:`price_vector`.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .errors import DomainError

Rat = Fraction
INF = math.inf

Unit = tuple  # (buyer, copy)


def as_rat(x) -> Fraction:
    """Convert ints, strings ("3/2", "7") and Fractions to Fraction. Floats are refused."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"not a rational: {x!r}") from exc
    raise TypeError(f"expected int, str or Fraction, got {type(x).__name__} ({x!r})")


# ---------------------------------------------------------------------------
# piecewise linear effective prices


@dataclass(frozen=True)
class PiecewisePrice:
    """Continuous, strictly increasing piecewise linear map with q(0) = 0.

    ``segments`` holds ``(start, slope)`` pairs. The first start is 0 and the
    last segment runs to infinity. Values are accumulated segment by segment,
    so continuity holds by construction.
    """

    segments: tuple

    def __post_init__(self):
        segs = tuple((as_rat(s), as_rat(k)) for s, k in self.segments)
        if not segs:
            raise DomainError("a price function needs at least one segment")
        if segs[0][0] != 0:
            raise DomainError("the first segment must start at 0")
        for (s0, _), (s1, _) in zip(segs, segs[1:]):
            if s1 <= s0:
                raise DomainError("segment starts must be strictly increasing")
        if any(k <= 0 for _, k in segs):
            raise DomainError("slopes must be positive")
        object.__setattr__(self, "segments", segs)
        base = [Fraction(0)]
        for (s0, k0), (s1, _) in zip(segs, segs[1:]):
            base.append(base[-1] + k0 * (s1 - s0))
        object.__setattr__(self, "_starts", tuple(s for s, _ in segs))
        object.__setattr__(self, "_base", tuple(base))

    @classmethod
    def linear(cls, slope=1) -> "PiecewisePrice":
        return cls(((0, slope),))

    @property
    def starts(self) -> tuple:
        return self._starts

    @property
    def slopes(self) -> tuple:
        return tuple(k for _, k in self.segments)

    def __len__(self) -> int:
        return len(self.segments)

    def __call__(self, p) -> Fraction:
        return eval_price(self, p)

    def __repr__(self) -> str:
        body = ", ".join(f"({s}, {k})" for s, k in self.segments)
        return f"PiecewisePrice([{body}])"


IDENTITY = PiecewisePrice.linear(1)


def _check_price(p) -> Fraction:
    p = as_rat(p)
    if p < 0:
        raise DomainError(f"negative price {p}")
    return p


def lin_seg(q: PiecewisePrice, p) -> int:
    """1-based index of the segment containing p; the later one at a breakpoint."""
    p = _check_price(p)
    return bisect_right(q.starts, p)


def eval_price(q: PiecewisePrice, p) -> Fraction:
    p = _check_price(p)
    idx = bisect_right(q.starts, p) - 1
    start, slope = q.segments[idx]
    return q._base[idx] + slope * (p - start)


def right_slope(q: PiecewisePrice, p) -> Fraction:
    return q.segments[lin_seg(q, p) - 1][1]


def next_breakpoint(q: PiecewisePrice, p):
    """First breakpoint strictly above p, or None if p is on the last segment."""
    idx = lin_seg(q, p)
    return q.starts[idx] if idx < len(q.starts) else None


def inverse_price(q: PiecewisePrice, y) -> Fraction:
    """The unique p >= 0 with q(p) = y (y >= 0)."""
    y = as_rat(y)
    if y < 0:
        raise DomainError("q takes only nonnegative values")
    idx = bisect_right(q._base, y) - 1
    start, slope = q.segments[idx]
    return start + (y - q._base[idx]) / slope


def shifted_price(q: PiecewisePrice, s) -> PiecewisePrice:
    """x -> q(x + s) - q(s): the price function seen after a reserve s is paid."""
    s = _check_price(s)
    segs = [(Fraction(0), right_slope(q, s))]
    segs += [(b - s, k) for b, k in q.segments if b > s]
    return PiecewisePrice(tuple(segs))


# ---------------------------------------------------------------------------
# instances


class Instance:
    """Buyers with valuations, items with capacities, and effective price functions.

    ``price_fns`` maps ``(buyer, item)`` to a :class:`PiecewisePrice`. After
    :func:`extend_with_dummies` the last ``dummy_count`` items are dummies with
    identity price functions; valuations never see them (their ground set is
    the real items), so dummies are worth nothing.
    """

    def __init__(self, valuations, capacities, price_fns=None, dummy_count: int = 0):
        self.valuations = tuple(valuations)
        self.capacities = tuple(int(c) for c in capacities)
        self.dummy_count = int(dummy_count)
        if any(c <= 0 for c in self.capacities):
            raise DomainError("capacities must be positive integers")
        if not 0 <= self.dummy_count <= len(self.capacities):
            raise DomainError("bad dummy count")
        fns = dict(price_fns or {})
        for i in range(self.n_buyers):
            for j in range(self.n_items):
                if (i, j) not in fns:
                    if self.is_dummy(j):
                        fns[(i, j)] = IDENTITY
                    else:
                        raise DomainError(f"missing price function for buyer {i}, item {j}")
                elif not isinstance(fns[(i, j)], PiecewisePrice):
                    fns[(i, j)] = PiecewisePrice(fns[(i, j)])
        extra = [key for key in fns if not (0 <= key[0] < self.n_buyers and 0 <= key[1] < self.n_items)]
        if extra:
            raise DomainError(f"price functions for unknown pairs: {sorted(extra)}")
        self.price_fns = MappingProxyType(fns)
        real = frozenset(self.real_items)
        for i, v in enumerate(self.valuations):
            if not v.ground <= real:
                raise DomainError(f"valuation of buyer {i} mentions unknown items")

    @property
    def n_buyers(self) -> int:
        return len(self.valuations)

    @property
    def n_items(self) -> int:
        return len(self.capacities)

    @property
    def n_real(self) -> int:
        return self.n_items - self.dummy_count

    @property
    def real_items(self) -> range:
        return range(self.n_real)

    @property
    def dummy_items(self) -> range:
        return range(self.n_real, self.n_items)

    def is_dummy(self, j: int) -> bool:
        return j >= self.n_items - self.dummy_count

    @property
    def copies_per_buyer(self) -> int:
        # one copy per real item; see extend_with_dummies
        return self.n_real

    @property
    def unit_buyers(self) -> list:
        return [(i, c) for i in range(self.n_buyers) for c in range(self.copies_per_buyer)]

    def q(self, i: int, j: int) -> PiecewisePrice:
        return self.price_fns[(i, j)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.valuations == other.valuations and self.capacities == other.capacities
                and dict(self.price_fns) == dict(other.price_fns)
                and self.dummy_count == other.dummy_count)

    __hash__ = None

    def __repr__(self) -> str:
        return (f"Instance(n={self.n_buyers}, m={self.n_real}, dummies={self.dummy_count}, "
                f"caps={self.capacities})")


def price_vector(inst: Instance, p) -> tuple:
    """Normalize prices to a tuple indexed by item. Missing mapping entries are 0."""
    if isinstance(p, Mapping):
        unknown = [j for j in p if not 0 <= int(j) < inst.n_items]
        if unknown:
            raise DomainError(f"prices for unknown items {unknown}")
        vec = tuple(as_rat(p.get(j, 0)) for j in range(inst.n_items))
    else:
        vec = tuple(as_rat(x) for x in p)
        if len(vec) != inst.n_items:
            raise DomainError(f"expected {inst.n_items} prices, got {len(vec)}")
    if any(x < 0 for x in vec):
        raise DomainError("prices must be nonnegative")
    return vec


def _check_bundle(inst: Instance, T) -> frozenset:
    T = frozenset(T)
    for j in T:
        if not (isinstance(j, int) and 0 <= j < inst.n_items):
            raise DomainError(f"unknown item id {j!r}")
    return T


def utility(inst: Instance, i: int, T, p) -> Fraction:
    """u_i(T, p) = v_i(T) - sum of q_ij(p_j) over T."""
    T = _check_bundle(inst, T)
    if not isinstance(p, tuple):
        p = price_vector(inst, p)
    cost = sum((inst.price_fns[(i, j)](p[j]) for j in T), Fraction(0))
    return inst.valuations[i](T) - cost


def marginal_utility(inst: Instance, i: int, extra, T, p) -> Fraction:
    """u_i(T' | T, p) = u_i(T u T', p) - u_i(T, p)."""
    T = _check_bundle(inst, T)
    extra = _check_bundle(inst, extra)
    return utility(inst, i, T | extra, p) - utility(inst, i, T, p)


# ---------------------------------------------------------------------------
# matchings and outcomes


@dataclass(frozen=True)
class Outcome:
    """A many-to-many matching as (buyer, item) pairs plus a price per item."""

    matching: frozenset
    prices: Mapping

    def __post_init__(self):
        object.__setattr__(self, "matching", frozenset((int(i), int(j)) for i, j in self.matching))
        object.__setattr__(self, "prices", MappingProxyType({int(j): as_rat(x) for j, x in dict(self.prices).items()}))

    def bundle(self, i: int) -> frozenset:
        return frozenset(j for b, j in self.matching if b == i)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Outcome):
            return NotImplemented
        return self.matching == other.matching and dict(self.prices) == dict(other.prices)

    def __hash__(self) -> int:
        return hash((self.matching, tuple(sorted(self.prices.items()))))


class ManyToOneMatching:
    """Immutable assignment of unit-buyers ``(buyer, copy)`` to items.

    Enforces that a unit-buyer holds at most one item and that no two copies
    of a buyer hold the same item. Capacities are checked by :meth:`validate`.
    """

    __slots__ = ("_unit", "_item", "_buyer", "_pairs")

    def __init__(self, pairs: Iterable = ()):
        unit, item, buyer = {}, {}, {}
        for k, j in pairs:
            k = (int(k[0]), int(k[1]))
            j = int(j)
            if k in unit:
                if unit[k] == j:
                    continue
                raise DomainError(f"unit-buyer {k} matched twice")
            if j in buyer.get(k[0], ()):
                raise DomainError(f"buyer {k[0]} holds item {j} through two copies")
            unit[k] = j
            item.setdefault(j, set()).add(k)
            buyer.setdefault(k[0], set()).add(j)
        self._unit = unit
        self._item = {j: frozenset(ks) for j, ks in item.items()}
        self._buyer = {i: frozenset(js) for i, js in buyer.items()}
        self._pairs = frozenset(unit.items())

    def item_of(self, k):
        return self._unit.get(k)

    def units_of(self, j: int) -> frozenset:
        return self._item.get(j, frozenset())

    def items_of_buyer(self, i: int) -> frozenset:
        return self._buyer.get(i, frozenset())

    def is_matched(self, k) -> bool:
        return k in self._unit

    @property
    def pairs(self) -> frozenset:
        return self._pairs

    def __iter__(self):
        return iter(sorted(self._pairs))

    def __len__(self) -> int:
        return len(self._unit)

    def __contains__(self, edge) -> bool:
        k, j = edge
        return self._unit.get(k) == j

    def __eq__(self, other) -> bool:
        if not isinstance(other, ManyToOneMatching):
            return NotImplemented
        return self._pairs == other._pairs

    def __hash__(self) -> int:
        return hash(self._pairs)

    def __repr__(self) -> str:
        return f"ManyToOneMatching({sorted(self._pairs)})"

    def without_units(self, units) -> "ManyToOneMatching":
        units = set(units)
        return ManyToOneMatching((k, j) for k, j in self._pairs if k not in units)

    def union(self, other: "ManyToOneMatching") -> "ManyToOneMatching":
        return ManyToOneMatching(list(self._pairs) + list(other.pairs))

    def validate(self, inst: Instance) -> None:
        for k, j in self._pairs:
            if not 0 <= k[0] < inst.n_buyers or not 0 <= k[1] < inst.copies_per_buyer:
                raise DomainError(f"unknown unit-buyer {k}")
            if not 0 <= j < inst.n_items:
                raise DomainError(f"unknown item {j}")
        for j, ks in self._item.items():
            if len(ks) > inst.capacities[j]:
                raise DomainError(f"item {j} over capacity")


def project(nu: ManyToOneMatching) -> frozenset:
    """Many-to-many projection {(buy(k), j)}."""
    return frozenset((k[0], j) for k, j in nu.pairs)


def lift(mu: Iterable, pool: Mapping | None = None) -> ManyToOneMatching:
    """Deterministic lift of a many-to-many matching.

    Each buyer's items, in ascending id, go to its copies in ascending copy
    index. ``pool`` optionally restricts the copies used per buyer.
    """
    by_buyer = {}
    for i, j in mu:
        by_buyer.setdefault(int(i), set()).add(int(j))
    pairs = []
    for i, items in by_buyer.items():
        copies = sorted(pool[i]) if pool is not None else range(len(items))
        copies = list(copies)
        if len(copies) < len(items):
            raise DomainError(f"buyer {i} has too few copies for its items")
        pairs.extend(((i, c), j) for c, j in zip(copies, sorted(items)))
    return ManyToOneMatching(pairs)


def bundles(mu: Iterable) -> dict:
    out = {}
    for i, j in mu:
        out.setdefault(i, set()).add(j)
    return {i: frozenset(js) for i, js in out.items()}


def is_feasible(inst: Instance, out: Outcome, reserves: Sequence | None = None) -> bool:
    """Every undermatched item sits at its floor price (0, or its reserve)."""
    load = {}
    for _, j in out.matching:
        load[j] = load.get(j, 0) + 1
    for j in range(inst.n_items):
        floor = as_rat(reserves[j]) if reserves is not None and j < len(reserves) else Fraction(0)
        price = out.prices.get(j, Fraction(0))
        if load.get(j, 0) > inst.capacities[j]:
            return False
        if price < floor:
            return False
        if load.get(j, 0) < inst.capacities[j] and price != floor:
            return False
    return True


def extend_with_dummies(inst: Instance) -> Instance:
    """Append m dummy items with capacity n*2m and identity price functions."""
    if inst.dummy_count:
        raise DomainError("instance already has dummy items")
    n, m = inst.n_buyers, inst.n_items
    caps = inst.capacities + (n * 2 * m,) * m
    fns = dict(inst.price_fns)
    for i in range(n):
        for j in range(m, 2 * m):
            fns[(i, j)] = IDENTITY
    return Instance(inst.valuations, caps, fns, dummy_count=m)


def reduce_sellers(inst: Instance, reserves: Sequence):
    """Fold seller reserve prices into buyers' valuations and price functions.

    Posting p_j = p'_j + s_j splits q_ij(p_j) into the constant q_ij(s_j),
    which is moved into the valuation, and the shifted function
    x -> q_ij(x + s_j) - q_ij(s_j). Returns the edited instance and the
    back-map taking edited prices to original ones.
    """
    from .valuations import endowed

    if inst.dummy_count:
        raise DomainError("reduce sellers before adding dummies")
    s = [as_rat(x) for x in reserves]
    if len(s) != inst.n_items or any(x < 0 for x in s):
        raise DomainError("need one nonnegative reserve per item")
    if all(x == 0 for x in s):
        return inst, lambda p: {j: as_rat(x) for j, x in _items(p)}
    vals, fns = [], {}
    for i, v in enumerate(inst.valuations):
        qi = {j: inst.price_fns[(i, j)] for j in inst.real_items}
        vals.append(endowed(v, frozenset(), s, qi))
        for j in inst.real_items:
            fns[(i, j)] = shifted_price(inst.price_fns[(i, j)], s[j])
    edited = Instance(vals, inst.capacities, fns)

    def back_map(p):
        return {j: as_rat(x) + s[j] for j, x in _items(p)}

    return edited, back_map


def _items(p):
    return p.items() if isinstance(p, Mapping) else enumerate(p)
