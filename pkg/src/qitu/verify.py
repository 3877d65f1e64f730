"""Exhaustive ground-truth checks and the knapsack construction for the NQ model.

Everything here enumerates bundles, so it is meant for small instances
(at most ``MAX_BRUTE`` items).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import CapacityError, DomainError, InvariantError
from .model import (IDENTITY, Instance, ManyToOneMatching, Outcome, PiecewisePrice, as_rat, bundles,
                    is_feasible, price_vector, project, utility)
from .valuations import Additive, greedy_best_of_size, greedy_demand

ZERO = Fraction(0)
MAX_BRUTE = 12


def _many_to_many(mu) -> frozenset:
    if isinstance(mu, ManyToOneMatching):
        return project(mu)
    if isinstance(mu, Outcome):
        return mu.matching
    return frozenset((int(i), int(j)) for i, j in mu)


def _all_bundles(items: Sequence, max_size: int | None = None):
    top = len(items) if max_size is None else min(max_size, len(items))
    for s in range(top + 1):
        yield from itertools.combinations(items, s)


def _check_size(n: int) -> None:
    if n > MAX_BRUTE:
        raise CapacityError(f"brute-force oracle limited to {MAX_BRUTE} items, got {n}")


def is_partially_stable(inst: Instance, mu, p, mode: str = "brute") -> bool:
    """Every buyer's bundle is best among bundles no larger than it."""
    p = price_vector(inst, p)
    held = bundles(_many_to_many(mu))
    items = list(range(inst.n_items))
    for i in range(inst.n_buyers):
        mine = held.get(i, frozenset())
        cur = utility(inst, i, mine, p)
        if mode == "brute":
            _check_size(inst.n_items)
            for T in _all_bundles(items, len(mine)):
                if utility(inst, i, T, p) > cur:
                    return False
        elif mode == "greedy":
            v = inst.valuations[i]
            for size in range(len(mine) + 1):
                T = greedy_best_of_size(v, i, p, inst.price_fns, size, items)
                if utility(inst, i, T, p) > cur:
                    return False
        else:
            raise DomainError(f"unknown mode {mode!r}")
    return True


def is_stable(inst: Instance, mu, p) -> bool:
    """No profitable single addition, swap or drop for any buyer."""
    p = price_vector(inst, p)
    held = bundles(_many_to_many(mu))
    for i in range(inst.n_buyers):
        mine = held.get(i, frozenset())
        cur = utility(inst, i, mine, p)
        outside = [j for j in range(inst.n_items) if j not in mine]
        for j in outside:
            if utility(inst, i, mine | {j}, p) > cur:
                return False
        for j in mine:
            if utility(inst, i, mine - {j}, p) > cur:
                return False
            for j2 in outside:
                if utility(inst, i, (mine - {j}) | {j2}, p) > cur:
                    return False
    return True


def is_competitive_equilibrium(inst: Instance, mu, p, mode: str = "brute",
                               reserves: Sequence | None = None) -> bool:
    """Feasible, and every buyer holds a utility-maximizing bundle.

    Dummy items are worth nothing and priced 0 while undermatched, so demand is
    maximized over real items only.
    """
    pairs = _many_to_many(mu)
    pv = price_vector(inst, p)
    load = {}
    for i, j in pairs:
        if not (0 <= i < inst.n_buyers and 0 <= j < inst.n_items):
            raise DomainError(f"unknown pair {(i, j)}")
        load[j] = load.get(j, 0) + 1
    if any(load[j] > inst.capacities[j] for j in load):
        return False
    if not is_feasible(inst, Outcome(pairs, dict(enumerate(pv))), reserves):
        return False
    held = bundles(pairs)
    items = list(inst.real_items)
    for i in range(inst.n_buyers):
        cur = utility(inst, i, held.get(i, frozenset()), pv)
        if mode == "brute":
            _check_size(len(items))
            best = max(utility(inst, i, T, pv) for T in _all_bundles(items))
        elif mode == "greedy":
            best = utility(inst, i, greedy_demand(inst.valuations[i], i, pv, inst.price_fns, items), pv)
        else:
            raise DomainError(f"unknown mode {mode!r}")
        if best != cur:
            return False
    return True


def ce_price_interval_single_item(inst: Instance, lo=0, hi=None, grid: int = 4):
    """Scan candidate prices for a one-item instance and report which support a CE.

    Candidates are the breakpoints of singleton values plus ``grid`` points
    between them. Returns the list of (price, winners) pairs that are CEs.
    """
    if inst.n_items != 1:
        raise DomainError("single-item instances only")
    values = sorted({inst.valuations[i]({0}) for i in range(inst.n_buyers)} | {as_rat(lo)})
    if hi is not None:
        values.append(as_rat(hi))
    top = max(values) + 1
    points = set(values) | {top}
    for a, b in zip(values, values[1:] + [top]):
        for t in range(1, grid):
            points.add(a + (b - a) * Fraction(t, grid))
    found = []
    for x in sorted(points):
        for w in range(-1, inst.n_buyers):
            mu = [] if w < 0 else [(w, 0)]
            if is_competitive_equilibrium(inst, mu, [x]):
                found.append((x, w))
    return found


# ---------------------------------------------------------------------------
# matroid-layer oracles


def enumerate_mb_bases(ctx) -> list:
    """All bases of M_B: per buyer, a best bundle of quota(i) tree items given hat_mu(i)."""
    per_buyer = []
    for i in ctx.buyers:
        best, argmax = None, []
        for A in itertools.combinations(ctx.items, ctx.quota[i]):
            A = frozenset(A)
            u = ctx.value_given_hat(i, A) - sum((ctx.cost(i, j) for j in A), ZERO)
            if best is None or u > best:
                best, argmax = u, [A]
            elif u == best:
                argmax.append(A)
        per_buyer.append([frozenset((i, j) for j in A) for A in argmax])
    return [frozenset().union(*combo) for combo in itertools.product(*per_buyer)]


def brute_min_weight_perfect_matching(ctx):
    """(min product of slopes, argmin list) over partially stable perfect matchings of the tree."""
    from .model import lift

    best, argmin = None, []
    pool = ctx.tree_pool()
    outside = ctx.nu.without_units(ctx.tree_units)
    choices = []
    for i in ctx.buyers:
        choices.append([frozenset((i, j) for j in A) for A in itertools.combinations(ctx.items, ctx.quota[i])])
    for combo in itertools.product(*choices):
        E = frozenset().union(*combo)
        load = {}
        for _, j in E:
            load[j] = load.get(j, 0) + 1
        if any(load.get(j, 0) != ctx.inst.capacities[j] for j in ctx.items):
            continue
        nu = outside.union(lift(E, pool))
        if not is_partially_stable(ctx.inst, nu, ctx.prices):
            continue
        w = Fraction(1)
        for i, j in E:
            w *= ctx.slope(i, j)
        if best is None or w < best:
            best, argmin = w, [E]
        elif w == best:
            argmin.append(E)
    return best, argmin


# ---------------------------------------------------------------------------
# knapsack -> NQ


@dataclass(frozen=True)
class KnapsackInstance:
    values: tuple
    costs: tuple
    budget: int

    def __post_init__(self):
        vals = tuple(int(x) for x in self.values)
        costs = tuple(int(x) for x in self.costs)
        if len(vals) != len(costs):
            raise DomainError("one cost per value")
        if any(x <= 0 for x in vals + costs) or int(self.budget) < 0:
            raise DomainError("knapsack data must be positive integers")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "budget", int(self.budget))

    @property
    def size(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class NqInstance:
    """An instance whose buyer ``main`` pays through the two-piece function ``r``."""

    inst: Instance
    main: int
    r: PiecewisePrice
    knapsack: KnapsackInstance

    def r_of(self, i: int) -> PiecewisePrice:
        return self.r if i == self.main else IDENTITY

    def aux_buyers(self, j: int) -> tuple:
        return tuple(1 + 3 * j + t for t in range(3))


def brute_knapsack(ks: KnapsackInstance):
    """(best value, bundle); among equal values the lexicographically smallest sorted bundle wins."""
    if ks.size > 20:
        raise CapacityError("too many knapsack items")
    best, arg = -1, ()
    for T in _all_bundles(list(range(ks.size))):
        if sum(ks.costs[j] for j in T) <= ks.budget:
            val = sum(ks.values[j] for j in T)
            if val > best:
                best, arg = val, T
    return best, frozenset(arg)


def build_nq_from_knapsack(ks: KnapsackInstance) -> NqInstance:
    """Items of capacity 2, three single-minded helpers per item, and a main buyer.

    Helpers value only their item, at its cost. The main buyer is additive in
    the knapsack values and pays r(sum of prices) with slope 1/(2C) up to the
    budget C and slope 1 + sum(values) after it.
    """
    m = ks.size
    vals = [Additive({j: ks.values[j] for j in range(m)})]
    for j in range(m):
        for _ in range(3):
            vals.append(Additive({j: ks.costs[j]}))
    inst = Instance(vals, [2] * m, {(i, j): IDENTITY for i in range(len(vals)) for j in range(m)})
    steep = 1 + sum(ks.values)
    if ks.budget > 0:
        r = PiecewisePrice(((0, Fraction(1, 2 * ks.budget)), (ks.budget, steep)))
    else:
        # no budget: any positive spending is prohibitively expensive
        r = PiecewisePrice(((0, steep),))
    return NqInstance(inst, 0, r, ks)


def nq_utility(nq: NqInstance, i: int, T, p) -> Fraction:
    spend = sum((nq.inst.price_fns[(i, j)](p[j]) for j in T), ZERO)
    return nq.inst.valuations[i](frozenset(T)) - nq.r_of(i)(spend)


def is_nq_competitive_equilibrium(nq: NqInstance, mu, p) -> bool:
    inst = nq.inst
    pairs = _many_to_many(mu)
    pv = price_vector(inst, p)
    if not is_feasible(inst, Outcome(pairs, dict(enumerate(pv)))):
        return False
    held = bundles(pairs)
    items = list(range(inst.n_items))
    for i in range(inst.n_buyers):
        cur = nq_utility(nq, i, held.get(i, frozenset()), pv)
        if any(nq_utility(nq, i, T, pv) > cur for T in _all_bundles(items)):
            return False
    return True


def nq_equilibrium_outcome(nq: NqInstance):
    """(bundle of the main buyer, full matching, prices) with p_j = c_j."""
    ks = nq.knapsack
    if ks.size > 8:
        raise CapacityError("NQ demo enumerates bundles; keep it tiny")
    p = tuple(Fraction(c) for c in ks.costs)
    best, arg = None, None
    for T in _all_bundles(list(range(ks.size))):
        u = nq_utility(nq, nq.main, T, p)
        if best is None or u > best:
            best, arg = u, frozenset(T)
    matching = {(nq.main, j) for j in arg}
    for j in range(ks.size):
        helpers = nq.aux_buyers(j)
        slots = nq.inst.capacities[j] - (1 if j in arg else 0)
        matching.update((h, j) for h in helpers[:slots])
    return arg, frozenset(matching), p


def nq_equilibrium_bundle(nq: NqInstance) -> frozenset:
    bundle, matching, p = nq_equilibrium_outcome(nq)
    if not is_nq_competitive_equilibrium(nq, matching, p):
        raise InvariantError("constructed NQ outcome is not an equilibrium")
    return bundle
