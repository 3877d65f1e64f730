"""Buyer-demand and item-capacity matroids on the edges of a MAT, and their intersection.

Given a MAT whose items are all fully matched, the ground set is every
(buyer, item) pair between the buyers holding tree items and the tree items.
M_S caps each item at its capacity. M_B's bases give every buyer ``quota(i)``
tree items forming a utility-maximizing bundle of that size, holding the
buyer's items outside the tree fixed. Common bases are exactly the partially
stable ways to rematch the tree.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .demand_graph import MAT
from .errors import InvariantError, PreconditionError
from .logweight import LogWeight
from .model import Instance, ManyToOneMatching, right_slope

ZERO = Fraction(0)


class TreeContext:
    """Everything the matroid and pricing layers need about one MAT."""

    def __init__(self, inst: Instance, nu: ManyToOneMatching, prices: tuple, mat: MAT):
        self.inst = inst
        self.nu = nu
        self.prices = tuple(prices)
        self.mat = mat
        self.root = mat.root
        self.units = tuple(mat.units)
        self.tree_units = tuple(k for k in mat.units if k != mat.root)
        self.items = tuple(sorted(mat.items))
        item_set = frozenset(self.items)
        for j in self.items:
            if len(nu.units_of(j)) != inst.capacities[j]:
                raise PreconditionError(f"tree item {j} is not fully matched")
        quota = {}
        for k in self.tree_units:
            quota[k[0]] = quota.get(k[0], 0) + 1
        self.quota = quota
        self.buyers = tuple(sorted(quota))
        self.hat = {i: nu.items_of_buyer(i) - item_set for i in self.buyers}
        self.ground = tuple((i, j) for i in self.buyers for j in self.items)
        self.base_edges = frozenset((k[0], nu.item_of(k)) for k in self.tree_units)
        if sum(inst.capacities[j] for j in self.items) != sum(quota.values()):
            raise InvariantError("tree capacities and quotas disagree")
        self._hat_value = {i: inst.valuations[i](self.hat[i]) for i in self.buyers}
        self._cost = {(i, j): inst.price_fns[(i, j)](self.prices[j]) for i, j in self.ground}
        self._term_cache = {}
        self.penalty = self._penalty()

    def slope(self, i: int, j: int) -> Fraction:
        return right_slope(self.inst.price_fns[(i, j)], self.prices[j])

    def cost(self, i: int, j: int) -> Fraction:
        return self._cost[(i, j)]

    def value_given_hat(self, i: int, items) -> Fraction:
        """v_i(A | hat_mu(i))."""
        return self.inst.valuations[i](self.hat[i] | frozenset(items)) - self._hat_value[i]

    def _penalty(self) -> Fraction:
        # For submodular v every marginal v(j | X), hat <= X <= hat + S(T) - j,
        # lies between the two extremes below, so |v(A | hat)| is bounded by the
        # sum of the larger magnitudes. Twice the total bound plus one dominates
        # any difference between unpenalized terms.
        total = ZERO
        everything = frozenset(self.items)
        for i in self.buyers:
            for j in self.items:
                hi = self.value_given_hat(i, {j})
                lo = self.value_given_hat(i, everything) - self.value_given_hat(i, everything - {j})
                total += max(abs(hi), abs(lo)) + self.cost(i, j)
        return 2 * total + 1

    def term(self, i: int, items: frozenset) -> Fraction:
        """Buyer i's share of u*: penalized value given hat minus the prices of its edges."""
        key = (i, items)
        got = self._term_cache.get(key)
        if got is None:
            excess = max(0, len(items) - self.quota.get(i, 0))
            val = self.value_given_hat(i, items) - self.penalty * excess
            got = val - sum((self.cost(i, j) for j in items), ZERO)
            self._term_cache[key] = got
        return got

    def edge_bundles(self, E: Iterable) -> dict:
        out = {i: set() for i in self.buyers}
        for i, j in E:
            out.setdefault(i, set()).add(j)
        return {i: frozenset(js) for i, js in out.items()}

    def tree_pool(self) -> dict:
        """Copy indices of each buyer's unit-buyers inside the tree (root excluded)."""
        pool = {}
        for k in self.tree_units:
            pool.setdefault(k[0], []).append(k[1])
        return pool


def u_star(ctx: TreeContext, E: Iterable) -> Fraction:
    """Sum over buyers of penalized v_i(E(i) | hat_mu(i)) minus the prices of E."""
    return sum((ctx.term(i, A) for i, A in ctx.edge_bundles(E).items() if A or i in ctx.quota), ZERO)


def ms_independent(ctx: TreeContext, E: Iterable) -> bool:
    load = {}
    for _, j in E:
        load[j] = load.get(j, 0) + 1
        if load[j] > ctx.inst.capacities[j]:
            return False
    return True


def mb_independent(ctx: TreeContext, E: Iterable) -> bool:
    """Independence in M_B by exchange.

    Start from the basis formed by the tree's current edges and pull in the
    edges of E one at a time, each time swapping out a basis edge outside E
    while keeping u* at its maximum. E is independent iff this never gets stuck.
    """
    E = frozenset(E)
    ground = set(ctx.ground)
    if not E <= ground:
        return False
    counts = {}
    for i, _ in E:
        counts[i] = counts.get(i, 0) + 1
        if counts[i] > ctx.quota.get(i, 0):
            return False
    current = set(ctx.base_edges)
    bundles = {i: set(js) for i, js in ctx.edge_bundles(current).items()}
    target = u_star(ctx, current)
    while True:
        missing = sorted(E - current)
        if not missing:
            return True
        i, j = missing[0]
        swapped = False
        for i2, j2 in sorted(current - E):
            # only buyers i and i2 change, so compare their terms
            old = ctx.term(i, frozenset(bundles[i]))
            if i2 != i:
                old += ctx.term(i2, frozenset(bundles[i2]))
                new = ctx.term(i, frozenset(bundles[i] | {j})) + ctx.term(i2, frozenset(bundles[i2] - {j2}))
            else:
                new = ctx.term(i, frozenset((bundles[i] - {j2}) | {j}))
            if new == old:
                current.remove((i2, j2))
                current.add((i, j))
                bundles[i2].discard(j2)
                bundles[i].add(j)
                swapped = True
                break
        if not swapped:
            return False
        if u_star(ctx, current) != target:
            raise InvariantError("exchange changed u*")


# ---------------------------------------------------------------------------
# weighted matroid intersection


def weighted_matroid_intersection(indep1: Callable, indep2: Callable, weights, ground: Sequence,
                                  max_cardinality: bool = True) -> frozenset:
    """Maximum-weight common independent set via exchange-graph augmentation.

    Each round finds a path from the sources to the sinks of the exchange
    graph that is shortest for vertex lengths (-w outside the current set,
    +w inside), taking the fewest arcs among equal lengths. Such augmentations
    keep the current set of maximum weight among common independent sets of
    its size. With ``max_cardinality`` the loop runs until no path exists,
    otherwise it stops once a further augmentation would lose weight.

    ``weights`` may hold any ordered additive group: ints, Fractions or
    :class:`LogWeight`.
    """
    ground = list(ground)
    if not ground:
        return frozenset()
    weights = dict(weights) if not callable(weights) else {e: weights(e) for e in ground}
    zero = weights[ground[0]] - weights[ground[0]]
    current: set = set()
    if not (indep1(frozenset()) and indep2(frozenset())):
        raise InvariantError("empty set is not independent")
    while True:
        inside = [e for e in ground if e in current]
        outside = [e for e in ground if e not in current]
        sources = [x for x in outside if indep1(frozenset(current | {x}))]
        sinks = {x for x in outside if indep2(frozenset(current | {x}))}
        arcs = {e: [] for e in ground}
        for y in inside:
            base = current - {y}
            for x in outside:
                swap = frozenset(base | {x})
                if indep1(swap):
                    arcs[y].append(x)
                if indep2(swap):
                    arcs[x].append(y)
        length = {e: (weights[e] if e in current else -weights[e]) for e in ground}
        path = _shortest_path(ground, arcs, length, sources, sinks, zero)
        if path is None:
            return frozenset(current)
        gain = zero
        for e in path:
            gain = gain - length[e]
        if not max_cardinality and gain < zero:
            return frozenset(current)
        nxt = set(current)
        for e in path:
            if e in nxt:
                nxt.remove(e)
            else:
                nxt.add(e)
        if not (indep1(frozenset(nxt)) and indep2(frozenset(nxt))):
            raise InvariantError("augmentation left the intersection: oracle is not a matroid")
        current = nxt


def _shortest_path(ground, arcs, length, sources, sinks, zero):
    """Bellman-Ford on (length, arcs) pairs; returns the best source-to-sink path or None."""
    dist, parent = {}, {}
    for x in sources:
        dist[x] = (length[x], 0)
        parent[x] = None
    for _ in range(len(ground) + 1):
        changed = False
        for u in list(dist):
            du = dist[u]
            for v in arcs[u]:
                cand = (du[0] + length[v], du[1] + 1)
                if v not in dist or _less(cand, dist[v]):
                    dist[v] = cand
                    parent[v] = u
                    changed = True
        if not changed:
            break
    else:
        raise InvariantError("negative cycle in the exchange graph: current set is not extreme")
    best = None
    for x in ground:
        if x in sinks and x in dist and (best is None or _less(dist[x], dist[best])):
            best = x
    if best is None:
        return None
    path, v, guard = [], best, 0
    while v is not None:
        path.append(v)
        v = parent[v]
        guard += 1
        if guard > len(ground) + 1:
            raise InvariantError("cycle while reconstructing the augmenting path")
    return list(reversed(path))


def _less(a, b) -> bool:
    return a[0] < b[0] or (a[0] == b[0] and a[1] < b[1])


def min_weight_common_basis(ctx: TreeContext, record: dict | None = None) -> frozenset:
    """Common basis of M_B and M_S minimizing the product of slopes q'_ij(p_j).

    Weights are the transformed log-slopes, kept exact as :class:`LogWeight`:
    shift so the smallest is zero, reflect, and add a constant that makes every
    larger common independent set outweigh every smaller one.
    """
    ground = list(ctx.ground)
    if not ground:
        raise PreconditionError("empty tree")
    slopes = {e: ctx.slope(*e) for e in ground}
    low = min(slopes.values())
    ratio = {e: s / low for e, s in slopes.items()}
    top = max(ratio.values())
    size = sum(ctx.inst.capacities[j] for j in ctx.items)
    # log form: size * max(w') + 1 - w'(e), with the unit realized as log 2
    weights = {e: LogWeight(2 * top ** size / ratio[e]) for e in ground}
    basis = weighted_matroid_intersection(
        lambda E: mb_independent(ctx, E), lambda E: ms_independent(ctx, E), weights, ground,
        max_cardinality=False)
    if len(basis) != size:
        raise InvariantError(f"no common basis of size {size} (found {len(basis)})")
    if record is not None:
        record.update(ground=ground, slopes=slopes, basis=sorted(basis))
    return basis


def product_weight(ctx: TreeContext, E: Iterable) -> Fraction:
    out = Fraction(1)
    for i, j in E:
        out *= ctx.slope(i, j)
    return out
