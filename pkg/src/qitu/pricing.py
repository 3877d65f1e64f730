"""MAT-preserving price increases.

The price step on a stuck MAT is found in five stages: rematch the tree by
a minimum-weight common basis, solve the dual of the tree's min-weight perfect
b-matching, tighten the duals until their tight edges span the tree again,
read the direction off the item duals, and walk along it until a new demand
edge appears or a price function hits a breakpoint.

Duals are stored multiplicatively: ``W[k] = exp(omega_k)`` and
``D[j] = exp(-rho_j)``. The LP constraint ``omega_k + rho_j <= log q'_kj``
becomes ``W[k] <= q'_kj * D[j]``, so every quantity stays rational.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping

from .demand_graph import MAT, EdgeGraph, MarginalDemandGraph, find_mat
from .errors import InvariantError, PreconditionError
from .logweight import LogWeight
from .matroids import TreeContext, min_weight_common_basis
from .model import INF, Instance, ManyToOneMatching, lift, next_breakpoint, utility

ZERO = Fraction(0)
NEW_EDGE = "new_edge"
SEGMENT_BOUNDARY = "segment_boundary"


@dataclass(frozen=True)
class Potentials:
    W: Mapping
    D: Mapping
    connect_iterations: int = 0

    def __post_init__(self):
        object.__setattr__(self, "W", MappingProxyType(dict(self.W)))
        object.__setattr__(self, "D", MappingProxyType(dict(self.D)))

    def normalized(self) -> "Potentials":
        """Scale so the smallest item potential is 1."""
        if not self.D:
            return self
        c = 1 / min(self.D.values())
        return Potentials({k: w * c for k, w in self.W.items()}, {j: x * c for j, x in self.D.items()},
                          self.connect_iterations)


@dataclass(frozen=True)
class PriceIncrease:
    """Direction d (positive exactly on tree items), step length and what stopped it."""

    d: Mapping
    lambda_star: object
    cause: str
    lambda1: object = INF
    lambda2: object = INF
    potentials: Potentials | None = None
    lp_potentials: Potentials | None = None
    tight_mat: MAT | None = None
    basis: frozenset = frozenset()
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "d", MappingProxyType(dict(self.d)))

    def apply(self, prices: tuple) -> tuple:
        lam = self.lambda_star
        return tuple(p + lam * self.d.get(j, ZERO) for j, p in enumerate(prices))


def _slope(ctx: TreeContext, k, j) -> Fraction:
    return ctx.slope(k[0], j)


def demand_graph_at(ctx: TreeContext, nu_star: ManyToOneMatching, prices=None) -> MarginalDemandGraph:
    return MarginalDemandGraph(ctx.inst, nu_star, ctx.prices if prices is None else prices)


def dp_edges(ctx: TreeContext, graph: MarginalDemandGraph) -> list:
    """Edges of D(nu*, p) between the tree's matched unit-buyers and tree items."""
    items = set(ctx.items)
    return [(k, j) for k in ctx.tree_units for j in graph.neighbors(k) if j in items]


# ---------------------------------------------------------------------------
# dual potentials


def lp_duals(ctx: TreeContext, nu_star: ManyToOneMatching, graph: MarginalDemandGraph | None = None) -> Potentials:
    """Optimal duals of the tree's min-weight perfect b-matching (weights log q').

    Solved from scratch by successive shortest paths on the flow network
    source -> unit-buyers -> items -> sink, then read off as shortest-path
    potentials of the final residual graph.
    """
    graph = graph or demand_graph_at(ctx, nu_star)
    edges = dp_edges(ctx, graph)
    units, items = list(ctx.tree_units), list(ctx.items)
    S, T = "s", "t"
    cap, cost = {}, {}

    def arc(u, v, c, w):
        cap[(u, v)] = c
        cap.setdefault((v, u), 0)
        cost[(u, v)] = w
        cost[(v, u)] = -w

    one = LogWeight.zero()
    for k in units:
        arc(S, ("u", k), 1, one)
    for k, j in edges:
        arc(("u", k), ("i", j), 1, LogWeight(_slope(ctx, k, j)))
    for j in items:
        arc(("i", j), T, ctx.inst.capacities[j], one)
    nodes = [S] + [("u", k) for k in units] + [("i", j) for j in items] + [T]
    out = {v: [] for v in nodes}
    for (u, v) in cap:
        out[u].append(v)

    need = len(units)
    for _ in range(need):
        dist, parent = _bellman_ford(nodes, out, cap, cost, {S: one})
        if T not in dist:
            raise InvariantError("DP infeasible: tree items cannot be perfectly matched in the demand graph")
        v = T
        while v != S:
            u = parent[v]
            cap[(u, v)] -= 1
            cap[(v, u)] += 1
            v = u
    pot, _ = _bellman_ford(nodes, out, cap, cost, {v: one for v in nodes})
    D = {j: 1 / pot[("i", j)].r for j in items}
    W = {}
    for k in units:
        cands = [_slope(ctx, k, j) * D[j] for kk, j in edges if kk == k]
        W[k] = min(cands)
    return Potentials(W, D).normalized()


def _bellman_ford(nodes, out, cap, cost, start):
    dist = dict(start)
    parent = {}
    for _ in range(len(nodes) + 1):
        changed = False
        for u in nodes:
            if u not in dist:
                continue
            for v in out[u]:
                if cap[(u, v)] <= 0:
                    continue
                cand = dist[u] + cost[(u, v)]
                if v not in dist or cand < dist[v]:
                    dist[v] = cand
                    parent[v] = u
                    changed = True
        if not changed:
            return dist, parent
    raise InvariantError("negative cycle in the residual graph")


def lp_feasible(ctx: TreeContext, graph: MarginalDemandGraph, pot: Potentials, include_root: bool = False) -> bool:
    units = ctx.units if include_root else ctx.tree_units
    items = set(ctx.items)
    for k in units:
        for j in graph.neighbors(k):
            if j in items and pot.W[k] > _slope(ctx, k, j) * pot.D[j]:
                return False
    return True


def complementary_slackness(ctx: TreeContext, nu_star: ManyToOneMatching, pot: Potentials) -> bool:
    for k in ctx.tree_units:
        j = nu_star.item_of(k)
        if pot.W[k] != _slope(ctx, k, j) * pot.D[j]:
            return False
    return True


def tight_edges(ctx: TreeContext, graph: MarginalDemandGraph, pot: Potentials) -> list:
    items = set(ctx.items)
    return [(k, j) for k in ctx.units for j in graph.neighbors(k)
            if j in items and k in pot.W and pot.W[k] == _slope(ctx, k, j) * pot.D[j]]


def tight_mat(ctx: TreeContext, nu_star: ManyToOneMatching, pot: Potentials,
              graph: MarginalDemandGraph | None = None) -> MAT:
    graph = graph or demand_graph_at(ctx, nu_star)
    return find_mat(EdgeGraph(tight_edges(ctx, graph, pot)), nu_star, ctx.root)


def connect_mat(ctx: TreeContext, nu_star: ManyToOneMatching, pot: Potentials,
                graph: MarginalDemandGraph | None = None) -> Potentials:
    """Lower duals outside the tight tree until the tight edges span the whole MAT.

    The root gets the largest W allowed by its demand edges into the tree.
    Each round finds the tightest slack ratio from the tight tree to a tree
    item outside it, and divides the potentials of everything outside by it.
    """
    graph = graph or demand_graph_at(ctx, nu_star)
    items = set(ctx.items)
    root_items = [j for j in graph.neighbors(ctx.root) if j in items]
    if not root_items:
        raise InvariantError("root demands no tree item after rematching")
    W = dict(pot.W)
    D = dict(pot.D)
    W[ctx.root] = min(_slope(ctx, ctx.root, j) * D[j] for j in root_items)
    all_units = set(ctx.units)
    rounds = 0
    while True:
        cur = Potentials(W, D)
        Tp = find_mat(EdgeGraph(tight_edges(ctx, graph, cur)), nu_star, ctx.root)
        in_units, in_items = set(Tp.units), set(Tp.items)
        if not (in_units <= all_units and in_items <= items):
            raise InvariantError("tight tree left the MAT")
        if in_units == all_units and in_items == items:
            return Potentials(W, D, rounds).normalized()
        eps = None
        for k in Tp.units:
            for j in graph.neighbors(k):
                if j in items and j not in in_items:
                    r = _slope(ctx, k, j) * D[j] / W[k]
                    if eps is None or r < eps:
                        eps = r
        if eps is None:
            raise InvariantError("no edge leaves the tight tree although it is incomplete")
        for j in items - in_items:
            D[j] /= eps
        for k in all_units - in_units:
            W[k] /= eps
        rounds += 1
        if rounds > len(items):
            raise InvariantError("ConnectMAT exceeded |S(T)| rounds")


def duality_trick(ctx: TreeContext, pot: Potentials) -> dict:
    """d_j = D_j on tree items, 0 elsewhere."""
    items = set(ctx.items)
    return {j: (pot.D[j] if j in items else ZERO) for j in range(ctx.inst.n_items)}


def slope_condition(ctx: TreeContext, graph: MarginalDemandGraph, d: Mapping, tree: MAT) -> bool:
    """q'_{k j1} d_{j1} <= q'_{k j2} d_{j2} for each tree edge (k, j1) and demand edge (k, j2)."""
    for k, j1 in set(tree.unmatched_edges) | set(tree.matched_edges):
        lhs = _slope(ctx, k, j1) * d[j1]
        for j2 in graph.neighbors(k):
            if lhs > _slope(ctx, k, j2) * d[j2]:
                return False
    return True


# ---------------------------------------------------------------------------
# step lengths


def lambda1(ctx: TreeContext, nu_star: ManyToOneMatching, d: Mapping, graph: MarginalDemandGraph | None = None):
    """First step at which some tree unit-buyer gains a demand edge.

    Within one linear piece every relevant utility is affine in the step. A
    unit-buyer's demand level falls at the smallest rate q'd over its demanded
    items (its tight reference); a candidate item j falls at rate q'_kj d_j.
    """
    graph = graph or demand_graph_at(ctx, nu_star)
    inst, p = ctx.inst, ctx.prices
    best = INF
    for k in ctx.units:
        i = k[0]
        held = nu_star.items_of_buyer(i)
        demanded = graph.demand(k)
        own = nu_star.item_of(k)
        if own is not None:
            rest = held - {own}
            level = utility(inst, i, held, p) - utility(inst, i, rest, p)
            rate = _slope(ctx, k, own) * d[own]
        else:
            rest = held
            base = utility(inst, i, held, p)
            level = max(utility(inst, i, held | {j}, p) - base for j in demanded)
            rate = min(_slope(ctx, k, j) * d[j] for j in demanded)
        for j in range(inst.n_items):
            if j in held or j in demanded:
                continue
            gap = level - (utility(inst, i, rest | {j}, p) - utility(inst, i, rest, p))
            if gap < 0:
                raise InvariantError(f"negative gap for unit-buyer {k} and item {j}: not partially stable")
            closing = rate - _slope(ctx, k, j) * d[j]
            if closing > 0:
                lam = gap / closing
                if lam < best:
                    best = lam
    return best


def lambda2(inst: Instance, p, d: Mapping):
    """First step at which some effective price function reaches a breakpoint."""
    best = INF
    for j, dj in d.items():
        if dj <= 0:
            continue
        for i in range(inst.n_buyers):
            b = next_breakpoint(inst.price_fns[(i, j)], p[j])
            if b is not None:
                lam = (b - p[j]) / dj
                if lam < best:
                    best = lam
    return best


# ---------------------------------------------------------------------------


def rematch(ctx: TreeContext, basis) -> ManyToOneMatching:
    """Lift the basis onto the tree's unit-buyers and keep nu elsewhere."""
    inner = lift(basis, pool=ctx.tree_pool())
    return ctx.nu.without_units(ctx.tree_units).union(inner)


def find_price_increase(ctx: TreeContext, check: bool = True):
    """Rematch the tree and compute a MAT-preserving price step.

    Returns ``(nu_star, step)``. With ``check`` the dual feasibility,
    complementary slackness and slope conditions are asserted.
    """
    if any(not 0 < len(ctx.nu.units_of(j)) == ctx.inst.capacities[j] for j in ctx.items):
        raise PreconditionError("tree items must be fully matched")
    record = {}
    basis = min_weight_common_basis(ctx, record)
    nu_star = rematch(ctx, basis)
    graph = demand_graph_at(ctx, nu_star)
    pot0 = lp_duals(ctx, nu_star, graph)
    if check:
        if not lp_feasible(ctx, graph, pot0):
            raise InvariantError("LP duals infeasible", _dump(ctx, nu_star, pot0))
        if not complementary_slackness(ctx, nu_star, pot0):
            raise InvariantError("LP duals not tight on the rematched edges", _dump(ctx, nu_star, pot0))
    pot = connect_mat(ctx, nu_star, pot0, graph)
    tmat = tight_mat(ctx, nu_star, pot, graph)
    d = duality_trick(ctx, pot)
    if check:
        if not lp_feasible(ctx, graph, pot, include_root=True):
            raise InvariantError("ConnectMAT broke dual feasibility", _dump(ctx, nu_star, pot))
        if not complementary_slackness(ctx, nu_star, pot):
            raise InvariantError("ConnectMAT broke tightness", _dump(ctx, nu_star, pot))
        if not slope_condition(ctx, graph, d, tmat):
            raise InvariantError("slope condition fails", _dump(ctx, nu_star, pot))
    l1 = lambda1(ctx, nu_star, d, graph)
    l2 = lambda2(ctx.inst, ctx.prices, d)
    if l1 == INF and l2 == INF:
        raise InvariantError("unbounded price increase", _dump(ctx, nu_star, pot))
    if l1 <= l2:
        lam, cause = l1, NEW_EDGE
    else:
        lam, cause = l2, SEGMENT_BOUNDARY
    if not lam > 0:
        raise InvariantError("zero step length", _dump(ctx, nu_star, pot))
    step = PriceIncrease(d, lam, cause, l1, l2, pot, pot0, tmat, basis, record)
    return nu_star, step


def _dump(ctx: TreeContext, nu_star, pot) -> dict:
    return {
        "prices": [str(x) for x in ctx.prices],
        "nu": sorted(ctx.nu.pairs),
        "nu_star": sorted(nu_star.pairs),
        "root": ctx.root,
        "tree_items": list(ctx.items),
        "W": {str(k): str(v) for k, v in pot.W.items()},
        "D": {str(j): str(v) for j, v in pot.D.items()},
    }
