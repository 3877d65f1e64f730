"""Marginal demand graphs, maximal alternating trees (MATs) and augmentation."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import DomainError, PreconditionError
from .model import Instance, ManyToOneMatching, price_vector, utility


def marginal_demand(inst: Instance, nu: ManyToOneMatching, p, k) -> frozenset:
    """F_{nu,p}(k): the items unit-buyer k marginally demands.

    A matched k demands its own item plus every item it could swap in without
    changing its buyer's utility. An unmatched k demands the items of largest
    nonnegative marginal utility given what the other copies hold.
    """
    if not isinstance(p, tuple):
        p = price_vector(inst, p)
    i = k[0]
    held = nu.items_of_buyer(i)
    own = nu.item_of(k)
    others = [j for j in range(inst.n_items) if j not in held]
    if own is not None:
        base = utility(inst, i, held, p)
        rest = held - {own}
        return frozenset([own] + [j for j in others if utility(inst, i, rest | {j}, p) == base])
    base = utility(inst, i, held, p)
    gains = {j: utility(inst, i, held | {j}, p) - base for j in others}
    if not gains:
        return frozenset()
    top = max(gains.values())
    if top < 0:
        return frozenset()
    return frozenset(j for j, g in gains.items() if g == top)


class MarginalDemandGraph:
    """D(nu, p). Neighborhoods are computed on demand and cached.

    Unmatched copies of one buyer share a neighborhood, so that case is cached
    per buyer.
    """

    def __init__(self, inst: Instance, nu: ManyToOneMatching, p):
        self.inst = inst
        self.nu = nu
        self.prices = p if isinstance(p, tuple) else price_vector(inst, p)
        self._demand = {}
        self._unmatched = {}

    def demand(self, k) -> frozenset:
        got = self._demand.get(k)
        if got is None:
            if self.nu.is_matched(k):
                got = marginal_demand(self.inst, self.nu, self.prices, k)
            else:
                got = self._unmatched.get(k[0])
                if got is None:
                    got = self._unmatched[k[0]] = marginal_demand(self.inst, self.nu, self.prices, k)
            self._demand[k] = got
        return got

    def neighbors(self, k) -> tuple:
        return tuple(sorted(self.demand(k)))

    def has_edge(self, k, j) -> bool:
        return j in self.demand(k)

    @property
    def unit_buyers(self) -> list:
        return self.inst.unit_buyers

    @property
    def edges(self) -> frozenset:
        return frozenset((k, j) for k in self.unit_buyers for j in self.demand(k))


def build_mdg(inst: Instance, nu: ManyToOneMatching, p) -> MarginalDemandGraph:
    g = MarginalDemandGraph(inst, nu, p)
    for k in g.unit_buyers:
        g.demand(k)
    return g


class EdgeGraph:
    """A plain bipartite graph given by its (unit-buyer, item) edges."""

    def __init__(self, edges: Iterable):
        adj = {}
        for k, j in edges:
            adj.setdefault(k, set()).add(j)
        self._adj = {k: tuple(sorted(js)) for k, js in adj.items()}

    def neighbors(self, k) -> tuple:
        return self._adj.get(k, ())

    def has_edge(self, k, j) -> bool:
        return j in self._adj.get(k, ())

    @property
    def edges(self) -> frozenset:
        return frozenset((k, j) for k, js in self._adj.items() for j in js)


def _as_graph(H):
    return H if hasattr(H, "neighbors") else EdgeGraph(H)


# ---------------------------------------------------------------------------
# maximal alternating trees


@dataclass(frozen=True)
class MAT:
    """Alternating tree rooted at an unmatched unit-buyer.

    ``item_parent[j]`` is the unit-buyer whose unmatched edge reached item j;
    ``unit_parent[k]`` is the item whose matched edge reached unit-buyer k.
    ``units`` and ``items`` list vertices in discovery order.
    """

    root: tuple
    item_parent: Mapping = field(default_factory=dict)
    unit_parent: Mapping = field(default_factory=dict)
    units: tuple = ()
    items: tuple = ()

    @property
    def unit_set(self) -> frozenset:
        return frozenset(self.units)

    @property
    def item_set(self) -> frozenset:
        return frozenset(self.items)

    @property
    def unmatched_edges(self) -> frozenset:
        return frozenset((k, j) for j, k in self.item_parent.items())

    @property
    def matched_edges(self) -> frozenset:
        return frozenset((k, j) for k, j in self.unit_parent.items())

    def depth_of_item(self, j) -> int:
        d = 1
        k = self.item_parent[j]
        while k != self.root:
            j2 = self.unit_parent[k]
            k = self.item_parent[j2]
            d += 2
        return d

    def path_to(self, j) -> tuple:
        """Vertices from the root to item j."""
        out = [j]
        k = self.item_parent[j]
        while True:
            out.append(k)
            if k == self.root:
                break
            j2 = self.unit_parent[k]
            out.append(j2)
            k = self.item_parent[j2]
        return tuple(reversed(out))


def find_mat(H, nu: ManyToOneMatching, k0) -> MAT:
    """Breadth-first construction of the MAT rooted at k0 (FIFO units, ascending items)."""
    H = _as_graph(H)
    if nu.is_matched(k0):
        raise DomainError(f"root {k0} is matched")
    if not H.neighbors(k0):
        raise DomainError(f"root {k0} demands nothing")
    item_parent, unit_parent = {}, {}
    units, items = [k0], []
    seen_units = {k0}
    queue = deque([k0])
    while queue:
        k = queue.popleft()
        for j in sorted(H.neighbors(k)):
            if j in item_parent:
                continue
            item_parent[j] = k
            items.append(j)
            for k2 in sorted(nu.units_of(j)):
                if k2 not in seen_units:
                    seen_units.add(k2)
                    unit_parent[k2] = j
                    units.append(k2)
                    queue.append(k2)
    return MAT(k0, MappingProxyType(item_parent), MappingProxyType(unit_parent), tuple(units), tuple(items))


def verify_mat(T: MAT, H, nu: ManyToOneMatching) -> bool:
    """Tree, alternating from an unmatched root, and maximal in H."""
    H = _as_graph(H)
    if nu.is_matched(T.root):
        return False
    units, items = set(T.units), set(T.items)
    if len(units) != len(T.units) or len(items) != len(T.items) or T.root not in units:
        return False
    if set(T.item_parent) != items or set(T.unit_parent) != units - {T.root}:
        return False
    for j, k in T.item_parent.items():
        if k not in units or not H.has_edge(k, j) or (k, j) in nu:
            return False
    for k, j in T.unit_parent.items():
        if j not in items or (k, j) not in nu or not H.has_edge(k, j):
            return False
    # every vertex reaches the root through parents (so no cycles)
    for j in items:
        steps, k = 0, T.item_parent[j]
        while k != T.root:
            k = T.item_parent[T.unit_parent[k]]
            steps += 1
            if steps > len(units):
                return False
    for k in units:
        if not set(H.neighbors(k)) <= items:
            return False
    for j in items:
        if not nu.units_of(j) <= units:
            return False
    return True


# ---------------------------------------------------------------------------
# augmenting paths


@dataclass(frozen=True)
class AltPath:
    """k0, j1, k1, j2, ..., jt: unmatched edges (k_{l-1}, j_l), matched edges (k_l, j_l)."""

    vertices: tuple

    @property
    def root(self):
        return self.vertices[0]

    @property
    def end(self):
        return self.vertices[-1]

    def __len__(self) -> int:
        return len(self.vertices) - 1

    @property
    def unmatched_edges(self) -> tuple:
        v = self.vertices
        return tuple((v[t], v[t + 1]) for t in range(0, len(v) - 1, 2))

    @property
    def matched_edges(self) -> tuple:
        v = self.vertices
        return tuple((v[t + 1], v[t]) for t in range(1, len(v) - 1, 2))


def undermatched(inst: Instance, nu: ManyToOneMatching, j: int) -> bool:
    return len(nu.units_of(j)) < inst.capacities[j]


def shortest_augmenting_path(T: MAT, nu: ManyToOneMatching, inst: Instance) -> AltPath:
    """Tree path to the first undermatched item in BFS discovery order.

    BFS discovers items in nondecreasing depth, so this is a shortest
    alternating path from the root to an undermatched item.
    """
    for j in T.items:
        if undermatched(inst, nu, j):
            return AltPath(T.path_to(j))
    raise PreconditionError("the MAT has no undermatched item")


def augment(nu: ManyToOneMatching, path: AltPath, inst: Instance | None = None) -> ManyToOneMatching:
    """nu with the path's matched edges swapped for its unmatched ones."""
    v = path.vertices
    if len(v) < 2 or len(v) % 2 != 0:
        raise DomainError("an augmenting path has odd length and ends at an item")
    if nu.is_matched(v[0]):
        raise DomainError("path root is matched")
    drop = set(path.matched_edges)
    for e in drop:
        if e not in nu:
            raise DomainError(f"path edge {e} is not matched")
    for e in path.unmatched_edges:
        if e in nu:
            raise DomainError(f"path edge {e} is already matched")
    if inst is not None and not undermatched(inst, nu, v[-1]):
        raise DomainError("path does not end at an undermatched item")
    pairs = [e for e in nu.pairs if e not in drop] + list(path.unmatched_edges)
    out = ManyToOneMatching(pairs)
    if inst is not None:
        out.validate(inst)
    return out


# ---------------------------------------------------------------------------
# DOT export


def _unit_label(k) -> str:
    return f"k{k[0]}_{k[1]}"


def to_dot(graph, nu: ManyToOneMatching, mat: MAT | None = None, name: str = "D") -> str:
    """Graphviz text. Matched edges are solid, the rest dashed; MAT edges are bold."""
    edges = sorted(graph.edges)
    tree = set()
    if mat is not None:
        tree = set(mat.unmatched_edges) | set(mat.matched_edges)
    lines = [f"graph {name} {{", "  rankdir=LR;"]
    for k in sorted({k for k, _ in edges} | ({mat.root} if mat else set())):
        lines.append(f'  {_unit_label(k)} [shape=circle, label="{k[0]}.{k[1]}"];')
    for j in sorted({j for _, j in edges}):
        lines.append(f'  s{j} [shape=box, label="s{j}"];')
    for k, j in edges:
        style = "solid" if (k, j) in nu else "dashed"
        extra = ", penwidth=2" if (k, j) in tree else ""
        lines.append(f"  {_unit_label(k)} -- s{j} [style={style}{extra}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
