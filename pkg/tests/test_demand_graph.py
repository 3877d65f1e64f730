from __future__ import annotations

import itertools
from fractions import Fraction as F

import pytest

from qitu.demand_graph import (MAT, AltPath, EdgeGraph, MarginalDemandGraph, augment, build_mdg, find_mat,
                               marginal_demand, shortest_augmenting_path, to_dot, undermatched, verify_mat)
from qitu.errors import DomainError, PreconditionError
from qitu.model import (IDENTITY, Instance, ManyToOneMatching, extend_with_dummies, project, utility)
from qitu.valuations import additive, unit_demand
from qitu.verify import is_competitive_equilibrium, is_partially_stable

from conftest import EX1_ROOT, small_instance, walk_solver

SEEDS = range(60)


def states(seeds=SEEDS, kinds=("mat",)):
    """Intermediate solver states, all partially stable and feasible."""
    out = []
    for seed in seeds:
        walk_solver(small_instance(seed), lambda kind, payload: out.append((kind, payload)) if kind in kinds else None)
    return out


def chain_market():
    """Root buyer 2 wants item 0; buyer 0 holds 0 but would swap to 1; buyer 1 holds 1 but would swap to 2."""
    vals = [unit_demand({0: 3, 1: 3}), unit_demand({1: 4, 2: 4}), unit_demand({0: 2})]
    inst = Instance(vals, [1, 1, 1], {(i, j): IDENTITY for i in range(3) for j in range(3)})
    ext = extend_with_dummies(inst)
    nu = ManyToOneMatching([((0, 0), 0), ((1, 0), 1)])
    p = tuple(F(0) for _ in range(ext.n_items))
    return ext, nu, p


# -- marginal demand --------------------------------------------------------------

def test_marginal_demand_ex1(ex1):
    ext, nu, p, _, _ = ex1
    assert marginal_demand(ext, nu, p, (0, 0)) == {0, 1}
    assert marginal_demand(ext, nu, p, (1, 0)) == {0, 1}
    assert marginal_demand(ext, nu, p, EX1_ROOT) == {0, 1}


def test_unmatched_unit_falls_back_to_dummies():
    inst = extend_with_dummies(Instance([additive({0: 1})], [1], {(0, 0): IDENTITY}))
    assert marginal_demand(inst, ManyToOneMatching(), (5, 0), (0, 0)) == {1}


def test_build_mdg_ex1_complete_bipartite(ex1):
    ext, nu, p, _, _ = ex1
    g = build_mdg(ext, nu, p)
    for k in [(0, 0), (1, 0), (2, 0)]:
        assert set(g.neighbors(k)) == {0, 1}


def test_mdg_fresh_start_edges():
    inst = extend_with_dummies(Instance([additive({0: 2, 1: 3}), unit_demand({0: 5, 1: 5})], [1, 1],
                                        {(i, j): IDENTITY for i in range(2) for j in range(2)}))
    g = build_mdg(inst, ManyToOneMatching(), (0,) * 4)
    assert g.demand((0, 0)) == {1}
    assert g.demand((1, 1)) == {0, 1}


def test_matched_edges_always_present():
    for _, (ext, nu, p, graph, _) in states(range(30)):
        for k, j in nu.pairs:
            assert graph.has_edge(k, j)


# -- MATs -------------------------------------------------------------------------

def test_find_mat_ex1(ex1):
    ext, nu, p, graph, mat = ex1
    assert mat.root == EX1_ROOT
    assert set(mat.units) == {(0, 0), (1, 0), (2, 0)}
    assert set(mat.items) == {0, 1}
    assert verify_mat(mat, graph, nu)


def test_find_mat_star_when_items_free():
    inst = extend_with_dummies(Instance([additive({0: 1, 1: 1})], [1, 1], {(0, 0): IDENTITY, (0, 1): IDENTITY}))
    nu = ManyToOneMatching()
    mat = find_mat(MarginalDemandGraph(inst, nu, (0,) * 4), nu, (0, 0))
    assert mat.units == ((0, 0),)
    assert set(mat.items) == {0, 1}
    assert all(mat.item_parent[j] == (0, 0) for j in mat.items)


def test_find_mat_chain():
    ext, nu, p = chain_market()
    graph = MarginalDemandGraph(ext, nu, p)
    mat = find_mat(graph, nu, (2, 0))
    assert mat.units == ((2, 0), (0, 0), (1, 0))
    assert mat.items == (0, 1, 2)
    assert mat.depth_of_item(2) == 5  # edges from the root
    assert verify_mat(mat, graph, nu)


def test_find_mat_errors(ex1):
    ext, nu, p, graph, _ = ex1
    with pytest.raises(DomainError):
        find_mat(graph, nu, (0, 0))
    with pytest.raises(DomainError):
        find_mat(EdgeGraph([]), nu, EX1_ROOT)


def test_verify_mat_rejects():
    nu = ManyToOneMatching([((0, 0), 0)])
    H = EdgeGraph([((0, 0), 0), ((1, 0), 0), ((1, 0), 1)])
    assert not verify_mat(MAT((0, 0), {}, {}, ((0, 0),), ()), H, nu)
    good = find_mat(H, nu, (1, 0))
    assert verify_mat(good, H, nu)
    # drop a demanded item
    parent = {j: k for j, k in good.item_parent.items() if j != 1}
    cut = MAT(good.root, parent, good.unit_parent, good.units, tuple(j for j in good.items if j != 1))
    assert not verify_mat(cut, H, nu)


def test_find_mat_verified_on_solver_states():
    count = 0
    for _, (ext, nu, p, graph, mat) in states():
        assert verify_mat(mat, graph, nu)
        count += 1
    assert count >= 200


def _reachable(graph, nu, k0):
    """Vertex sets of the MAT via depth-first search in reverse id order."""
    units, items, stack = {k0}, set(), [k0]
    while stack:
        k = stack.pop()
        for j in sorted(graph.neighbors(k), reverse=True):
            if j not in items:
                items.add(j)
                for k2 in sorted(nu.units_of(j), reverse=True):
                    if k2 not in units:
                        units.add(k2)
                        stack.append(k2)
    return units, items


def test_mat_vertex_sets_do_not_depend_on_search_order():
    for _, (ext, nu, p, graph, mat) in states(range(40)):
        assert _reachable(graph, nu, mat.root) == (mat.unit_set, mat.item_set)


# -- augmenting paths -----------------------------------------------------------------

def test_length_one_path():
    inst = extend_with_dummies(Instance([additive({0: 1})], [1], {(0, 0): IDENTITY}))
    nu = ManyToOneMatching()
    mat = find_mat(MarginalDemandGraph(inst, nu, (0, 0)), nu, (0, 0))
    path = shortest_augmenting_path(mat, nu, inst)
    assert path.vertices == ((0, 0), 0)
    assert augment(nu, path, inst) == ManyToOneMatching([((0, 0), 0)])


def test_chain_path_and_augment():
    ext, nu, p = chain_market()
    graph = MarginalDemandGraph(ext, nu, p)
    mat = find_mat(graph, nu, (2, 0))
    path = shortest_augmenting_path(mat, nu, ext)
    assert path.vertices == ((2, 0), 0, (0, 0), 1, (1, 0), 2)
    assert path.matched_edges == (((0, 0), 0), ((1, 0), 1))
    new = augment(nu, path, ext)
    assert new == ManyToOneMatching([((2, 0), 0), ((0, 0), 1), ((1, 0), 2)])
    assert is_partially_stable(ext, new, p)


def test_two_step_augment_symmetric_difference():
    nu = ManyToOneMatching([((1, 0), 0)])
    new = augment(nu, AltPath(((0, 0), 0, (1, 0), 1)))
    assert new == ManyToOneMatching([((0, 0), 0), ((1, 0), 1)])


def test_augment_rejects_bad_paths(ex1):
    ext, nu, p, graph, mat = ex1
    with pytest.raises(DomainError):
        augment(nu, AltPath(((0, 0), 1)))  # root matched
    with pytest.raises(DomainError):
        augment(nu, AltPath((EX1_ROOT, 0, (1, 0), 1)))  # (1,0) does not hold 0
    with pytest.raises(DomainError):
        augment(nu, AltPath((EX1_ROOT, 0)), ext)  # item 0 is full
    with pytest.raises(PreconditionError):
        shortest_augmenting_path(mat, nu, ext)


def test_augmentation_properties_on_solver_states():
    seen = 0
    for _, (ext, nu, p, mat, path) in states(kinds=("augment",)):
        assert len(path) % 2 == 1
        assert undermatched(ext, nu, path.end)
        # no undermatched item is closer to the root
        assert all(mat.depth_of_item(j) >= len(path) for j in mat.items if undermatched(ext, nu, j))
        new = augment(nu, path, ext)
        assert len(new) == len(nu) + 1
        assert is_partially_stable(ext, new, p)
        for i in range(ext.n_buyers):
            before = utility(ext, i, nu.items_of_buyer(i), p)
            assert utility(ext, i, new.items_of_buyer(i), p) >= before
        seen += 1
    assert seen >= 200


# -- equilibrium certificate ----------------------------------------------------------

def _real_outcome(ext, nu):
    return frozenset((i, j) for i, j in project(nu) if not ext.is_dummy(j))


def test_equilibrium_iff_no_positive_demand_from_unmatched():
    checked = 0
    for _, (ext, nu, p, graph, _) in states():
        real = Instance(ext.valuations, ext.capacities[:ext.n_real],
                        {k: q for k, q in ext.price_fns.items() if k[1] < ext.n_real})
        is_ce = is_competitive_equilibrium(real, _real_outcome(ext, nu), p[:ext.n_real])
        unmatched = [k for k in ext.unit_buyers if not nu.is_matched(k)]
        wants = any(utility(ext, k[0], nu.items_of_buyer(k[0]) | {j}, p) > utility(ext, k[0], nu.items_of_buyer(k[0]), p)
                    for k in unmatched for j in graph.demand(k))
        assert is_ce == (not wants)
        if not unmatched:
            assert is_ce
        else:
            assert verify_mat(find_mat(graph, nu, unmatched[0]), graph, nu)
        checked += 1
    assert checked >= 200


# -- structure of the demand graph around one buyer -----------------------------------

def _has_chord_cycle(graph, nu, ks, alts):
    z = len(ks)
    succ = {x: {y for y in range(z) if y != x and graph.has_edge(ks[x], alts[y]) and (ks[x], alts[y]) not in nu}
            for x in range(z)}
    for s in range(2, z + 1):
        for seq in itertools.permutations(range(z), s):
            if all(seq[(t + 1) % s] in succ[seq[t]] for t in range(s)):
                return True
    return False


def test_multi_copy_swaps_or_cycles():
    checked = 0
    for _, (ext, nu, p, graph, _) in states(range(80)):
        for i in range(ext.n_buyers):
            held = nu.items_of_buyer(i)
            copies = sorted(k for k in ext.unit_buyers if k[0] == i and nu.is_matched(k))
            if len(copies) < 2:
                continue
            best = max(utility(ext, i, T, p) for T in itertools.combinations(range(ext.n_items), len(held)))
            for z in range(2, len(copies) + 1):
                for ks in itertools.combinations(copies, z):
                    options = [[j for j in graph.demand(k) if j != nu.item_of(k)] for k in ks]
                    for alts in itertools.product(*options):
                        if len(set(alts)) < z:
                            continue
                        swaps_ok = all(
                            utility(ext, i, (held - {nu.item_of(ks[x]) for x in X}) | {alts[x] for x in X}, p) == best
                            for r in range(z + 1) for X in itertools.combinations(range(z), r))
                        assert swaps_ok or _has_chord_cycle(graph, nu, ks, alts)
                        checked += 1
    assert checked > 0


def test_dot_export(ex1):
    ext, nu, p, graph, mat = ex1
    text = to_dot(graph, nu, mat)
    assert text.startswith("graph D {")
    assert "k0_0 -- s0 [style=solid, penwidth=2];" in text
    assert "k2_0 -- s1 [style=dashed, penwidth=2];" in text
