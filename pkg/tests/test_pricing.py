from __future__ import annotations

from fractions import Fraction as F

import pytest

from qitu.demand_graph import EdgeGraph, MarginalDemandGraph, find_mat, verify_mat
from qitu.errors import PreconditionError
from qitu.matroids import TreeContext, min_weight_common_basis
from qitu.model import (IDENTITY, INF, Instance, ManyToOneMatching, PiecewisePrice, extend_with_dummies, lin_seg)
from qitu.pricing import (NEW_EDGE, SEGMENT_BOUNDARY, Potentials, complementary_slackness, connect_mat,
                          demand_graph_at, duality_trick, find_price_increase, lambda1, lambda2, lp_duals,
                          lp_feasible, rematch, slope_condition, tight_edges, tight_mat)
from qitu.valuations import additive, unit_demand
from qitu.verify import is_partially_stable

from conftest import EX1_ROOT, collect_trees

TREES = collect_trees(range(250), per_seed=4, max_n=4, max_m=4)


def prepared(ctx):
    """(nu*, graph, LP duals) for a tree context."""
    nu_star = rematch(ctx, min_weight_common_basis(ctx))
    graph = demand_graph_at(ctx, nu_star)
    return nu_star, graph, lp_duals(ctx, nu_star, graph)


def moved(p, d, lam):
    return tuple(x + lam * d.get(j, 0) for j, x in enumerate(p))


def test_enough_trees():
    assert len(TREES) >= 200


# -- LP duals ---------------------------------------------------------------------

def _one_item(slope=2):
    inst = extend_with_dummies(Instance([additive({0: 3}), additive({0: 3})], [1],
                                        {(0, 0): PiecewisePrice.linear(slope), (1, 0): IDENTITY}))
    nu = ManyToOneMatching([((0, 0), 0)])
    p = (F(0), F(0))
    ctx = TreeContext(inst, nu, p, find_mat(MarginalDemandGraph(inst, nu, p), nu, (1, 0)))
    return ctx, nu


def test_lp_duals_single_edge():
    ctx, nu = _one_item(2)
    pot = lp_duals(ctx, nu)
    assert pot.D[0] == 1
    assert pot.W[(0, 0)] == 2


def test_lp_duals_ex1(ex1_ctx):
    nu_star, graph, pot = prepared(ex1_ctx)
    assert nu_star.pairs == {((0, 0), 1), ((1, 0), 0)}
    assert complementary_slackness(ex1_ctx, nu_star, pot)
    assert lp_feasible(ex1_ctx, graph, pot)
    assert pot.D[0] == pot.D[1] == 1
    assert pot.W[(0, 0)] == pot.W[(1, 0)] == 1


def test_lp_duals_feasible_and_tight_on_traces():
    for ctx in TREES:
        nu_star, graph, pot = prepared(ctx)
        assert lp_feasible(ctx, graph, pot)
        assert complementary_slackness(ctx, nu_star, pot)
        assert min(pot.D.values()) == 1


def test_potentials_normalized():
    pot = Potentials({"k": F(6)}, {0: F(3), 1: F(9)}).normalized()
    assert pot.D == {0: 1, 1: 3}
    assert pot.W == {"k": 2}


# -- ConnectMAT ------------------------------------------------------------------------

def test_connect_mat_no_rounds_when_tight_tree_complete():
    ctx, nu = _one_item(2)
    pot = lp_duals(ctx, nu)
    out = connect_mat(ctx, nu, pot)
    assert out.connect_iterations == 0
    assert out.D == pot.D
    assert out.W[(0, 0)] == pot.W[(0, 0)]
    assert out.W[(1, 0)] == 1  # identity slope times D


def test_connect_mat_ex1(ex1_ctx):
    nu_star, graph, pot = prepared(ex1_ctx)
    out = connect_mat(ex1_ctx, nu_star, pot, graph)
    tmat = tight_mat(ex1_ctx, nu_star, out, graph)
    assert tmat.root == EX1_ROOT
    assert tmat.unit_set == {(0, 0), (1, 0), EX1_ROOT}
    assert tmat.item_set == {0, 1}


def test_connect_mat_on_traces():
    rounds = []
    for ctx in TREES:
        nu_star, graph, pot = prepared(ctx)
        out = connect_mat(ctx, nu_star, pot, graph)
        assert out.connect_iterations <= len(ctx.items)
        assert lp_feasible(ctx, graph, out, include_root=True)
        assert complementary_slackness(ctx, nu_star, out)
        tmat = tight_mat(ctx, nu_star, out, graph)
        assert (tmat.unit_set, tmat.item_set) == (ctx.mat.unit_set, ctx.mat.item_set)
        assert verify_mat(tmat, EdgeGraph(tight_edges(ctx, graph, out)), nu_star)
        rounds.append(out.connect_iterations)
    assert max(rounds) >= 1  # the loop body is exercised


# -- duality trick ---------------------------------------------------------------------

def test_duality_trick_ex1(ex1_ctx):
    nu_star, graph, pot = prepared(ex1_ctx)
    d = duality_trick(ex1_ctx, connect_mat(ex1_ctx, nu_star, pot, graph))
    assert d[0] == d[1] > 0
    assert d[2] == d[3] == 0


def test_duality_trick_support_is_tree():
    for ctx in TREES:
        nu_star, graph, pot = prepared(ctx)
        out = connect_mat(ctx, nu_star, pot, graph)
        d = duality_trick(ctx, out)
        assert {j for j, x in d.items() if x > 0} == set(ctx.items)
        assert all(x >= 0 for x in d.values())
        assert slope_condition(ctx, graph, d, tight_mat(ctx, nu_star, out, graph))


# -- step lengths --------------------------------------------------------------------

def _margin_market():
    # buyer 0 holds item 0 (value 3), could take item 1 instead (value 1); root buyer 1 wants item 0
    inst = extend_with_dummies(Instance([unit_demand({0: 3, 1: 1}), unit_demand({0: 4})], [1, 1],
                                        {(i, j): IDENTITY for i in range(2) for j in range(2)}))
    nu = ManyToOneMatching([((0, 0), 0), ((0, 1), 2)])
    p = (F(0),) * 4
    return TreeContext(inst, nu, p, find_mat(MarginalDemandGraph(inst, nu, p), nu, (1, 0))), nu


def test_lambda1_hand_example():
    ctx, nu = _margin_market()
    assert ctx.items == (0,)
    assert lambda1(ctx, nu, {0: F(1), 1: F(0), 2: F(0), 3: F(0)}) == 2


def test_lambda1_infinite_when_no_gap_closes():
    ctx, nu = _margin_market()
    assert lambda1(ctx, nu, {j: F(0) for j in range(4)}) == INF


def test_lambda2_examples():
    inst = Instance([additive({0: 50})], [1], {(0, 0): PiecewisePrice(((0, 1), (10, 2)))})
    assert lambda2(inst, (F(4),), {0: F(2)}) == 3
    assert lambda2(inst, (F(10),), {0: F(2)}) == INF
    flat = Instance([additive({0: 50})], [1], {(0, 0): IDENTITY})
    assert lambda2(flat, (F(4),), {0: F(2)}) == INF


def _new_edges(ctx, nu_star, before, p):
    g = MarginalDemandGraph(ctx.inst, nu_star, p)
    return [(k, j) for k in ctx.units for j in g.neighbors(k) if j not in before.neighbors(k)]


def test_lambda1_and_lambda2_validated_on_traces():
    edge_checks = seg_checks = 0
    for ctx in TREES:
        nu_star, step = find_price_increase(ctx)
        graph = demand_graph_at(ctx, nu_star)
        p, d = ctx.prices, step.d
        if step.lambda1 != INF and step.lambda1 <= step.lambda2:
            assert not _new_edges(ctx, nu_star, graph, moved(p, d, step.lambda1 / 2))
            assert _new_edges(ctx, nu_star, graph, moved(p, d, step.lambda1))
            edge_checks += 1
        if step.lambda2 != INF:
            segs = {k: lin_seg(q, p[k[1]]) for k, q in ctx.inst.price_fns.items()}
            half = moved(p, d, step.lambda2 / 2)
            full = moved(p, d, step.lambda2)
            assert all(lin_seg(q, half[k[1]]) == segs[k] for k, q in ctx.inst.price_fns.items())
            assert any(lin_seg(q, full[k[1]]) > segs[k] for k, q in ctx.inst.price_fns.items())
            seg_checks += 1
    assert edge_checks >= 100
    assert seg_checks >= 20


# -- full price increase ----------------------------------------------------------------

def test_find_price_increase_ex1(ex1_ctx):
    nu_star, step = find_price_increase(ex1_ctx)
    assert nu_star == ManyToOneMatching([((0, 0), 1), ((1, 0), 0)])
    assert step.d[0] == step.d[1] > 0
    assert step.d[2] == step.d[3] == 0
    assert step.lambda_star > 0
    p = ex1_ctx.prices
    for lam in (step.lambda_star / 2, step.lambda_star):
        q = moved(p, step.d, lam)
        assert is_partially_stable(ex1_ctx.inst, nu_star, q)
        mat = find_mat(MarginalDemandGraph(ex1_ctx.inst, nu_star, q), nu_star, EX1_ROOT)
        assert mat.item_set >= {0, 1} and {(0, 0), (1, 0)} <= mat.unit_set


def test_competing_buyer_raises_price_until_indifferent():
    inst = extend_with_dummies(Instance([unit_demand({0: 5}), unit_demand({0: 3})], [1],
                                        {(0, 0): IDENTITY, (1, 0): IDENTITY}))
    nu = ManyToOneMatching([((0, 0), 0)])
    p = (F(0), F(0))
    ctx = TreeContext(inst, nu, p, find_mat(MarginalDemandGraph(inst, nu, p), nu, (1, 0)))
    nu_star, step = find_price_increase(ctx)
    assert nu_star == nu
    assert step.cause == NEW_EDGE
    assert step.apply(p) == (F(3), F(0))


def test_precondition_items_fully_matched():
    inst = extend_with_dummies(Instance([additive({0: 1, 1: 1})], [1, 1], {(0, 0): IDENTITY, (0, 1): IDENTITY}))
    nu = ManyToOneMatching()
    p = (F(0),) * 4
    mat = find_mat(MarginalDemandGraph(inst, nu, p), nu, (0, 0))
    with pytest.raises(PreconditionError):
        TreeContext(inst, nu, p, mat)


def test_post_state_on_traces():
    causes = {NEW_EDGE: 0, SEGMENT_BOUNDARY: 0}
    for ctx in TREES:
        nu_star, step = find_price_increase(ctx)
        assert step.lambda_star > 0
        assert {j for j, x in step.d.items() if x > 0} == set(ctx.items)
        causes[step.cause] += 1
        for lam in (step.lambda_star / 2, step.lambda_star):
            q = moved(ctx.prices, step.d, lam)
            assert is_partially_stable(ctx.inst, nu_star, q)
            g = MarginalDemandGraph(ctx.inst, nu_star, q)
            mat = find_mat(g, nu_star, ctx.root)
            assert verify_mat(mat, g, nu_star)
            if lam < step.lambda_star:
                assert (mat.unit_set, mat.item_set) == (ctx.mat.unit_set, ctx.mat.item_set)
            else:
                assert mat.unit_set >= ctx.mat.unit_set and mat.item_set >= ctx.mat.item_set
    assert causes[NEW_EDGE] >= 50 and causes[SEGMENT_BOUNDARY] >= 20
