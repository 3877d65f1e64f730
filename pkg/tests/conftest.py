"""Shared fixtures: the two-item, three-buyer example market and random states."""
from __future__ import annotations

import random
import re
from fractions import Fraction

import pytest

from qitu.demand_graph import MarginalDemandGraph, augment, find_mat, shortest_augmenting_path, undermatched
from qitu.generate import FAMILIES, random_instance, random_price_fn, random_valuation
from qitu.matroids import TreeContext
from qitu.model import Instance, ManyToOneMatching, PiecewisePrice, extend_with_dummies
from qitu.pricing import find_price_increase
from qitu.valuations import additive, capped

ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if m and (report.when == "call" or report.failed):
        ACCEPTANCE[int(m.group(1))] = report.passed and ACCEPTANCE.get(int(m.group(1)), True)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n, ok in sorted(ACCEPTANCE.items()):
            terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}")


# slopes q'_ij for buyers 0,1,2 on items 0,1
EX1_SLOPES = {(0, 0): 2, (1, 0): 1, (2, 0): 1, (0, 1): 1, (1, 1): 2, (2, 1): 1}
EX1_ROOT = (2, 0)


def ex1_instance() -> Instance:
    fns = {k: PiecewisePrice.linear(s) for k, s in EX1_SLOPES.items()}
    return Instance([additive({0: 1, 1: 1}) for _ in range(3)], [1, 1], fns)


def embedded_ex1() -> Instance:
    """The example market as a full instance: one item per buyer, so buyers 0 and 1 settle before 2 arrives."""
    fns = {k: PiecewisePrice.linear(s) for k, s in EX1_SLOPES.items()}
    return Instance([capped(additive({0: 1, 1: 1}), 1) for _ in range(3)], [1, 1], fns)


def random_market(seed: int, m: int | None = None):
    """(valuation, price_fns for buyer 0, prices) drawn from one of the GS families."""
    rng = random.Random(seed)
    m = m or rng.randint(1, 6)
    v = random_valuation(rng, FAMILIES[seed % len(FAMILIES)], m)
    fns = {(0, j): random_price_fn(rng, 3) for j in range(m)}
    prices = tuple(Fraction(rng.randint(0, 16), rng.choice([1, 2, 3])) for _ in range(m))
    return v, fns, prices


def ex1_state():
    """(extended instance, nu, prices, graph, MAT) with k1 on s1, k2 on s2 and k3 as the root."""
    ext = extend_with_dummies(ex1_instance())
    nu = ManyToOneMatching([((0, 0), 0), ((1, 0), 1)])
    p = tuple(Fraction(0) for _ in range(ext.n_items))
    graph = MarginalDemandGraph(ext, nu, p)
    return ext, nu, p, graph, find_mat(graph, nu, EX1_ROOT)


@pytest.fixture
def ex1():
    return ex1_state()


@pytest.fixture
def ex1_ctx():
    ext, nu, p, _, mat = ex1_state()
    return TreeContext(ext, nu, p, mat)


def small_instance(seed: int, max_n: int = 3, max_m: int = 3, caps: int = 2, segments: int = 3) -> Instance:
    rng = random.Random(seed)
    fam = FAMILIES[seed % len(FAMILIES)]
    return random_instance(fam, rng.randint(1, max_n), rng.randint(1, max_m), caps, segments, seed)


def walk_solver(inst: Instance, visit=None, limit: int | None = None):
    """Replay the solver loop and call ``visit(kind, payload)`` at every intermediate state.

    kinds: "mat" (ext, nu, p, graph, mat), "tree" (ctx) before a price step, and
    "augment" (ext, nu, p, mat, path). Returns the final (ext, nu, p).
    """
    visit = visit or (lambda kind, payload: None)
    ext = extend_with_dummies(inst)
    nu = ManyToOneMatching()
    p = tuple(Fraction(0) for _ in range(ext.n_items))
    steps = 0
    for k0 in ext.unit_buyers:
        if nu.is_matched(k0):
            continue
        graph = MarginalDemandGraph(ext, nu, p)
        mat = find_mat(graph, nu, k0)
        visit("mat", (ext, nu, p, graph, mat))
        while not any(undermatched(ext, nu, j) for j in mat.items):
            ctx = TreeContext(ext, nu, p, mat)
            visit("tree", ctx)
            nu, step = find_price_increase(ctx)
            p = step.apply(p)
            graph = MarginalDemandGraph(ext, nu, p)
            mat = find_mat(graph, nu, k0)
            visit("mat", (ext, nu, p, graph, mat))
            steps += 1
            if limit is not None and steps >= limit:
                return ext, nu, p
        path = shortest_augmenting_path(mat, nu, ext)
        visit("augment", (ext, nu, p, mat, path))
        nu = augment(nu, path, ext)
    return ext, nu, p


def collect_trees(seeds, per_seed: int | None = None, max_ground: int | None = None, **kw) -> list:
    out = []
    for seed in seeds:
        found = []

        def visit(kind, payload):
            if kind == "tree" and (max_ground is None or len(payload.ground) <= max_ground):
                found.append(payload)

        walk_solver(small_instance(seed, **kw), visit)
        out.extend(found if per_seed is None else found[:per_seed])
    return out
