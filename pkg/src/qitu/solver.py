"""The ascending-price solver.

Every buyer is split into unit-buyers, one per real item, and dummy items
absorb the copies a buyer does not want. Starting from zero prices and an
empty matching, each unmatched unit-buyer in turn grows a maximal alternating
tree. While that tree has no spare capacity, prices of its items rise along a
MAT-preserving direction. Once it has spare capacity, the matching is
augmented along a shortest path. The state stays partially stable and
feasible throughout, so when every unit-buyer is matched the projection is a
competitive equilibrium.
"""
from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .demand_graph import (MAT, MarginalDemandGraph, augment, find_mat, shortest_augmenting_path,
                           undermatched, verify_mat)
from .errors import InputError, InvariantError
from .matroids import TreeContext
from .model import Instance, ManyToOneMatching, Outcome, extend_with_dummies, lin_seg, project
from .pricing import find_price_increase
from .valuations import check_gs

log = logging.getLogger(__name__)

MAX_GS_CHECK_ITEMS = 12


def debug_enabled() -> bool:
    return os.environ.get("QITU_DEBUG", "") not in ("", "0")


@dataclass
class Event:
    kind: str
    data: dict


@dataclass
class SolverState:
    inst: Instance
    nu: ManyToOneMatching
    prices: tuple
    outer: int = 0
    inner: int = 0
    segment_crossings: int = 0


@dataclass
class SolveReport:
    outcome: Outcome
    dummy_matching: frozenset
    outer_iterations: int
    price_increases: int
    segment_crossings: int
    wall_time: float
    extended: Instance = field(repr=False, default=None)
    final_matching: ManyToOneMatching = field(repr=False, default=None)


def total_linseg(inst: Instance, prices: tuple) -> int:
    return sum(lin_seg(q, prices[j]) for (i, j), q in inst.price_fns.items())


def _linsegs(inst: Instance, prices: tuple) -> dict:
    return {key: lin_seg(q, prices[key[1]]) for key, q in inst.price_fns.items()}


def validate_gs(inst: Instance) -> None:
    for i, v in enumerate(inst.valuations):
        if len(v.ground) > MAX_GS_CHECK_ITEMS:
            raise InputError(f"buyer {i}: {len(v.ground)} items is too many for the GS check; use assume_gs")
        witness = check_gs(v)
        if not witness.passed:
            raise InputError(f"buyer {i}: valuation is not gross substitutes "
                             f"({witness.kind} fails at {witness.bundle}, {witness.items})")


def solve(inst: Instance, *, strict_gs: bool = True, debug: bool | None = None,
          on_event: Callable[[Event], None] | None = None) -> SolveReport:
    """Compute a competitive equilibrium of a GS instance."""
    if debug is None:
        debug = debug_enabled()
    if strict_gs:
        validate_gs(inst)
    started = time.perf_counter()
    ext = extend_with_dummies(inst)
    state = SolverState(ext, ManyToOneMatching(), tuple(Fraction(0) for _ in range(ext.n_items)))
    emit = on_event or (lambda e: None)

    def check_state(where: str):
        if not debug:
            return
        from .verify import is_partially_stable
        mode = "brute" if ext.n_items <= 10 else "greedy"
        if not is_partially_stable(ext, state.nu, state.prices, mode=mode):
            raise InvariantError(f"partial stability lost after {where}", _state_dump(state))
        out = Outcome(project(state.nu), dict(enumerate(state.prices)))
        from .model import is_feasible
        if not is_feasible(ext, out):
            raise InvariantError(f"feasibility lost after {where}", _state_dump(state))

    for k0 in ext.unit_buyers:
        if state.nu.is_matched(k0):
            continue
        state.outer += 1
        graph = MarginalDemandGraph(ext, state.nu, state.prices)
        mat = find_mat(graph, state.nu, k0)
        _emit_mat(emit, state, mat, graph, debug)
        while not any(undermatched(ext, state.nu, j) for j in mat.items):
            ctx = TreeContext(ext, state.nu, state.prices, mat)
            before_items = len(mat.items)
            before_seg = _linsegs(ext, state.prices)
            nu_star, step = find_price_increase(ctx, check=True)
            state.nu = nu_star
            state.prices = step.apply(state.prices)
            state.inner += 1
            after_seg = _linsegs(ext, state.prices)
            crossed = sorted(key for key in after_seg if after_seg[key] != before_seg[key])
            state.segment_crossings += sum(after_seg[key] - before_seg[key] for key in crossed)
            graph = MarginalDemandGraph(ext, state.nu, state.prices)
            new_mat = find_mat(graph, state.nu, k0)
            emit(Event("price_increase", {
                "root": k0,
                "tree_items": list(ctx.items),
                "tree_units": list(ctx.units),
                "d": {j: x for j, x in step.d.items() if x},
                "lambda": step.lambda_star,
                "lambda1": step.lambda1,
                "lambda2": step.lambda2,
                "cause": step.cause,
                "basis": sorted(step.basis),
                "nu_before": sorted(ctx.nu.pairs),
                "nu_star": sorted(nu_star.pairs),
                "prices_before": ctx.prices,
                "prices_after": state.prices,
                "W": dict(step.potentials.W),
                "D": dict(step.potentials.D),
                "lp_W": dict(step.lp_potentials.W),
                "lp_D": dict(step.lp_potentials.D),
                "connect_iterations": step.potentials.connect_iterations,
                "tight_mat_units": list(step.tight_mat.units),
                "tight_mat_items": list(step.tight_mat.items),
                "mat_items_before": before_items,
                "mat_items_after": len(new_mat.items),
                "linseg_before": sum(before_seg.values()),
                "linseg_after": sum(after_seg.values()),
            }))
            for key in crossed:
                emit(Event("segment_crossed", {"buyer": key[0], "item": key[1],
                                               "from": before_seg[key], "to": after_seg[key]}))
            if not new_mat.unit_set >= mat.unit_set or not new_mat.item_set >= mat.item_set:
                raise InvariantError("MAT shrank after a price increase", _state_dump(state))
            mat = new_mat
            check_state("price increase")
            _emit_mat(emit, state, mat, graph, debug)
        path = shortest_augmenting_path(mat, state.nu, ext)
        size = len(state.nu)
        state.nu = augment(state.nu, path, ext)
        if len(state.nu) != size + 1:
            raise InvariantError("augmentation did not grow the matching", _state_dump(state))
        emit(Event("augment", {"root": k0, "path": list(path.vertices), "matched": len(state.nu)}))
        check_state("augment")

    mu = project(state.nu)
    real = frozenset((i, j) for i, j in mu if not ext.is_dummy(j))
    dummies = frozenset((i, j) for i, j in mu if ext.is_dummy(j))
    prices = {j: state.prices[j] for j in ext.real_items}
    for j in ext.dummy_items:
        if state.prices[j] != 0:
            raise InvariantError("dummy item acquired a price", _state_dump(state))
    return SolveReport(Outcome(real, prices), dummies, state.outer, state.inner, state.segment_crossings,
                       time.perf_counter() - started, ext, state.nu)


def solve_with_trace(inst: Instance, **kwargs):
    events = []
    report = solve(inst, on_event=events.append, **kwargs)
    return report, events


def _emit_mat(emit, state: SolverState, mat: MAT, graph, debug: bool) -> None:
    if debug and not verify_mat(mat, graph, state.nu):
        raise InvariantError("find_mat returned a non-MAT", _state_dump(state))
    emit(Event("mat_built", {"root": mat.root, "units": list(mat.units), "items": list(mat.items),
                             "unit_parent": dict(mat.unit_parent), "item_parent": dict(mat.item_parent),
                             "nu": sorted(state.nu.pairs), "prices": state.prices}))


def _state_dump(state: SolverState) -> dict:
    return {"nu": sorted(state.nu.pairs), "prices": [str(x) for x in state.prices],
            "outer": state.outer, "inner": state.inner}
