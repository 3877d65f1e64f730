from __future__ import annotations

from fractions import Fraction as F

import pytest

from qitu.errors import InputError
from qitu.model import IDENTITY, Instance, inverse_price
from qitu.solver import debug_enabled, solve, solve_with_trace, total_linseg
from qitu.valuations import Table, additive, unit_demand
from qitu.verify import is_competitive_equilibrium

from conftest import embedded_ex1, small_instance

SEEDS = range(80)


def test_single_buyer_single_item():
    inst = Instance([additive({0: 5})], [1], {(0, 0): IDENTITY})
    report, events = solve_with_trace(inst)
    assert report.outcome.matching == {(0, 0)}
    assert report.outcome.prices == {0: 0}
    assert [e.kind for e in events] == ["mat_built", "augment"]
    assert report.price_increases == 0


def test_two_buyers_one_item():
    inst = Instance([unit_demand({0: 5}), unit_demand({0: 3})], [1], {(0, 0): IDENTITY, (1, 0): IDENTITY})
    out = solve(inst).outcome
    assert out.matching == {(0, 0)}
    assert out.prices[0] == 3
    assert is_competitive_equilibrium(inst, out.matching, out.prices)


def test_embedded_example_flips_matching():
    report, events = solve_with_trace(embedded_ex1())
    steps = [e.data for e in events if e.kind == "price_increase"]
    assert steps
    step = steps[0]
    assert step["tree_items"] == [0, 1]
    assert set(step["d"]) == {0, 1} and step["d"][0] == step["d"][1]
    before = {p for p in step["nu_before"] if p[1] < 2}
    after = {p for p in step["nu_star"] if p[1] < 2}
    assert before == {((0, 0), 0), ((1, 0), 1)}
    assert after == {((0, 0), 1), ((1, 0), 0)}
    kinds = [e.kind for e in events]
    assert kinds.index("price_increase") < len(kinds) - 1 - kinds[::-1].index("augment")
    out = report.outcome
    assert is_competitive_equilibrium(embedded_ex1(), out.matching, out.prices)


def test_strict_gs_rejects_complements():
    comp = Table({frozenset(): 0, frozenset({0}): 0, frozenset({1}): 0, frozenset({0, 1}): 3})
    inst = Instance([comp], [1, 1], {(0, 0): IDENTITY, (0, 1): IDENTITY})
    with pytest.raises(InputError):
        solve(inst)


def test_debug_flag_from_environment(monkeypatch):
    monkeypatch.setenv("QITU_DEBUG", "1")
    assert debug_enabled()
    out = solve(embedded_ex1()).outcome
    assert out.prices == {0: 1, 1: 1}
    monkeypatch.setenv("QITU_DEBUG", "0")
    assert not debug_enabled()


@pytest.mark.parametrize("seed", SEEDS)
def test_solver_trace_properties(seed):
    inst = small_instance(seed, max_n=4, max_m=4)
    report, events = solve_with_trace(inst, debug=True)
    ext = report.extended
    out = report.outcome
    assert is_competitive_equilibrium(inst, out.matching, out.prices)
    # every unit-buyer ends matched, one augmentation each
    augments = [e for e in events if e.kind == "augment"]
    assert len(augments) == len(ext.unit_buyers) == report.outer_iterations
    assert [e.data["matched"] for e in augments] == list(range(1, len(augments) + 1))
    assert report.final_matching is not None and len(report.final_matching) == len(ext.unit_buyers)
    # prices never decrease and dummies stay free
    last = None
    for e in events:
        if e.kind == "price_increase":
            before, after = e.data["prices_before"], e.data["prices_after"]
            assert all(a >= b for a, b in zip(after, before))
            assert all(after[j] == 0 for j in ext.dummy_items)
            if last is not None:
                assert before == last
            last = after
    steps = [e for e in events if e.kind == "price_increase"]
    assert report.price_increases == len(steps)
    crossed = sum(e.data["to"] - e.data["from"] for e in events if e.kind == "segment_crossed")
    assert report.segment_crossings == crossed
    if steps:
        assert total_linseg(ext, steps[-1].data["prices_after"]) - total_linseg(ext, (0,) * ext.n_items) == crossed


@pytest.mark.parametrize("seed", SEEDS)
def test_prices_bounded_by_satiation(seed):
    inst = small_instance(seed, max_n=4, max_m=4)
    out = solve(inst).outcome
    for j, pj in out.prices.items():
        top = max(inverse_price(inst.price_fns[(i, j)], max(inst.valuations[i]({j}), F(0)))
                  for i in range(inst.n_buyers))
        assert pj <= top


def test_deterministic():
    for seed in range(20):
        inst = small_instance(seed)
        a, b = solve(inst).outcome, solve(inst).outcome
        assert a.prices == b.prices
        assert a.matching == b.matching


def test_nothing_to_buy():
    inst = Instance([additive({})] * 2, [1], {(0, 0): IDENTITY, (1, 0): IDENTITY})
    out = solve(inst).outcome
    assert out.prices == {0: 0}  # an indifferent buyer may still take the free item
    assert is_competitive_equilibrium(inst, out.matching, out.prices)
