"""Run the exhaustive gross-substitutes check on a few valuations."""
from qitu.valuations import OXS, Table, additive, check_gs, unit_demand

cases = {
    "additive": additive({0: 1, 1: 2, 2: 3}),
    "unit demand": unit_demand({0: 4, 1: 2}),
    "oxs": OXS([{0: 4, 1: 3}, {0: 2, 2: 1}]),
    "complements": Table({frozenset(): 0, frozenset({0}): 0, frozenset({1}): 0, frozenset({0, 1}): 1}),
}
for name, v in cases.items():
    w = check_gs(v)
    print(f"{name:12s}", "pass" if w.passed else f"{w.kind} fails at bundle {w.bundle}, items {w.items}")
