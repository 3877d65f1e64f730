"""Two unit-demand buyers, one item: the price settles at the losing bid."""
from qitu.model import IDENTITY, Instance
from qitu.solver import solve
from qitu.valuations import unit_demand
from qitu.verify import ce_price_interval_single_item

inst = Instance([unit_demand({0: 5}), unit_demand({0: 3})], [1], {(0, 0): IDENTITY, (1, 0): IDENTITY})
out = solve(inst).outcome
print("matching:", sorted(out.matching), "price:", out.prices[0])
prices = sorted({x for x, _ in ce_price_interval_single_item(inst)})
print(f"equilibrium prices found by scanning: {prices[0]} .. {prices[-1]}")
