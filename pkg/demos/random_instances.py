"""Solve a batch of random instances and check each answer by brute force."""
import sys

from qitu.generate import FAMILIES, random_instance
from qitu.solver import solve
from qitu.verify import is_competitive_equilibrium

count = int(sys.argv[1]) if len(sys.argv) > 1 else 20
for seed in range(count):
    fam = FAMILIES[seed % len(FAMILIES)]
    inst = random_instance(fam, 3, 3, 2, 3, seed)
    rep = solve(inst)
    ok = is_competitive_equilibrium(inst, rep.outcome.matching, rep.outcome.prices)
    prices = " ".join(str(rep.outcome.prices[j]) for j in sorted(rep.outcome.prices))
    print(f"seed {seed:3d} {fam:13s} steps={rep.price_increases:3d} prices=[{prices}] ce={ok}")
