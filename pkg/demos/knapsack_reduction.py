"""Read a knapsack optimum off the equilibrium of its non-quasilinear market."""
from qitu.verify import (KnapsackInstance, brute_knapsack, build_nq_from_knapsack, is_nq_competitive_equilibrium,
                         nq_equilibrium_outcome)

ks = KnapsackInstance(values=(6, 5, 4), costs=(3, 2, 2), budget=4)
nq = build_nq_from_knapsack(ks)
bundle, matching, prices = nq_equilibrium_outcome(nq)
print("main buyer takes", sorted(bundle), "worth", sum(ks.values[j] for j in bundle))
print("equilibrium:", is_nq_competitive_equilibrium(nq, matching, prices))
print("knapsack optimum:", brute_knapsack(ks))
