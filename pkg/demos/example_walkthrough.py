"""Walk through one price step on the three-buyer, two-item market.

Buyers 0 and 1 hold one item each, buyer 2 arrives and wants both. The step
swaps the two holders onto their cheaper-slope items and raises both prices
at the same rate.
"""
from fractions import Fraction

from qitu.demand_graph import MarginalDemandGraph, find_mat, to_dot
from qitu.matroids import TreeContext
from qitu.model import Instance, ManyToOneMatching, PiecewisePrice, extend_with_dummies
from qitu.pricing import find_price_increase
from qitu.valuations import additive

SLOPES = {(0, 0): 2, (1, 0): 1, (2, 0): 1, (0, 1): 1, (1, 1): 2, (2, 1): 1}

inst = extend_with_dummies(Instance([additive({0: 1, 1: 1})] * 3, [1, 1],
                                    {k: PiecewisePrice.linear(s) for k, s in SLOPES.items()}))
nu = ManyToOneMatching([((0, 0), 0), ((1, 0), 1)])
p = tuple(Fraction(0) for _ in range(inst.n_items))
graph = MarginalDemandGraph(inst, nu, p)
mat = find_mat(graph, nu, (2, 0))
print("MAT units:", mat.units, "items:", mat.items)
print(to_dot(graph, nu, mat))

nu_star, step = find_price_increase(TreeContext(inst, nu, p, mat))
print("rematched:", sorted(nu_star.pairs))
print("direction:", {j: str(x) for j, x in step.d.items() if x})
print("step:", step.lambda_star, "stopped by", step.cause)
print("new prices:", [str(x) for x in step.apply(p)])
