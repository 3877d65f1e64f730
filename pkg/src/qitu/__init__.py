"""Competitive equilibria for many-to-many matching markets with gross-substitutes
buyers and piecewise linear imperfectly transferable payments."""
from .demand_graph import (MAT, AltPath, MarginalDemandGraph, augment, build_mdg, find_mat, marginal_demand,
                           shortest_augmenting_path, verify_mat)
from .errors import (CapacityError, DomainError, InputError, InvariantError, PreconditionError, QituError)
from .matroids import (TreeContext, mb_independent, min_weight_common_basis, ms_independent, u_star,
                       weighted_matroid_intersection)
from .model import (IDENTITY, INF, Instance, ManyToOneMatching, Outcome, PiecewisePrice, eval_price,
                    extend_with_dummies, is_feasible, lift, lin_seg, marginal_utility, project,
                    reduce_sellers, right_slope, utility)
from .pricing import (Potentials, PriceIncrease, connect_mat, duality_trick, find_price_increase, lambda1,
                      lambda2, lp_duals)
from .solver import SolveReport, solve, solve_with_trace
from .valuations import (additive, capped, check_gs, convolve, demand_bases, endowed, greedy_best_of_size,
                         greedy_demand, unit_demand)
from .verify import (brute_knapsack, build_nq_from_knapsack, is_competitive_equilibrium, is_partially_stable,
                     is_stable, nq_equilibrium_bundle)

__all__ = [
    "MAT",
    "AltPath",
    "MarginalDemandGraph",
    "augment",
    "build_mdg",
    "find_mat",
    "marginal_demand",
    "shortest_augmenting_path",
    "verify_mat",
    "CapacityError",
    "DomainError",
    "InputError",
    "InvariantError",
    "PreconditionError",
    "QituError",
    "TreeContext",
    "mb_independent",
    "min_weight_common_basis",
    "ms_independent",
    "u_star",
    "weighted_matroid_intersection",
    "IDENTITY",
    "INF",
    "Instance",
    "ManyToOneMatching",
    "Outcome",
    "PiecewisePrice",
    "eval_price",
    "extend_with_dummies",
    "is_feasible",
    "lift",
    "lin_seg",
    "marginal_utility",
    "project",
    "reduce_sellers",
    "right_slope",
    "utility",
    "Potentials",
    "PriceIncrease",
    "connect_mat",
    "duality_trick",
    "find_price_increase",
    "lambda1",
    "lambda2",
    "lp_duals",
    "SolveReport",
    "solve",
    "solve_with_trace",
    "additive",
    "capped",
    "check_gs",
    "convolve",
    "demand_bases",
    "endowed",
    "greedy_best_of_size",
    "greedy_demand",
    "unit_demand",
    "brute_knapsack",
    "build_nq_from_knapsack",
    "is_competitive_equilibrium",
    "is_partially_stable",
    "is_stable",
    "nq_equilibrium_bundle",
]

__version__ = "0.1.0"
