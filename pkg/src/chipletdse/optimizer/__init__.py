"""Two-level search: Pareto local search per composition, BO over compositions."""

from .gp import GpModel, expected_improvement, gp_expected_improvement
from .inner import InnerResult, brute_force_front, enumerate_designs, inner_moo_solve
from .outer import (BestEdp, CompositionSpace, CoOptResult, OuterObjective, TraceRow, best_edp,
                    co_optimize, evaluations_to_optimum, exhaustive_optimum, random_search)
from .pareto import ParetoArchive, crowding_distance, dominates
from .problem import Constraints, Design, DesignPoint, Evaluation, Evaluator, Problem

__all__ = [
    "BestEdp", "CoOptResult", "CompositionSpace", "Constraints", "Design", "DesignPoint",
    "Evaluation", "Evaluator", "GpModel", "InnerResult", "OuterObjective", "ParetoArchive",
    "Problem", "TraceRow", "best_edp", "brute_force_front", "co_optimize", "crowding_distance",
    "dominates", "enumerate_designs", "evaluations_to_optimum", "exhaustive_optimum",
    "expected_improvement", "gp_expected_improvement", "inner_moo_solve", "random_search",
]
