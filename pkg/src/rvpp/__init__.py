"""Robust day-ahead energy and reserve bidding for a renewable virtual power plant."""

from rvpp.assessment import budget_sweep, evaluate_bids, generate_scenarios
from rvpp.baseline import solve_energy_robust
from rvpp.builder import assemble
from rvpp.instance import RvppInstance, UncertaintyBudgets, validate_instance
from rvpp.io import load_instance, save_instance
from rvpp.oracle import certify_max_min
from rvpp.solution import solve_instance
from rvpp.solvers import SolveOptions, solve

__version__ = "0.1.0"

__all__ = [
    "RvppInstance",
    "SolveOptions",
    "UncertaintyBudgets",
    "assemble",
    "budget_sweep",
    "certify_max_min",
    "evaluate_bids",
    "generate_scenarios",
    "load_instance",
    "save_instance",
    "solve",
    "solve_energy_robust",
    "solve_instance",
    "validate_instance",
]
