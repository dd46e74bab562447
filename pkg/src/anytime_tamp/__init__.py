"""Anytime synthesis of task and motion policies for stochastic domains.

An abstract stochastic shortest-path model is solved and unrolled into a
contingent policy tree; root-to-leaf paths are then refined with motion
plans in order of probability per estimated cost, and geometric failures
are fed back into the abstract model.
"""

from .abstraction import AbstractState, abstract_action, abstract_state, build_abstract_model, concretizations
from .anytime import (
    AnytimeConfig,
    LeafQueue,
    Refiner,
    atm_mdp_solve,
    compute_proportion_refined,
    estimate_path_costs,
    refine_path,
)
from .harness import Scenario, load_scenario, run_scenario, shipped_scenario, sweep_failure_rates
from .lang import ground_actions, parse_domain, parse_problem
from .ssp import build_ssp, extract_policy_tree, replan, solve

__version__ = "0.1.0"

__all__ = [
    "AbstractState",
    "AnytimeConfig",
    "LeafQueue",
    "Refiner",
    "Scenario",
    "abstract_action",
    "abstract_state",
    "atm_mdp_solve",
    "build_abstract_model",
    "build_ssp",
    "compute_proportion_refined",
    "concretizations",
    "estimate_path_costs",
    "extract_policy_tree",
    "ground_actions",
    "load_scenario",
    "parse_domain",
    "parse_problem",
    "refine_path",
    "replan",
    "run_scenario",
    "shipped_scenario",
    "solve",
    "sweep_failure_rates",
]
