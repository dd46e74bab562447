from __future__ import annotations

import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from anytime_tamp.abstraction import build_abstract_model  # noqa: E402
from anytime_tamp.geom import parse_workspace  # noqa: E402
from anytime_tamp.harness import shipped_scenario  # noqa: E402
from anytime_tamp.lang import parse_domain, parse_problem  # noqa: E402
from anytime_tamp.ssp import SSPInstance, Transition  # noqa: E402

DATA = Path(__file__).resolve().parents[1] / "src" / "anytime_tamp" / "data"

# Two-location toy domain with a single stochastic inspect action.
TOY_DOMAIN = """
(define (domain toy)
  (:types Structure)
  (:predicates (faultLocated ?s - Structure) (hasFault ?s - Structure)
               (collisionFree ?tr - Trajectory))
  (:functions (batteryLevel))
  (:numeric-tests (batterySufficient ?tr - Trajectory :fluent batteryLevel))
  (:action inspect
    :parameters (?s - Structure ?tr - Trajectory)
    :precondition (and (hasFault ?s) (batterySufficient ?tr) (collisionFree ?tr))
    :effect (and (decrease (batteryLevel) (cost ?tr))
                 (probabilistic 0.8 (faultLocated ?s)
                                0.2 (not (faultLocated ?s))))))
"""

TOY_PROBLEM = """
(define (problem toy-1)
  (:domain toy)
  (:objects LeftWing - Structure)
  (:init (hasFault LeftWing) (= (batteryLevel) 100))
  (:goal (faultLocated LeftWing))
  (:horizon 3))
"""


# Four thin walls enclosing the LeftWingNear region (rect 36 26 40 31).
LEFT_WING_WALLS = """
obstacle wall_w rect 35 25 35.5 32
obstacle wall_e rect 40.5 25 41 32
obstacle wall_s rect 35 25 41 25.5
obstacle wall_n rect 35 31.5 41 32
"""


def walled_hangar():
    return parse_workspace((DATA / "hangar.wspc").read_text() + LEFT_WING_WALLS)


def ssp_from_spec(states, goals, actions, horizon, initial=None) -> SSPInstance:
    transitions = {}
    for s, acts in actions.items():
        transitions[s] = tuple(
            Transition((f"a{j}",), Fraction(c), tuple((p, t, k) for k, (p, t) in enumerate(outs)))
            for j, (c, outs) in enumerate(acts)
        )
    return SSPInstance(tuple(states), states[0] if initial is None else initial, frozenset(goals), horizon, transitions)


@pytest.fixture(scope="session")
def toy_domain():
    return parse_domain(TOY_DOMAIN)


@pytest.fixture(scope="session")
def toy_problem(toy_domain):
    return parse_problem(TOY_PROBLEM, toy_domain)


@pytest.fixture(scope="session")
def scenario():
    return shipped_scenario("hangar")


@pytest.fixture(scope="session")
def hangar_domain(scenario):
    return scenario.load_domain()


@pytest.fixture(scope="session")
def hangar_problem(scenario, hangar_domain):
    return scenario.load_problem(hangar_domain)


@pytest.fixture(scope="session")
def hangar_workspace(scenario):
    return scenario.load_workspace()


@pytest.fixture(scope="session")
def hangar_model(hangar_domain, hangar_problem):
    return build_abstract_model(hangar_domain, hangar_problem)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


SWEEP_RATES = (0.05, 0.1, 0.2)
SWEEP_SEEDS = (1, 2, 3, 4, 5)


def run_shipped_sweep(out_dir):
    from anytime_tamp.anytime import AnytimeConfig
    from anytime_tamp.harness import sweep_failure_rates

    return sweep_failure_rates(shipped_scenario("hangar"), SWEEP_RATES, SWEEP_SEEDS, AnytimeConfig(threshold=1.0), out_dir)


@pytest.fixture(scope="session")
def shipped_sweep(tmp_path_factory):
    """Full sweep of the shipped scenario at t = 1, shared by the harness and acceptance tests."""
    out = tmp_path_factory.mktemp("sweep_a")
    return out, run_shipped_sweep(out)


@pytest.fixture(scope="session")
def ample_battery_scenario(tmp_path_factory):
    """The shipped scenario with enough charge that every branch is concretely feasible."""
    from dataclasses import replace

    from anytime_tamp.geom import BatteryModel

    sc = shipped_scenario("hangar")
    d = tmp_path_factory.mktemp("ample")
    text = sc.problem_file.read_text().replace("(= (batteryLevel) 400)", "(= (batteryLevel) 5000)")
    assert "5000" in text
    (d / "hangar.sprob").write_text(text)
    return replace(sc, problem_file=d / "hangar.sprob", battery=BatteryModel(capacity=5000.0, reserve=60.0))
