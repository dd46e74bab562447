from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anytime_tamp.abstraction import (
    AbstractState,
    ConcreteState,
    EnvelopeRange,
    Generator,
    GeneratorExhausted,
    RegionRange,
    StayRange,
    abstract_action,
    abstract_state,
    build_abstract_model,
    concretizations,
    log_path_cost_estimate,
    path_cost_estimate,
    retained_predicates,
)
from anytime_tamp.geom import inspection_trajectory, load_workspace
from anytime_tamp.lang import GroundedFact
from anytime_tamp.ssp import BATTERY_FLAG, build_ssp

from conftest import DATA

F = GroundedFact
HANGAR_WS = load_workspace(DATA / "hangar.wspc")


def test_projection_drops_unretained_predicates():
    x = ConcreteState(frozenset({F("at", ("Dock",)), F("hasFault", ("LeftWing",))}))
    assert abstract_state(x, {"hasFault"}) == AbstractState(frozenset({F("hasFault", ("LeftWing",))}))


def test_identity_when_everything_is_retained():
    facts = frozenset({F("at", ("Dock",)), F("isDock", ("Dock",))})
    assert abstract_state(ConcreteState(facts)).facts == facts


def test_states_differing_only_in_battery_are_equal():
    facts = frozenset({F("at", ("Dock",))})
    a = abstract_state(ConcreteState(facts, (("batteryLevel", 400.0),)))
    b = abstract_state(ConcreteState(facts, (("batteryLevel", 12.5),)))
    assert a == b and hash(a) == hash(b)


def test_retained_set_of_hangar_domain(hangar_domain):
    r = retained_predicates(hangar_domain)
    assert "collisionFree" not in r and "inspects" not in r
    assert {"at", "faultLocated", "hasFault", "batterySufficient"} <= r


def test_abstract_inspect(toy_domain):
    a = abstract_action(toy_domain.action("inspect"), toy_domain)
    assert a.params == (("?s", "Structure"),)
    assert sorted(str(l) for l in a.precondition) == ["(batterySufficient)", "(hasFault ?s)"]
    assert [p for p, _ in a.outcomes] == [Fraction(4, 5), Fraction(1, 5)]
    assert [str(l) for l in a.outcomes[0][1]] == ["(faultLocated ?s)"]
    assert {"batteryLevel", "batterySufficient"} <= a.affected_unknown


def test_collision_free_removed_from_move(hangar_domain):
    a = abstract_action(hangar_domain.action("move"), hangar_domain)
    preds = {l.predicate for l in a.precondition}
    assert "collisionFree" not in preds
    assert "batterySufficient" in preds
    assert all(not l.args for l in a.precondition if l.predicate == "batterySufficient")


def test_recharge_restores_battery_flag(hangar_model):
    rc = [a for a in hangar_model.actions if a.name == "recharge"]
    assert rc and all(BATTERY_FLAG in o.add for a in rc for o in a.outcomes)


fact_pool = [F("p", (o,)) for o in "abcd"] + [F("q", (o,)) for o in "ab"] + [F("r")]


@given(
    st.frozensets(st.sampled_from(fact_pool)),
    st.frozensets(st.sampled_from(fact_pool)),
    st.frozensets(st.sampled_from(["p", "q", "r"])),
    st.floats(0, 500),
    st.floats(0, 500),
)
@settings(max_examples=200)
def test_equivalence_iff_agreement_on_retained(f1, f2, retained, b1, b2):
    x1 = ConcreteState(f1, (("batteryLevel", b1),))
    x2 = ConcreteState(f2, (("batteryLevel", b2),))
    agree = all((f in f1) == (f in f2) for f in fact_pool if f.predicate in retained)
    assert (abstract_state(x1, retained) == abstract_state(x2, retained)) == agree


def test_optimism_over_all_hangar_transitions(hangar_model):
    ssp = build_ssp(hangar_model)
    checked = 0
    for s in ssp.states:
        for a in hangar_model.actions:
            if not a.applicable(s):
                continue
            for t, _, _ in a.successors(s):
                checked += 1
                if s.holds(BATTERY_FLAG):
                    assert t.holds(BATTERY_FLAG)
    assert checked > 0


def test_generator_determinism(hangar_workspace):
    def draw():
        g = Generator(None, 5, RegionRange("LeftWingNear"), hangar_workspace, np.random.default_rng(42))
        return list(concretizations(g))

    a, b = draw(), draw()
    assert a == b and len(a) == 5
    region = hangar_workspace.regions["LeftWingNear"]
    assert all(len(binding) == 1 and region.contains(binding[0]) for binding in a)


def test_generator_budget_zero_is_exhausted(hangar_workspace):
    g = Generator(None, 0, RegionRange("Dock"), hangar_workspace, np.random.default_rng(0))
    with pytest.raises(GeneratorExhausted):
        g.next()
    assert list(concretizations(g)) == []


def test_generator_stops_after_budget(hangar_workspace):
    g = Generator(None, 3, RegionRange("Dock"), hangar_workspace, np.random.default_rng(0))
    for _ in range(3):
        g.next()
    assert g.remaining == 0
    with pytest.raises(GeneratorExhausted):
        g.next()


def test_generator_rejects_negative_budget(hangar_workspace):
    with pytest.raises(ValueError):
        Generator(None, -1, StayRange(), hangar_workspace, np.random.default_rng(0))


def test_inspection_generator_waypoints_ordered(hangar_workspace):
    comp = hangar_workspace.components["LeftWing"]
    g = Generator(None, 10, EnvelopeRange("LeftWing"), hangar_workspace, np.random.default_rng(7))
    for binding in concretizations(g):
        assert len(binding) == 5
        proj = [comp.axis_projection(p) for p in binding]
        assert proj == sorted(proj)
        assert all(hangar_workspace.pose_free(p) for p in binding)


def test_stay_generator_returns_context(hangar_workspace):
    g = Generator(None, 2, StayRange(), hangar_workspace, np.random.default_rng(0))
    assert g.next((3.0, 4.0)) == ((3.0, 4.0),)
    with pytest.raises(ValueError):
        g.next()


def test_path_cost_is_product_of_measures(hangar_workspace):
    gens = [
        Generator(None, 10, RegionRange("LeftWingNear"), hangar_workspace, np.random.default_rng(0)),
        Generator(None, 4, EnvelopeRange("LeftWing"), hangar_workspace, np.random.default_rng(0)),
        Generator(None, 1, StayRange(), hangar_workspace, np.random.default_rng(0)),
    ]
    ref = 14.0
    expected = (10 * 20.0 / ref) * (4 * 2 * 5.0 * math.hypot(3, 11) / ref) * 1.0
    assert path_cost_estimate(gens, ref) == pytest.approx(expected, rel=1e-12)
    assert path_cost_estimate(gens, ref) > 0
    assert log_path_cost_estimate(gens, ref) == pytest.approx(math.log(expected), rel=1e-12)
    with pytest.raises(ValueError):
        path_cost_estimate([], ref)


@given(st.lists(st.tuples(st.integers(1, 20), st.sampled_from(["Dock", "LeftWingNear", "RightNacelleFar"])), min_size=1, max_size=8))
@settings(max_examples=50, deadline=None)
def test_log_cost_matches_product(specs):
    gens = [Generator(None, b, RegionRange(r), HANGAR_WS, np.random.default_rng(0)) for b, r in specs]
    assert math.log(path_cost_estimate(gens, 3.0)) == pytest.approx(log_path_cost_estimate(gens, 3.0), rel=1e-9, abs=1e-9)


def test_pruned_grounding_shape(hangar_model):
    assert len(hangar_model.actions) == 69
    assert hangar_model.initial.holds(BATTERY_FLAG)


def test_surjectivity_witnesses(hangar_model, hangar_workspace, scenario):
    """Every reachable abstract location has a free concrete pose the generators can produce."""
    ssp = build_ssp(hangar_model)
    rng = np.random.default_rng(3)
    locations = {f.args[0] for s in ssp.states for f in s.facts if f.predicate == "at"}
    assert locations
    for region in locations:
        g = Generator(None, 1, RegionRange(region), hangar_workspace, rng)
        (pose,) = g.next()
        assert hangar_workspace.region_of(pose) == region and hangar_workspace.pose_free(pose)
        x = ConcreteState(frozenset({F("at", (region,))}), (("batteryLevel", 100.0),))
        assert abstract_state(x, hangar_model.retained).holds(F("at", (region,)))
    for comp in ("LeftWing", "RightNacelle"):
        assert inspection_trajectory(comp, hangar_workspace, rng) is not None


def test_abstract_model_for_toy(toy_domain, toy_problem):
    m = build_abstract_model(toy_domain, toy_problem)
    (a,) = m.actions
    succ = a.successors(m.initial)
    assert [p for _, p, _ in succ] == [Fraction(4, 5), Fraction(1, 5)]
    assert m.is_goal(succ[0][0]) and not m.is_goal(succ[1][0])
