"""Predicate and action abstraction plus concretization generators.

Continuous action arguments are projected out of the model.  Literals that
only constrain a continuous argument (``collisionFree(tr)``) disappear from
the abstract action; numeric tests such as ``batterySufficient(tr)`` lose
their continuous arguments and become zero-arity Boolean facts.  Effects that
cannot be evaluated abstractly (numeric decreases and everything that reads
the decreased fluent) are recorded as *affected-unknown* and treated
optimistically: they leave the abstract value untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Iterator

import numpy as np

from .geom import Pose, Workspace, sample_inspection_waypoints, sample_pose_in_region
from .lang import (
    CONTINUOUS_TYPES,
    ActionSchema,
    Domain,
    GroundedAction,
    GroundedFact,
    Literal,
    Problem,
    ground_actions,
    substitute,
)


@dataclass(frozen=True)
class AbstractState:
    """An equivalence class of concrete states: the true facts over the retained predicates."""

    facts: frozenset[GroundedFact]

    def holds(self, fact: GroundedFact) -> bool:
        return fact in self.facts

    def with_fact(self, fact: GroundedFact) -> "AbstractState":
        return AbstractState(self.facts | {fact})

    def without_fact(self, fact: GroundedFact) -> "AbstractState":
        return AbstractState(self.facts - {fact})

    def key(self) -> tuple[GroundedFact, ...]:
        return tuple(sorted(self.facts))

    def __lt__(self, other: "AbstractState") -> bool:
        return self.key() < other.key()

    def __str__(self) -> str:
        return " ".join(str(f) for f in self.key())


@dataclass(frozen=True)
class ConcreteState:
    """A concrete state: true grounded facts and numeric fluent values."""

    facts: frozenset[GroundedFact]
    numeric: tuple[tuple[str, float], ...] = ()


def abstract_state(x: ConcreteState, retained: set[str] | frozenset[str] | None = None) -> AbstractState:
    """Project ``x`` onto the retained predicate names (``None`` keeps all of them)."""
    if retained is None:
        return AbstractState(frozenset(x.facts))
    return AbstractState(frozenset(f for f in x.facts if f.predicate in retained))


def retained_predicates(domain: Domain) -> frozenset[str]:
    """Predicates that survive abstraction: those with no continuous arguments, plus numeric tests."""
    keep = {p.name for p in domain.predicates if not any(t in CONTINUOUS_TYPES for _, t in p.params)}
    keep |= {t.schema.name for t in domain.numeric_tests}
    return frozenset(keep)


@dataclass(frozen=True)
class AbstractActionSchema:
    name: str
    params: tuple[tuple[str, str], ...]
    precondition: tuple[Literal, ...]
    outcomes: tuple[tuple[Fraction, tuple[Literal, ...]], ...]
    affected_unknown: frozenset[str]
    cost: Fraction
    source: ActionSchema


def abstract_action(schema: ActionSchema, domain: Domain) -> AbstractActionSchema:
    """Drop the continuous arguments of ``schema``."""
    cont = {v for v, _ in schema.continuous_params}
    tests = {t.schema.name: t for t in domain.numeric_tests}

    def project(lit: Literal) -> Literal | None:
        if not cont.intersection(lit.args):
            return lit
        if lit.predicate in tests:
            return Literal(lit.predicate, tuple(a for a in lit.args if a not in cont), lit.positive)
        return None

    precondition = tuple(p for p in (project(l) for l in schema.precondition) if p is not None)

    unknown: set[str] = set()
    restored: list[Literal] = []
    for eff in schema.numeric_effects:
        readers = {name for name, t in tests.items() if t.fluent == eff.fluent}
        if eff.op == "decrease":
            unknown.add(eff.fluent)
            unknown |= readers
        else:
            restored.extend(Literal(name) for name in sorted(readers))

    outcomes = []
    for o in schema.outcomes:
        kept = []
        for lit in o.effects:
            p = project(lit)
            if p is None or p.predicate in tests and p.args:
                unknown.add(lit.predicate)
            else:
                kept.append(p)
        outcomes.append((o.probability, tuple(kept) + tuple(restored)))

    determined = {l.predicate for _, effs in outcomes for l in effs}
    return AbstractActionSchema(
        name=schema.name,
        params=schema.discrete_params,
        precondition=precondition,
        outcomes=tuple(outcomes),
        affected_unknown=frozenset(unknown - determined),
        cost=schema.cost,
        source=schema,
    )


@dataclass(frozen=True)
class AbstractOutcome:
    probability: Fraction
    add: frozenset[GroundedFact]
    delete: frozenset[GroundedFact]


@dataclass(frozen=True)
class AbstractAction:
    """A grounded abstract action."""

    source: GroundedAction
    pre_pos: frozenset[GroundedFact]
    pre_neg: frozenset[GroundedFact]
    outcomes: tuple[AbstractOutcome, ...]
    affected_unknown: frozenset[str]
    cost: Fraction

    @property
    def name(self) -> str:
        return self.source.schema.name

    @property
    def args(self) -> tuple[str, ...]:
        return self.source.args

    @cached_property
    def key(self) -> tuple[str, tuple[str, ...]]:
        return self.source.key

    def __str__(self) -> str:
        return str(self.source)

    def applicable(self, state: AbstractState) -> bool:
        return self.pre_pos <= state.facts and not (self.pre_neg & state.facts)

    def apply(self, state: AbstractState, outcome: AbstractOutcome) -> AbstractState:
        # optimistic: affected-unknown predicates keep their current value
        return AbstractState((state.facts - outcome.delete) | outcome.add)

    def successors(self, state: AbstractState) -> list[tuple[AbstractState, Fraction, AbstractOutcome]]:
        return [(self.apply(state, o), o.probability, o) for o in self.outcomes]


def ground_abstract(schema: AbstractActionSchema, grounded: GroundedAction) -> AbstractAction:
    binding = dict(grounded.binding)

    def fact(lit: Literal) -> GroundedFact:
        return GroundedFact(lit.predicate, substitute(lit.args, binding))

    outcomes = tuple(
        AbstractOutcome(
            p,
            frozenset(fact(l) for l in effs if l.positive),
            frozenset(fact(l) for l in effs if not l.positive),
        )
        for p, effs in schema.outcomes
    )
    return AbstractAction(
        source=grounded,
        pre_pos=frozenset(fact(l) for l in schema.precondition if l.positive),
        pre_neg=frozenset(fact(l) for l in schema.precondition if not l.positive),
        outcomes=outcomes,
        affected_unknown=schema.affected_unknown,
        cost=schema.cost,
    )


def static_predicates(domain: Domain) -> frozenset[str]:
    """Predicates that no action ever changes."""
    touched = {l.predicate for a in domain.actions for o in a.outcomes for l in o.effects}
    touched |= {t.schema.name for t in domain.numeric_tests}
    return frozenset(p.name for p in domain.predicates) - touched


@dataclass(frozen=True)
class AbstractModel:
    domain: Domain
    problem: Problem
    actions: tuple[AbstractAction, ...]
    initial: AbstractState
    goal: frozenset[GroundedFact]
    retained: frozenset[str]

    def is_goal(self, state: AbstractState) -> bool:
        return self.goal <= state.facts


def build_abstract_model(domain: Domain, problem: Problem) -> AbstractModel:
    """Abstract every grounded action; drop groundings whose static preconditions never hold.

    Numeric tests start out true in the initial abstract state (the optimistic
    reading of a fully charged battery).
    """
    retained = retained_predicates(domain)
    schemas = {a.name: abstract_action(a, domain) for a in domain.actions}
    static = static_predicates(domain)
    init_facts = frozenset(f for f in problem.init if f.predicate in retained)
    init_facts |= {GroundedFact(t.schema.name) for t in domain.numeric_tests}
    actions = []
    for g in ground_actions(domain, problem):
        a = ground_abstract(schemas[g.schema.name], g)
        if any(f.predicate in static and f not in init_facts for f in a.pre_pos):
            continue
        if any(f.predicate in static and f in init_facts for f in a.pre_neg):
            continue
        actions.append(a)
    actions.sort(key=lambda a: a.key)
    return AbstractModel(
        domain=domain,
        problem=problem,
        actions=tuple(actions),
        initial=AbstractState(init_facts),
        goal=frozenset(problem.goal),
        retained=retained,
    )


# ---------------------------------------------------------------------------
# Generators


class GeneratorExhausted(Exception):
    """The generator used up its sampling budget."""


@dataclass(frozen=True)
class RegionRange:
    """Target poses drawn uniformly from a named region."""

    region: str

    def area(self, w: Workspace) -> float:
        return w.regions[self.region].area


@dataclass(frozen=True)
class EnvelopeRange:
    """Five inspection waypoints drawn from a component's envelope."""

    component: str

    def area(self, w: Workspace) -> float:
        return w.components[self.component].envelope_area


@dataclass(frozen=True)
class StayRange:
    """No continuous choice: the action is executed in place."""

    def area(self, w: Workspace) -> float:
        return 0.0


class Generator:
    """Budgeted, seeded sampler of continuous bindings for one abstract action.

    Each binding is a tuple of target poses that a trajectory must visit in
    order (one pose for moves, five for inspections, the current pose for
    in-place actions).
    """

    def __init__(self, action: AbstractAction | None, budget: int, range_, workspace: Workspace, rng: np.random.Generator):
        if budget < 0:
            raise ValueError("budget must be non-negative")
        self.action = action
        self.budget = budget
        self.range = range_
        self.workspace = workspace
        self.rng = rng
        self.drawn = 0

    @property
    def remaining(self) -> int:
        return self.budget - self.drawn

    def next(self, context: Pose | None = None) -> tuple[Pose, ...]:
        if self.drawn >= self.budget:
            raise GeneratorExhausted(str(self.action) if self.action else "generator")
        self.drawn += 1
        r = self.range
        if isinstance(r, RegionRange):
            return (sample_pose_in_region(r.region, self.workspace, self.rng),)
        if isinstance(r, EnvelopeRange):
            return sample_inspection_waypoints(r.component, self.workspace, self.rng)
        if context is None:
            raise ValueError("in-place generator needs the current pose")
        return (context,)

    def measure(self, reference_area: float) -> float:
        """Size of the parameter range this generator covers."""
        if isinstance(self.range, StayRange):
            return 1.0
        return self.budget * self.range.area(self.workspace) / reference_area


def concretizations(g: Generator, context: Pose | None = None) -> Iterator[tuple[Pose, ...]]:
    """Lazily yield up to ``g.budget`` bindings."""
    while True:
        try:
            yield g.next(context)
        except GeneratorExhausted:
            return


def path_cost_estimate(generators, reference_area: float) -> float:
    """Product of the generator range measures along a path."""
    generators = list(generators)
    if not generators:
        raise ValueError("path must be non-empty")
    cost = 1.0
    for g in generators:
        cost *= g.measure(reference_area)
    return cost


def log_path_cost_estimate(generators, reference_area: float) -> float:
    return math.fsum(math.log(g.measure(reference_area)) for g in generators)
