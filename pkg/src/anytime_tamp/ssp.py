"""Finite-horizon stochastic shortest-path solving and policy trees.

Values follow backward induction over steps-to-go ``i``::

    V(s, 0) = R(s)
    V(s, i) = R(s) + max_a [ -(c(a) - 1) + sum_s' T(s, a, s') V(s', i - 1) ]

with ``R(s) = 0`` on absorbing goal states and ``-1`` elsewhere, so an
action of unit cost contributes exactly the state reward.  Non-goal states
without applicable actions are dead ends with value ``-inf``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Hashable, Iterable

from .abstraction import AbstractAction, AbstractModel, AbstractState
from .lang import GroundedFact

#: argmax candidates within this distance of the best value count as ties
TIE_TOLERANCE = 1e-9

UNREFINED = "unrefined"
REFINED = "refined"
INVALIDATED = "invalidated"

INSUFFICIENT_BATTERY = "insufficientBattery"
NO_COLLISION_FREE_PATH = "noCollisionFreePath"

BATTERY_FLAG = GroundedFact("batterySufficient")


class SSPError(Exception):
    pass


class StateExplosion(SSPError):
    """Forward exploration exceeded the configured state cap."""


class DeadEndError(SSPError):
    """A non-goal state reachable under the policy has no finite-value action."""


class UnsolvableError(SSPError):
    """The goal cannot be reached within the horizon."""


class UnsolvableAfterAdjustment(UnsolvableError):
    """No goal-reaching policy exists once a failure reason has been injected."""


@dataclass(frozen=True)
class Transition:
    """One applicable action in one state.

    ``outcomes`` holds ``(probability, next_state, label)`` triples; the label
    is whatever the caller uses to identify the outcome (an
    :class:`~anytime_tamp.abstraction.AbstractOutcome` for abstract models).
    """

    key: tuple
    cost: Fraction
    outcomes: tuple[tuple[Fraction, Hashable, Any], ...]
    action: Any = None


@dataclass
class SSPInstance:
    states: tuple
    initial: Hashable
    goals: frozenset
    horizon: int
    transitions: dict

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")
        self.index = {s: i for i, s in enumerate(self.states)}
        for s, trs in self.transitions.items():
            for tr in trs:
                if sum(p for p, _, _ in tr.outcomes) != 1:
                    raise ValueError(f"transition {tr.key} in {s} does not sum to 1")

    def reward(self, s) -> int:
        return 0 if s in self.goals else -1

    def actions(self, s) -> tuple[Transition, ...]:
        return self.transitions.get(s, ())


def _transition(action: AbstractAction, state: AbstractState) -> Transition:
    outs = tuple((o.probability, action.apply(state, o), o) for o in action.outcomes if o.probability > 0)
    return Transition(action.key, action.cost, outs, action)


def build_ssp(
    model: AbstractModel,
    initial: AbstractState | None = None,
    horizon: int | None = None,
    excluded: Iterable[tuple] = (),
    state_cap: int = 100_000,
    clock=None,
) -> SSPInstance:
    """Breadth-first exploration of the abstract model to depth ``horizon``."""
    s0 = model.initial if initial is None else initial
    h = model.problem.horizon if horizon is None else horizon
    excluded = frozenset(excluded)
    actions = [a for a in model.actions if a.key not in excluded]
    depth = {s0: 0}
    order = [s0]
    queue = deque([s0])
    transitions: dict = {}
    goals = set()
    while queue:
        s = queue.popleft()
        if model.is_goal(s):
            goals.add(s)
            continue
        if depth[s] >= h:
            continue
        trs = []
        for a in actions:
            if clock is not None:
                clock.tick()
            if a.applicable(s):
                tr = _transition(a, s)
                trs.append(tr)
                for _, t, _ in tr.outcomes:
                    if t not in depth:
                        depth[t] = depth[s] + 1
                        order.append(t)
                        if len(order) > state_cap:
                            raise StateExplosion(f"more than {state_cap} reachable abstract states")
                        queue.append(t)
        transitions[s] = tuple(trs)
    # states reached only at the horizon still need their goal status
    goals |= {s for s in order if model.is_goal(s)}
    return SSPInstance(tuple(order), s0, frozenset(goals), h, transitions)


@dataclass
class ValueTable:
    """``values[i][k]`` is the value of ``ssp.states[k]`` with ``i`` steps to go."""

    ssp: SSPInstance
    values: list[list[float]]

    def V(self, s, i: int) -> float:
        return self.values[i][self.ssp.index[s]]

    @property
    def horizon(self) -> int:
        return len(self.values) - 1


def q_value(ssp: SSPInstance, tr: Transition, prev: list[float]) -> float:
    """Bracketed term of the backup for one action."""
    idx = ssp.index
    total = 0.0
    for p, t, _ in tr.outcomes:
        v = prev[idx[t]]
        if v == -math.inf:
            return -math.inf
        total += float(p) * v
    return total - float(tr.cost - 1)


def backup(ssp: SSPInstance, s, prev: list[float], clock=None) -> float:
    if s in ssp.goals:
        return 0.0
    best = -math.inf
    for tr in ssp.actions(s):
        if clock is not None:
            clock.tick()
        q = q_value(ssp, tr, prev)
        if q > best:
            best = q
    return ssp.reward(s) + best


def solve(ssp: SSPInstance, clock=None) -> ValueTable:
    values = [[float(ssp.reward(s)) for s in ssp.states]]
    for _ in range(ssp.horizon):
        prev = values[-1]
        values.append([backup(ssp, s, prev, clock) for s in ssp.states])
    return ValueTable(ssp, values)


def greedy_transition(ssp: SSPInstance, vt: ValueTable, s, i: int) -> Transition | None:
    """Argmax action with ``i`` steps to go; near-ties go to the smallest key."""
    prev = vt.values[i - 1]
    best_q = -math.inf
    scored = []
    for tr in ssp.actions(s):
        q = q_value(ssp, tr, prev)
        scored.append((q, tr))
        best_q = max(best_q, q)
    if best_q == -math.inf:
        return None
    return min((tr for q, tr in scored if q >= best_q - TIE_TOLERANCE), key=lambda tr: tr.key)


# ---------------------------------------------------------------------------
# Policy trees


@dataclass
class PolicyNode:
    id: int
    parent: int | None
    depth: int
    state: Any
    outcome_probability: Fraction
    path_probability: Fraction
    #: the outcome of the parent's action that leads here (``None`` at the root)
    outcome: Any = None
    action: Any = None
    children: list[int] = field(default_factory=list)
    status: str = UNREFINED
    is_goal: bool = False
    #: action keys removed from the model for this node's subtree
    excluded: frozenset = frozenset()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def action_key(self):
        if self.action is None:
            return None
        return self.action.key if hasattr(self.action, "key") else self.action


def _action_label(action) -> str:
    if action is None:
        return "-"
    if isinstance(action, AbstractAction):
        return str(action)
    if isinstance(action, Transition):
        return str(action.key)
    return str(action)


class PolicyTree:
    def __init__(self, horizon: int):
        self.horizon = horizon
        self.nodes: dict[int, PolicyNode] = {}
        self.root_id: int | None = None
        self.next_id = 0

    @property
    def root(self) -> PolicyNode:
        return self.nodes[self.root_id]

    def _new_id(self) -> int:
        i = self.next_id
        self.next_id += 1
        return i

    def __len__(self) -> int:
        return len(self.nodes)

    def children(self, node: PolicyNode) -> list[PolicyNode]:
        return [self.nodes[c] for c in node.children]

    def leaves(self) -> list[PolicyNode]:
        return [n for n in self.nodes.values() if n.is_leaf]

    def path_to(self, node: PolicyNode | int) -> list[PolicyNode]:
        n = self.nodes[node] if isinstance(node, int) else node
        path = [n]
        while n.parent is not None:
            n = self.nodes[n.parent]
            path.append(n)
        path.reverse()
        return path

    def subtree_ids(self, node_id: int) -> list[int]:
        out = []
        stack = [node_id]
        while stack:
            i = stack.pop()
            out.append(i)
            stack.extend(reversed(self.nodes[i].children))
        return out

    def lines(self) -> list[str]:
        """One tab-separated line per live node, in id order."""
        out = ["# id\tparent\tdepth\taction\toutcome_probability\tpath_probability\tstatus"]
        for i in sorted(self.nodes):
            n = self.nodes[i]
            out.append(
                "\t".join(
                    [
                        str(n.id),
                        "-" if n.parent is None else str(n.parent),
                        str(n.depth),
                        _action_label(n.action),
                        str(n.outcome_probability),
                        str(n.path_probability),
                        n.status,
                    ]
                )
            )
        return out

    def serialize(self) -> str:
        return "\n".join(self.lines()) + "\n"


def parse_tree_lines(text: str) -> list[dict]:
    """Read a serialized tree back into plain records."""
    rows = []
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        i, parent, depth, action, op, pp, status = line.split("\t")
        rows.append(
            {
                "id": int(i),
                "parent": None if parent == "-" else int(parent),
                "depth": int(depth),
                "action": None if action == "-" else action,
                "outcome_probability": Fraction(op),
                "path_probability": Fraction(pp),
                "status": status,
            }
        )
    return rows


def _unroll(
    tree: PolicyTree,
    ssp: SSPInstance,
    vt: ValueTable,
    node: PolicyNode,
    node_cap: int,
    clock,
) -> None:
    """Expand ``node`` (already registered) depth-first following the greedy policy."""
    cache: dict = {}
    stack = [node]
    base_depth = node.depth
    while stack:
        n = stack.pop()
        if clock is not None:
            clock.tick()
        n.is_goal = n.state in ssp.goals
        i = ssp.horizon - (n.depth - base_depth)
        if n.is_goal or i <= 0:
            continue
        key = (n.state, i)
        if key not in cache:
            cache[key] = greedy_transition(ssp, vt, n.state, i)
        tr = cache[key]
        if tr is None:
            raise DeadEndError(f"no action with finite value in state {n.state} at depth {n.depth}")
        n.action = tr.action if tr.action is not None else tr.key
        kids = []
        for p, t, label in tr.outcomes:
            c = PolicyNode(
                id=tree._new_id(),
                parent=n.id,
                depth=n.depth + 1,
                state=t,
                outcome_probability=p,
                path_probability=n.path_probability * p,
                outcome=label,
                excluded=n.excluded,
            )
            tree.nodes[c.id] = c
            n.children.append(c.id)
            kids.append(c)
            if len(tree.nodes) > node_cap:
                raise StateExplosion(f"policy tree exceeds {node_cap} nodes")
        stack.extend(reversed(kids))


def extract_policy_tree(ssp: SSPInstance, vt: ValueTable, node_cap: int = 1_000_000, clock=None) -> PolicyTree:
    """Unroll the greedy non-stationary policy from the initial state."""
    tree = PolicyTree(ssp.horizon)
    root = PolicyNode(tree._new_id(), None, 0, ssp.initial, Fraction(1), Fraction(1))
    tree.nodes[root.id] = root
    tree.root_id = root.id
    _unroll(tree, ssp, vt, root, node_cap, clock)
    return tree


def goal_probability(tree: PolicyTree, node_id: int | None = None) -> Fraction:
    """Probability mass of goal leaves below ``node_id``, relative to that node."""
    start = tree.nodes[tree.root_id if node_id is None else node_id]
    total = sum(
        (tree.nodes[i].path_probability for i in tree.subtree_ids(start.id) if tree.nodes[i].is_goal and tree.nodes[i].is_leaf),
        Fraction(0),
    )
    return total / start.path_probability


def plan(model: AbstractModel, clock=None, node_cap: int = 1_000_000) -> PolicyTree:
    """Solve the abstract model and unroll its policy; the goal must be reachable."""
    ssp = build_ssp(model, clock=clock)
    vt = solve(ssp, clock)
    tree = extract_policy_tree(ssp, vt, node_cap, clock)
    if goal_probability(tree) == 0:
        raise UnsolvableError("goal unreachable within the horizon")
    return tree


# ---------------------------------------------------------------------------
# Replanning


@dataclass(frozen=True)
class FailureReason:
    kind: str
    node_id: int
    #: minimum battery deficit (insufficientBattery) or failing action key (noCollisionFreePath)
    payload: Any = None
    #: key of the action whose generator was exhausted, if any
    action_key: tuple | None = None

    def __post_init__(self):
        if self.kind not in (INSUFFICIENT_BATTERY, NO_COLLISION_FREE_PATH):
            raise ValueError(f"unknown failure kind {self.kind!r}")


def replan(
    tree: PolicyTree,
    model: AbstractModel,
    node_id: int,
    reason: FailureReason,
    clock=None,
    node_cap: int = 1_000_000,
) -> list[int]:
    """Re-solve from ``node_id`` with ``reason`` injected and splice the result in place.

    The node keeps its id, parent, depth and probabilities; its descendants
    are replaced by freshly numbered nodes.  Returns the ids that were
    removed.  Goal nodes never fail, so replanning one is a no-op.
    """
    node = tree.nodes[node_id]
    if node.status == INVALIDATED:
        raise ValueError("cannot replan at an invalidated node")
    if node.is_goal:
        return []
    state = node.state
    excluded = node.excluded
    if reason.kind == INSUFFICIENT_BATTERY and BATTERY_FLAG in state.facts:
        state = state.without_fact(BATTERY_FLAG)
    elif reason.action_key is not None:
        excluded = excluded | {reason.action_key}
    elif reason.kind == NO_COLLISION_FREE_PATH and reason.payload is not None:
        excluded = excluded | {reason.payload}

    remaining = tree.horizon - node.depth
    ssp = build_ssp(model, initial=state, horizon=remaining, excluded=excluded, clock=clock)
    vt = solve(ssp, clock)
    sub = PolicyTree(remaining)
    sub.next_id = tree.next_id
    new_root = replace(node, state=state, action=None, children=[], excluded=excluded, is_goal=False)
    sub.nodes[new_root.id] = new_root
    sub.root_id = new_root.id
    try:
        _unroll(sub, ssp, vt, new_root, node_cap, clock)
    except DeadEndError as e:
        raise UnsolvableAfterAdjustment(str(e)) from None
    if new_root.action is None:
        raise UnsolvableAfterAdjustment(f"no applicable action at node {node_id}")
    if goal_probability(sub, new_root.id) == 0:
        raise UnsolvableAfterAdjustment(f"goal unreachable from node {node_id} after {reason.kind}")

    removed = tree.subtree_ids(node_id)[1:]
    for i in removed:
        tree.nodes[i].status = INVALIDATED
        del tree.nodes[i]
    tree.nodes.update(sub.nodes)
    tree.next_id = sub.next_id
    return removed
