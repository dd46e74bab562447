"""Anytime refinement of an abstract policy tree into motion plans.

The outer loop repeatedly picks the unrefined root-to-leaf path with the
largest ratio of path probability to estimated refinement cost and tries to
realize every edge on it with a motion plan.  A node's entry in the partial
trajectory map holds the trajectory that executes the parent's action with
the outcome leading to that node; the root's entry is the zero-length
trajectory at the initial pose.

When an edge cannot be realized within its generator budget, a biased coin
decides between replanning the abstract policy below the parent (with a
failure reason injected) and backtracking (discarding the parent's own
trajectory so that it is re-sampled).  Neither branch is allowed to discard
a fully refined path, which keeps the refined probability monotone.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .abstraction import (
    AbstractAction,
    AbstractModel,
    EnvelopeRange,
    Generator,
    GeneratorExhausted,
    RegionRange,
    StayRange,
    build_abstract_model,
)
from .clock import make_clock
from .geom import (
    BatteryModel,
    Pose,
    RegionUnsatisfiable,
    RRTConfig,
    Trajectory,
    Workspace,
    battery_cost,
    connect_waypoints,
    plan_motion,
)
from .lang import Domain, Problem
from .ssp import (
    BATTERY_FLAG,
    INSUFFICIENT_BATTERY,
    NO_COLLISION_FREE_PATH,
    REFINED,
    UNREFINED,
    FailureReason,
    PolicyNode,
    PolicyTree,
    UnsolvableAfterAdjustment,
    plan,
    replan,
)

DEFAULT_BUDGET = 10


@dataclass(frozen=True)
class TrajEntry:
    trajectory: Trajectory
    battery_after: float
    pose_after: Pose
    cost: float = 0.0
    inspection: bool = False


PartialTraj = dict  # node id -> TrajEntry


@dataclass(frozen=True)
class EdgeSpec:
    """How the edge into a node is concretized."""

    range: RegionRange | EnvelopeRange | StayRange
    budget: int
    restores: bool = False

    @property
    def inspection(self) -> bool:
        return isinstance(self.range, EnvelopeRange)


@dataclass(frozen=True)
class RefineOutcome:
    success: bool
    fragment: dict
    removed: frozenset = frozenset()
    failure_node: int | None = None
    failure_reason: FailureReason | None = None
    interrupted: bool = False
    stalled: bool = False
    #: the failure is a low-battery warning on an accepted edge, not an exhausted generator
    flagged: bool = False

    @property
    def kind(self) -> str:
        if self.success:
            return "success"
        if self.interrupted:
            return "interrupted"
        if self.stalled:
            return "stall"
        if self.failure_reason is not None:
            return "replan"
        return "backtrack"


@dataclass(frozen=True)
class AnytimeConfig:
    threshold: float = 1.0
    replan_bias: float = 0.5
    #: in clock seconds; ``None`` means unlimited
    resource_limit: float | None = None
    seed: int = 0
    max_backtracks: int = 5
    max_stalls: int = 3
    clock: str = "work"

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if not 0.0 <= self.replan_bias <= 1.0:
            raise ValueError("replan_bias must lie in [0, 1]")
        if self.resource_limit is not None and self.resource_limit <= 0:
            raise ValueError("resource_limit must be positive")
        if self.max_backtracks < 0 or self.max_stalls < 1:
            raise ValueError("invalid starvation limits")


@dataclass
class Refiner:
    """Concrete-layer parameters and helpers used while refining edges."""

    workspace: Workspace
    battery: BatteryModel = field(default_factory=BatteryModel)
    rrt: RRTConfig = field(default_factory=RRTConfig)
    budgets: dict = field(default_factory=dict)
    default_budget: int = DEFAULT_BUDGET
    reference_area: float | None = None
    initial_pose: Pose | None = None
    initial_battery: float | None = None
    clock: object = None

    def __post_init__(self):
        w = self.workspace
        if self.reference_area is None:
            self.reference_area = w.area
        if self.reference_area <= 0:
            raise ValueError("reference_area must be positive")
        if self.initial_pose is None:
            if w.docks:
                x0, y0, x1, y1 = w.regions[w.docks[0]].bbox
                self.initial_pose = Pose((x0 + x1) / 2, (y0 + y1) / 2)
            else:
                raise ValueError("initial_pose is required when the workspace has no dock")
        if self.initial_battery is None:
            self.initial_battery = self.battery.capacity
        self._specs: dict = {}

    def edge_spec(self, action: AbstractAction, outcome) -> EdgeSpec:
        key = (action.key, outcome)
        spec = self._specs.get(key)
        if spec is None:
            spec = self._make_spec(action, outcome)
            self._specs[key] = spec
        return spec

    def _make_spec(self, action: AbstractAction, outcome) -> EdgeSpec:
        schema = action.source.schema
        restores = any(e.op == "restore" for e in schema.numeric_effects)
        budget = int(self.budgets.get(schema.name, self.default_budget))
        w = self.workspace
        if not schema.continuous_params:
            return EdgeSpec(StayRange(), 1, restores)
        regions = sorted(a for f in outcome.add for a in f.args if a in w.regions)
        if regions:
            return EdgeSpec(RegionRange(regions[0]), budget, restores)
        comps = [a for a in action.args if a in w.components]
        if comps:
            return EdgeSpec(EnvelopeRange(comps[0]), budget, restores)
        return EdgeSpec(StayRange(), 1, restores)

    def measure(self, spec: EdgeSpec) -> float:
        if isinstance(spec.range, StayRange):
            return 1.0
        return spec.budget * spec.range.area(self.workspace) / self.reference_area

    def return_minimum(self, pose: Pose) -> float:
        """Charge needed to fly straight back to the dock."""
        return self.battery.cost_per_meter * self.workspace.dock_distance(pose)

    def root_entry(self) -> TrajEntry:
        p = self.initial_pose
        return TrajEntry(Trajectory((p,)), float(self.initial_battery), p)

    def trajectory_for(self, spec: EdgeSpec, start: Pose, binding, rng) -> Trajectory | None:
        if isinstance(spec.range, RegionRange):
            return plan_motion(start, binding[0], self.workspace, rng, config=self.rrt, clock=self.clock)
        if isinstance(spec.range, EnvelopeRange):
            tr = connect_waypoints((start,) + tuple(binding) + (start,), self.workspace, rng, self.rrt, self.clock)
            if tr is None:
                return None
            return Trajectory(tr.waypoints, tuple(binding))
        return Trajectory((start,))


# ---------------------------------------------------------------------------
# Queue and bookkeeping


class LeafQueue:
    """Max-priority queue on p/c; ties go to the smaller node id."""

    def __init__(self, entries=()):
        self._heap = []
        for node_id, p, c in entries:
            self.push(node_id, p, c)

    def push(self, node_id: int, p: float, c: float) -> None:
        if not (p > 0 and c > 0):
            raise ValueError("queue keys must be strictly positive")
        heapq.heappush(self._heap, (-(p / c), node_id, p, c))

    def pop(self) -> tuple[int, float, float]:
        _, node_id, p, c = heapq.heappop(self._heap)
        return node_id, p, c

    def __len__(self) -> int:
        return len(self._heap)

    def entries(self) -> list[tuple[int, float, float]]:
        return [(i, p, c) for _, i, p, c in sorted(self._heap)]


def refined_leaves(tree: PolicyTree, partial: PartialTraj) -> list[PolicyNode]:
    """Leaves whose whole root path has trajectories."""
    out = []
    stack = [tree.root_id] if tree.root_id in partial else []
    while stack:
        n = tree.nodes[stack.pop()]
        if n.is_leaf:
            out.append(n)
        stack.extend(c for c in n.children if c in partial)
    return out


def compute_proportion_refined(tree: PolicyTree, partial: PartialTraj) -> Fraction:
    return sum((n.path_probability for n in refined_leaves(tree, partial)), Fraction(0))


def fraction_nodes_refined(tree: PolicyTree, partial: PartialTraj) -> float:
    return sum(1 for i in tree.nodes if i in partial) / len(tree.nodes)


def estimate_path_costs(
    tree: PolicyTree, partial: PartialTraj, refiner: Refiner, skip: set | frozenset = frozenset()
) -> LeafQueue:
    """Queue of live leaves not yet fully refined; cost covers the unrefined edges only."""
    q = LeafQueue()
    stack = [(tree.root_id, 1.0, True)]
    while stack:
        i, c, done = stack.pop()
        n = tree.nodes[i]
        if i not in partial:
            done = False
            if n.parent is not None:
                parent = tree.nodes[n.parent]
                c *= refiner.measure(refiner.edge_spec(parent.action, n.outcome))
        if n.is_leaf:
            if i not in skip and not done:
                q.push(i, float(n.path_probability), c)
            continue
        stack.extend((k, c, done) for k in n.children)
    return q


def _path_refined(tree: PolicyTree, partial: PartialTraj, n: PolicyNode) -> bool:
    return all(m.id in partial for m in tree.path_to(n))


def _has_refined_leaf(tree: PolicyTree, partial: PartialTraj, node_id: int) -> bool:
    stack = [node_id]
    while stack:
        i = stack.pop()
        if i not in partial:
            continue
        n = tree.nodes[i]
        if n.is_leaf:
            return True
        stack.extend(n.children)
    return False


def would_lose_refined_paths(tree: PolicyTree, partial: PartialTraj, node_id: int) -> bool:
    """True if some fully refined path passes through ``node_id``."""
    return _path_refined(tree, partial, tree.nodes[node_id]) and _has_refined_leaf(tree, partial, node_id)


# ---------------------------------------------------------------------------
# refinePath


def refine_path(
    path: list[PolicyNode],
    partial: PartialTraj,
    tree: PolicyTree,
    refiner: Refiner,
    rng: np.random.Generator,
    config: AnytimeConfig,
    backtracks: dict | None = None,
    limit_reached: Callable[[], bool] = lambda: False,
    waived: set | frozenset = frozenset(),
) -> RefineOutcome:
    """Try to give every edge of ``path`` a motion plan, starting after the refined prefix.

    ``waived`` lists nodes whose low-battery warning has already been shown
    to be unfixable by replanning.
    """
    backtracks = {} if backtracks is None else backtracks
    fragment: dict = {}

    def entry(i):
        return fragment[i] if i in fragment else partial.get(i)

    for n in path:
        if entry(n.id) is not None:
            continue
        if n.parent is None:
            fragment[n.id] = refiner.root_entry()
            continue
        p = tree.nodes[n.parent]
        before = entry(p.id)
        spec = refiner.edge_spec(p.action, n.outcome)
        gen = Generator(p.action, spec.budget, spec.range, refiner.workspace, rng)
        battery_deficit = math.inf
        rejected_battery = 0
        accepted = None
        while accepted is None:
            if limit_reached():
                return RefineOutcome(False, fragment, interrupted=True)
            try:
                binding = gen.next(before.pose_after)
            except GeneratorExhausted:
                break
            except RegionUnsatisfiable:
                break
            if refiner.clock is not None:
                refiner.clock.tick()
            tr = refiner.trajectory_for(spec, before.pose_after, binding, rng)
            if tr is None:
                continue
            cost = battery_cost(tr, refiner.battery, spec.inspection)
            after = refiner.battery.capacity if spec.restores else before.battery_after - cost
            need = refiner.return_minimum(tr.end)
            if after < need:
                rejected_battery += 1
                battery_deficit = min(battery_deficit, need - after)
                continue
            accepted = TrajEntry(tr, after, tr.end, cost, spec.inspection)

        if accepted is not None:
            fragment[n.id] = accepted
            low = accepted.battery_after < refiner.return_minimum(accepted.pose_after) + refiner.battery.reserve
            if low and not n.is_leaf and n.id not in waived and BATTERY_FLAG in n.state.facts:
                margin = refiner.return_minimum(accepted.pose_after) + refiner.battery.reserve - accepted.battery_after
                reason = FailureReason(INSUFFICIENT_BATTERY, n.id, margin)
                return RefineOutcome(False, fragment, failure_node=n.id, failure_reason=reason, flagged=True)
            continue

        # the parent's action could not be realized for this outcome
        if rejected_battery:
            reason = FailureReason(INSUFFICIENT_BATTERY, p.id, battery_deficit, p.action_key)
        else:
            reason = FailureReason(NO_COLLISION_FREE_PATH, p.id, p.action_key, p.action_key)
        heads = rng.random() < config.replan_bias
        merged = {**partial, **fragment}
        if would_lose_refined_paths(tree, merged, p.id):
            return RefineOutcome(False, fragment, failure_node=p.id, stalled=True)
        if heads or p.parent is None or backtracks.get(p.id, 0) >= config.max_backtracks:
            return RefineOutcome(False, fragment, failure_node=p.id, failure_reason=reason)
        return _backtrack(tree, partial, fragment, p.id)
    return RefineOutcome(True, fragment)


def _backtrack(tree: PolicyTree, partial: PartialTraj, fragment: dict, node_id: int) -> RefineOutcome:
    """Drop ``node_id``'s trajectory and everything refined below it."""
    removed = frozenset(i for i in tree.subtree_ids(node_id) if i in partial or i in fragment)
    kept = {i: e for i, e in fragment.items() if i not in removed}
    return RefineOutcome(False, kept, removed=removed, failure_node=node_id)


def merge(partial: PartialTraj, outcome: RefineOutcome, tree: PolicyTree) -> None:
    for i in outcome.removed:
        partial.pop(i, None)
        if i in tree.nodes:
            tree.nodes[i].status = UNREFINED
    for i, e in outcome.fragment.items():
        partial[i] = e
        tree.nodes[i].status = REFINED


# ---------------------------------------------------------------------------
# Outer loop


@dataclass
class AnytimeResult:
    tree: PolicyTree
    partial: PartialTraj
    profile: list[tuple[float, float, float]]
    log: list[dict]
    stop_reason: str
    model: AbstractModel
    clock: object

    @property
    def proportion_refined(self) -> float:
        return self.profile[-1][1]

    def __iter__(self):
        return iter((self.tree, self.partial, self.profile))


def atm_mdp_solve(
    domain: Domain,
    problem: Problem,
    refiner: Refiner,
    config: AnytimeConfig = AnytimeConfig(),
    clock=None,
) -> AnytimeResult:
    clock = clock if clock is not None else make_clock(config.clock)
    refiner.clock = clock
    rng = np.random.default_rng(config.seed)
    limit = config.resource_limit

    def limit_reached() -> bool:
        return limit is not None and clock.seconds() >= limit

    model = build_abstract_model(domain, problem)
    tree = plan(model, clock=clock)
    partial: PartialTraj = {}
    backtracks: dict[int, int] = {}
    stalls: dict[int, int] = {}
    abandoned: set[int] = set()
    waived: set[int] = set()
    log: list[dict] = []

    def sample():
        return (
            clock.seconds(),
            float(compute_proportion_refined(tree, partial)),
            fraction_nodes_refined(tree, partial),
        )

    profile = [sample()]
    stop = "threshold"
    iteration = 0
    while True:
        if profile[-1][1] >= config.threshold:
            stop = "threshold"
            break
        if limit_reached():
            stop = "resource_limit"
            break
        queue = estimate_path_costs(tree, partial, refiner, abandoned)
        if not len(queue):
            stop = "queue_empty"
            break
        iteration += 1
        clock.tick()
        leaf_id, p, c = queue.pop()
        path = tree.path_to(leaf_id)
        while True:
            out = refine_path(path, partial, tree, refiner, rng, config, backtracks, limit_reached, waived)
            merge(partial, out, tree)
            record = {"iteration": iteration, "leaf": leaf_id, "outcome": out.kind, "node": out.failure_node}
            if out.failure_reason is not None:
                record["reason"] = out.failure_reason.kind
            log.append(record)
            if out.success or out.interrupted:
                break
            if out.stalled:
                stalls[leaf_id] = stalls.get(leaf_id, 0) + 1
                if stalls[leaf_id] >= config.max_stalls:
                    abandoned.add(leaf_id)
                break
            if out.failure_reason is not None:
                try:
                    removed = replan(tree, model, out.failure_node, out.failure_reason, clock)
                except UnsolvableAfterAdjustment:
                    if out.flagged:
                        # a recharge detour cannot help here; keep the edge as it is
                        record["outcome"] = "waived"
                        waived.add(out.failure_node)
                        continue
                    if tree.nodes[out.failure_node].parent is None:
                        raise
                    record["outcome"] = "unsolvable"
                    fallback = _fallback_backtrack(tree, partial, out.failure_node, backtracks, config)
                    merge(partial, fallback, tree)
                    if fallback.stalled:
                        stalls[leaf_id] = stalls.get(leaf_id, 0) + 1
                        if stalls[leaf_id] >= config.max_stalls:
                            abandoned.add(leaf_id)
                    break
                for i in removed:
                    partial.pop(i, None)
                    backtracks.pop(i, None)
                    stalls.pop(i, None)
                    waived.discard(i)
                    abandoned.discard(i)
                record["replaced"] = len(removed)
                record["new_action"] = str(tree.nodes[out.failure_node].action)
                break
            backtracks[out.failure_node] = backtracks.get(out.failure_node, 0) + 1
            if limit_reached():
                break
        profile.append(sample())
    return AnytimeResult(tree, partial, profile, log, stop, model, clock)


def _fallback_backtrack(tree, partial, node_id, backtracks, config) -> RefineOutcome:
    """Used when replanning is impossible: re-sample the node's own trajectory instead."""
    if would_lose_refined_paths(tree, partial, node_id) or backtracks.get(node_id, 0) >= config.max_backtracks:
        return RefineOutcome(False, {}, failure_node=node_id, stalled=True)
    backtracks[node_id] = backtracks.get(node_id, 0) + 1
    return _backtrack(tree, partial, {}, node_id)
