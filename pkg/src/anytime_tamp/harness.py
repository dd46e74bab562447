"""Scenario files, single runs, failure-rate sweeps and their output files.

A scenario is a JSON object; relative paths resolve against the file's
directory::

    {
      "domain": "hangar.sdom",
      "problem": "hangar.sprob",
      "workspace": "hangar.wspc",
      "failure_rate": 0.05,
      "failure_constant": "fail",
      "horizon": 10,
      "budgets": {"move": 10, "inspect": 10, "dock": 10},
      "default_budget": 10,
      "battery": {"cost_per_meter": 1.0, "inspect_overhead": 5.0, "capacity": 400.0, "reserve": 60.0},
      "rrt": {"step_fraction": 0.02, "goal_bias": 0.1, "max_iterations": 5000},
      "reference_area": 14.0,
      "initial_pose": [4.0, 4.0],
      "envelope_half_width": {"LeftWing": 5.0}
    }

Every key except the three file paths is optional.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from importlib.resources import files
from pathlib import Path

from .anytime import AnytimeConfig, AnytimeResult, Refiner, atm_mdp_solve
from .clock import make_clock
from .geom import BatteryModel, Component, Pose, RRTConfig, Workspace, load_workspace
from .lang import Domain, LangError, Problem, parse_domain, parse_problem

PROFILE_HEADER = ("t_seconds", "proportion_refined", "fraction_nodes_refined")
TIME_FRACTIONS = (0.1, 0.2, 0.4, 1.0)


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    domain_file: Path
    problem_file: Path
    workspace_file: Path
    failure_rate: float | None = None
    failure_constant: str = "fail"
    horizon: int | None = None
    budgets: dict = field(default_factory=dict)
    default_budget: int = 10
    battery: BatteryModel = field(default_factory=BatteryModel)
    rrt: RRTConfig = field(default_factory=RRTConfig)
    reference_area: float | None = None
    initial_pose: tuple[float, float] | None = None
    envelope_half_width: dict | float | None = None

    def __post_init__(self):
        if self.failure_rate is not None and not 0.0 < self.failure_rate < 1.0:
            raise ScenarioError("failure_rate must lie in (0, 1)")
        if self.horizon is not None and self.horizon < 1:
            raise ScenarioError("horizon must be at least 1")

    def with_failure_rate(self, rate: float) -> "Scenario":
        return replace(self, failure_rate=rate)

    def load_domain(self) -> Domain:
        consts = {}
        if self.failure_rate is not None:
            consts[self.failure_constant] = Fraction(str(self.failure_rate))
        return _with_file(self.domain_file, lambda text: parse_domain(text, constants=consts))

    def load_problem(self, domain: Domain) -> Problem:
        prob = _with_file(self.problem_file, lambda text: parse_problem(text, domain))
        if self.horizon is not None:
            prob = replace(prob, horizon=self.horizon)
        return prob

    def load_workspace(self) -> Workspace:
        try:
            w = load_workspace(self.workspace_file)
        except ValueError as e:
            raise ScenarioError(f"{self.workspace_file}: {e}") from e
        hw = self.envelope_half_width
        if hw is not None:
            comps = {}
            for name, c in w.components.items():
                width = hw.get(name, c.half_width) if isinstance(hw, dict) else float(hw)
                comps[name] = Component(c.name, c.a, c.b, float(width))
            w = Workspace(w.bounds, w.obstacles, w.regions, comps, w.docks)
        return w

    def refiner(self, workspace: Workspace, problem: Problem) -> Refiner:
        initial_battery = dict(problem.numeric_init).get("batteryLevel", self.battery.capacity)
        return Refiner(
            workspace,
            battery=self.battery,
            rrt=self.rrt,
            budgets=dict(self.budgets),
            default_budget=self.default_budget,
            reference_area=self.reference_area,
            initial_pose=None if self.initial_pose is None else Pose(*self.initial_pose),
            initial_battery=min(float(initial_battery), self.battery.capacity),
        )


def _with_file(path: Path, parse):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError(f"cannot read {path}: {e}") from e
    try:
        return parse(text)
    except LangError as e:
        raise ScenarioError(f"{path}: {e}") from e


def scenario_from_dict(data: dict, base: Path | str = ".") -> Scenario:
    base = Path(base)
    known = {
        "domain", "problem", "workspace", "failure_rate", "failure_constant", "horizon", "budgets",
        "default_budget", "battery", "rrt", "reference_area", "initial_pose", "envelope_half_width",
    }
    unknown = set(data) - known
    if unknown:
        raise ScenarioError(f"unknown scenario keys: {', '.join(sorted(unknown))}")
    for key in ("domain", "problem", "workspace"):
        if key not in data:
            raise ScenarioError(f"scenario is missing {key!r}")
    try:
        return Scenario(
            domain_file=base / data["domain"],
            problem_file=base / data["problem"],
            workspace_file=base / data["workspace"],
            failure_rate=data.get("failure_rate"),
            failure_constant=data.get("failure_constant", "fail"),
            horizon=data.get("horizon"),
            budgets=dict(data.get("budgets", {})),
            default_budget=int(data.get("default_budget", 10)),
            battery=BatteryModel(**data.get("battery", {})),
            rrt=RRTConfig(**data.get("rrt", {})),
            reference_area=data.get("reference_area"),
            initial_pose=tuple(data["initial_pose"]) if "initial_pose" in data else None,
            envelope_half_width=data.get("envelope_half_width"),
        )
    except TypeError as e:
        raise ScenarioError(f"bad scenario field: {e}") from e


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ScenarioError(f"cannot load scenario {path}: {e}") from e
    return scenario_from_dict(data, path.parent)


def shipped_scenario(name: str = "hangar") -> Scenario:
    """A scenario bundled with the package (``hangar`` or ``hangar_low_battery``)."""
    return load_scenario(Path(str(files("anytime_tamp") / "data" / f"{name}.json")))


# ---------------------------------------------------------------------------
# Output


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def profile_csv(profile) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PROFILE_HEADER)
    for t, p, f in profile:
        w.writerow((f"{t:.6f}", repr(float(p)), repr(float(f))))
    return buf.getvalue()


def trajectories_json(partial) -> str:
    """Refined motion plans keyed by node id."""
    out = {}
    for i in sorted(partial):
        e = partial[i]
        out[str(i)] = {
            "waypoints": [[p.x, p.y] for p in e.trajectory.waypoints],
            "anchors": [[p.x, p.y] for p in e.trajectory.anchors],
            "cost": e.cost,
            "battery_after": e.battery_after,
            "inspection": e.inspection,
        }
    return json.dumps(out, sort_keys=True) + "\n"


def read_trajectories(path) -> dict[int, dict]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return {int(k): v for k, v in data.items()}


def read_profile(path) -> list[tuple[float, float, float]]:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if tuple(rows[0]) != PROFILE_HEADER:
        raise ValueError(f"{path}: unexpected profile header")
    return [tuple(float(x) for x in r) for r in rows[1:]]


@dataclass
class RunReport:
    profile_path: Path | None
    tree_path: Path | None
    report_path: Path | None
    proportion_refined: float
    wall_seconds: float
    clock_seconds: float
    stop_reason: str
    threshold_reached: bool
    log: list = field(default_factory=list)
    result: AnytimeResult | None = None

    def summary(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("log", "result")}
        for k in ("profile_path", "tree_path", "report_path"):
            d[k] = None if d[k] is None else str(d[k])
        d["log"] = self.log
        return d


def run_scenario(
    scenario: Scenario,
    config: AnytimeConfig = AnytimeConfig(),
    profile_out=None,
    tree_out=None,
    report_out=None,
    trajectories_out=None,
) -> RunReport:
    """Load, solve and refine one scenario; the clock starts before the policy is unrolled."""
    domain = scenario.load_domain()
    problem = scenario.load_problem(domain)
    workspace = scenario.load_workspace()
    refiner = scenario.refiner(workspace, problem)
    clock = make_clock(config.clock)
    start = time.perf_counter()
    result = atm_mdp_solve(domain, problem, refiner, config, clock)
    wall = time.perf_counter() - start
    prop = result.proportion_refined
    report = RunReport(
        profile_path=Path(profile_out) if profile_out else None,
        tree_path=Path(tree_out) if tree_out else None,
        report_path=Path(report_out) if report_out else None,
        proportion_refined=prop,
        wall_seconds=wall,
        clock_seconds=clock.seconds(),
        stop_reason=result.stop_reason,
        threshold_reached=prop >= config.threshold,
        log=result.log,
        result=result,
    )
    if profile_out:
        atomic_write(profile_out, profile_csv(result.profile))
    if tree_out:
        atomic_write(tree_out, result.tree.serialize())
    if trajectories_out:
        atomic_write(trajectories_out, trajectories_json(result.partial))
    if report_out:
        atomic_write(report_out, json.dumps(report.summary(), indent=2, sort_keys=True) + "\n")
    return report


# ---------------------------------------------------------------------------
# Sweeps


def proportion_at(profile, fraction: float) -> float:
    """Refined proportion at ``fraction`` of the run's total time (step interpolation)."""
    total = profile[-1][0]
    value = 0.0
    for t, p, _ in profile:
        if t <= fraction * total + 1e-12:
            value = p
        else:
            break
    return value


def _run_one(args):
    scenario, rate, seed, config, out_dir = args
    tag = f"r{rate:g}_s{seed}"
    try:
        rep = run_scenario(
            scenario.with_failure_rate(rate),
            replace(config, seed=seed),
            profile_out=out_dir / f"profile_{tag}.csv",
            tree_out=out_dir / f"tree_{tag}.txt",
            report_out=out_dir / f"report_{tag}.json",
            trajectories_out=out_dir / f"trajectories_{tag}.json",
        )
        return rate, seed, rep.result.profile, None
    except Exception as e:  # keep the sweep going; the error is reported in the aggregate
        return rate, seed, None, f"{type(e).__name__}: {e}"


@dataclass
class SweepResult:
    aggregate_path: Path
    profiles: dict  # (rate, seed) -> profile
    errors: dict  # (rate, seed) -> message
    means: dict  # (rate, fraction) -> mean proportion


def sweep_failure_rates(
    scenario: Scenario,
    rates,
    seeds,
    config: AnytimeConfig = AnytimeConfig(),
    out_dir="sweep",
    jobs: int = 1,
) -> SweepResult:
    rates = list(rates)
    seeds = list(seeds)
    if not rates or not seeds:
        raise ValueError("need at least one rate and one seed")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(scenario, r, s, config, out_dir) for r in rates for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]
    profiles, errors = {}, {}
    for rate, seed, prof, err in results:
        if err is None:
            profiles[(rate, seed)] = prof
        else:
            errors[(rate, seed)] = err
    means = {}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("failure_rate", "time_fraction", "mean_proportion_refined", "runs", "failed_runs"))
    for r in rates:
        runs = [profiles[(r, s)] for s in seeds if (r, s) in profiles]
        failed = sum(1 for s in seeds if (r, s) in errors)
        for f in TIME_FRACTIONS:
            m = math.fsum(proportion_at(p, f) for p in runs) / len(runs) if runs else float("nan")
            means[(r, f)] = m
            w.writerow((f"{r:g}", f"{f:g}", repr(m), len(runs), failed))
    agg = out_dir / "aggregate.csv"
    atomic_write(agg, buf.getvalue())
    if errors:
        atomic_write(
            out_dir / "errors.json",
            json.dumps({f"r{r:g}_s{s}": m for (r, s), m in sorted(errors.items())}, indent=2) + "\n",
        )
    return SweepResult(agg, profiles, errors, means)
