"""Command-line entry point: ``anytime-tamp plan`` and ``anytime-tamp sweep``.

Exit codes: 0 when the refinement threshold was reached, 2 when the run
stopped early (resource limit, or nothing left to refine), 1 on error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .anytime import AnytimeConfig
from .harness import Scenario, ScenarioError, load_scenario, run_scenario, shipped_scenario, sweep_failure_rates
from .lang import LangError
from .ssp import SSPError

log = logging.getLogger("anytime_tamp")


def parse_seeds(text: str) -> list[int]:
    """``"1..5"`` or ``"1,2,7"`` or a mix such as ``"1..3,9"``."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            a, b = int(lo), int(hi)
            if b < a:
                raise argparse.ArgumentTypeError(f"empty seed range {part!r}")
            seeds.extend(range(a, b + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError("no seeds given")
    return seeds


def parse_rates(text: str) -> list[float]:
    rates = [float(x) for x in text.split(",") if x.strip()]
    if not rates:
        raise argparse.ArgumentTypeError("no rates given")
    return rates


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", help="scenario JSON (default: the shipped hangar scenario)")
    p.add_argument("--domain", help="domain file (.sdom), overrides the scenario")
    p.add_argument("--problem", help="problem file (.sprob), overrides the scenario")
    p.add_argument("--workspace", help="workspace file (.wspc), overrides the scenario")
    p.add_argument("--horizon", type=int, help="override the problem horizon")
    p.add_argument("--threshold", type=float, default=1.0, help="stop once this probability is refined")
    p.add_argument("--time-limit", type=float, default=None, help="resource limit in clock seconds")
    p.add_argument("--replan-bias", type=float, default=0.5, help="probability of replanning on a failure")
    p.add_argument("--clock", choices=("work", "wall"), default="work", help="profile time base")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="anytime-tamp", description="Anytime task and motion policy synthesis.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="run one scenario")
    _common(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--failure-rate", type=float, default=None)
    p.add_argument("--profile-out", default="profile.csv")
    p.add_argument("--tree-out", default="tree.txt")
    p.add_argument("--report-out", default=None)

    s = sub.add_parser("sweep", help="run every (failure rate, seed) pair and aggregate")
    _common(s)
    s.add_argument("--rates", type=parse_rates, default=[0.05, 0.1, 0.2])
    s.add_argument("--seeds", type=parse_seeds, default=parse_seeds("1..5"))
    s.add_argument("--out-dir", default="sweep")
    s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    return ap


def _scenario(args) -> Scenario:
    sc = load_scenario(args.scenario) if args.scenario else shipped_scenario("hangar")
    changes = {}
    if args.domain:
        changes["domain_file"] = Path(args.domain)
    if args.problem:
        changes["problem_file"] = Path(args.problem)
    if args.workspace:
        changes["workspace_file"] = Path(args.workspace)
    if args.horizon is not None:
        changes["horizon"] = args.horizon
    if getattr(args, "failure_rate", None) is not None:
        changes["failure_rate"] = args.failure_rate
    return replace(sc, **changes) if changes else sc


def _config(args, seed: int = 0) -> AnytimeConfig:
    return AnytimeConfig(
        threshold=args.threshold,
        replan_bias=args.replan_bias,
        resource_limit=args.time_limit,
        seed=seed,
        clock=args.clock,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        scenario = _scenario(args)
        if args.command == "plan":
            rep = run_scenario(
                scenario,
                _config(args, args.seed),
                profile_out=args.profile_out,
                tree_out=args.tree_out,
                report_out=args.report_out,
            )
            print(
                f"proportion_refined={rep.proportion_refined:.6f} stop={rep.stop_reason} "
                f"clock_seconds={rep.clock_seconds:.6f} wall_seconds={rep.wall_seconds:.3f}"
            )
            return 0 if rep.threshold_reached else 2
        res = sweep_failure_rates(scenario, args.rates, args.seeds, _config(args), args.out_dir, args.jobs)
        for (rate, frac), m in sorted(res.means.items()):
            log.info("rate=%g fraction=%g mean=%.4f", rate, frac, m)
        print(f"aggregate={res.aggregate_path} runs={len(res.profiles)} failed={len(res.errors)}")
        if res.errors:
            return 1
        reached = all(p[-1][1] >= args.threshold for p in res.profiles.values())
        return 0 if reached else 2
    except (ScenarioError, LangError, SSPError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
