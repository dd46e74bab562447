from __future__ import annotations

import argparse
import json
import math
from dataclasses import replace

import pytest

from anytime_tamp.abstraction import build_abstract_model
from anytime_tamp.anytime import AnytimeConfig
from anytime_tamp.cli import main, parse_seeds
from anytime_tamp.harness import (
    PROFILE_HEADER,
    ScenarioError,
    load_scenario,
    proportion_at,
    read_profile,
    run_scenario,
    scenario_from_dict,
    shipped_scenario,
    sweep_failure_rates,
)
from anytime_tamp.ssp import parse_tree_lines, plan
from conftest import DATA, SWEEP_RATES, SWEEP_SEEDS

BASE = {"domain": "hangar.sdom", "problem": "hangar.sprob", "workspace": "hangar.wspc"}


def test_shipped_scenarios_load():
    for name in ("hangar", "hangar_low_battery"):
        sc = shipped_scenario(name)
        assert sc.domain_file.exists() and sc.workspace_file.exists()
    assert shipped_scenario("hangar").failure_rate == 0.05


@pytest.mark.parametrize(
    "data, err",
    [
        ({**BASE, "colour": "red"}, ScenarioError),
        ({"domain": "hangar.sdom", "problem": "hangar.sprob"}, ScenarioError),
        ({**BASE, "failure_rate": 1.5}, ScenarioError),
        ({**BASE, "failure_rate": 0.0}, ScenarioError),
        ({**BASE, "horizon": 0}, ScenarioError),
        ({**BASE, "battery": {"voltage": 3}}, ScenarioError),
        ({**BASE, "battery": {"capacity": 50, "reserve": 60}}, ValueError),
    ],
)
def test_scenario_validation(data, err):
    with pytest.raises(err):
        scenario_from_dict(data, DATA)


def test_missing_file_names_the_path(tmp_path):
    sc = scenario_from_dict({**BASE, "domain": "nope.sdom"}, DATA)
    with pytest.raises(ScenarioError, match="nope.sdom"):
        sc.load_domain()
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "absent.json")


def test_parse_error_carries_file_context(tmp_path):
    (tmp_path / "bad.sdom").write_text("(define (domain x) (:bogus))")
    sc = scenario_from_dict({**BASE, "domain": str(tmp_path / "bad.sdom")}, DATA)
    with pytest.raises(ScenarioError, match="bad.sdom"):
        sc.load_domain()


def test_failure_rate_sets_outcome_probabilities(scenario):
    from fractions import Fraction

    d = scenario.with_failure_rate(0.2).load_domain()
    assert [o.probability for o in d.action("inspect").outcomes] == [Fraction(4, 5), Fraction(1, 5)]


def test_run_writes_outputs_atomically(scenario, tmp_path):
    rep = run_scenario(
        scenario,
        AnytimeConfig(threshold=0.9, seed=1),
        profile_out=tmp_path / "p.csv",
        tree_out=tmp_path / "t.txt",
        report_out=tmp_path / "r.json",
        trajectories_out=tmp_path / "tr.json",
    )
    assert rep.threshold_reached and rep.proportion_refined >= 0.9
    assert sorted(p.name for p in tmp_path.iterdir()) == ["p.csv", "r.json", "t.txt", "tr.json"]
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == ",".join(PROFILE_HEADER)
    prof = read_profile(tmp_path / "p.csv")
    assert prof[-1][1] == pytest.approx(rep.proportion_refined)
    assert all(a[0] < b[0] for a, b in zip(prof, prof[1:]))
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["stop_reason"] == "threshold" and report["log"]
    rows = parse_tree_lines((tmp_path / "t.txt").read_text())
    assert any(r["status"] == "refined" for r in rows)


def test_zero_threshold_gives_initial_sample_only(scenario, tmp_path):
    run_scenario(scenario, AnytimeConfig(threshold=0.0), profile_out=tmp_path / "p.csv")
    prof = read_profile(tmp_path / "p.csv")
    assert len(prof) == 1 and prof[0][1] == 0.0
    # the clock started before unrolling, so planning time is on record
    assert prof[0][0] > 0


def test_leaf_count_does_not_depend_on_failure_rate(scenario):
    # unrolling keeps every positive-probability outcome, so the rate changes
    # branch weights but not the tree's shape
    counts = []
    for rate in (0.05, 0.2):
        sc = scenario.with_failure_rate(rate)
        d = sc.load_domain()
        tree = plan(build_abstract_model(d, sc.load_problem(d)))
        counts.append(sum(1 for n in tree.nodes.values() if n.is_leaf))
    assert counts[0] == counts[1] > 1


def test_proportion_at_steps():
    prof = [(1.0, 0.0, 0.0), (2.0, 0.5, 0.1), (4.0, 0.7, 0.2), (10.0, 0.9, 0.3)]
    assert proportion_at(prof, 0.1) == 0.0
    assert proportion_at(prof, 0.2) == 0.5
    assert proportion_at(prof, 0.4) == 0.7
    assert proportion_at(prof, 1.0) == 0.9


def test_sweep_cardinality(scenario, tmp_path):
    res = sweep_failure_rates(scenario, [0.05], [1, 2, 3], AnytimeConfig(threshold=0.9), tmp_path)
    assert len(res.profiles) == 3 and not res.errors
    for s in (1, 2, 3):
        assert (tmp_path / f"profile_r0.05_s{s}.csv").exists()
        assert (tmp_path / f"tree_r0.05_s{s}.txt").exists()
    lines = (tmp_path / "aggregate.csv").read_text().splitlines()
    assert lines[0] == "failure_rate,time_fraction,mean_proportion_refined,runs,failed_runs"
    assert len(lines) == 1 + 4


def test_sweep_keeps_partial_results(scenario, tmp_path):
    res = sweep_failure_rates(scenario, [0.05, 1.5], [1], AnytimeConfig(threshold=0.5), tmp_path)
    assert set(res.profiles) == {(0.05, 1)}
    assert set(res.errors) == {(1.5, 1)}
    assert "ScenarioError" in json.loads((tmp_path / "errors.json").read_text())["r1.5_s1"]
    assert math.isnan(res.means[(1.5, 1.0)])


def test_sweep_rejects_empty_inputs(scenario, tmp_path):
    with pytest.raises(ValueError):
        sweep_failure_rates(scenario, [], [1], out_dir=tmp_path)


def test_parallel_sweep_matches_serial(scenario, tmp_path):
    cfg = AnytimeConfig(threshold=0.6)
    a = sweep_failure_rates(scenario, [0.1], [1, 2], cfg, tmp_path / "a", jobs=1)
    b = sweep_failure_rates(scenario, [0.1], [1, 2], cfg, tmp_path / "b", jobs=2)
    assert a.profiles == b.profiles
    assert (tmp_path / "a" / "aggregate.csv").read_bytes() == (tmp_path / "b" / "aggregate.csv").read_bytes()


def test_full_refinement_with_ample_battery(ample_battery_scenario, tmp_path):
    res = sweep_failure_rates(ample_battery_scenario, [0.05, 0.2], [1, 2], AnytimeConfig(threshold=1.0), tmp_path)
    assert res.means[(0.05, 1.0)] == 1.0
    assert res.means[(0.2, 1.0)] == 1.0


def test_lower_failure_rate_covers_more_early(shipped_sweep):
    _, res = shipped_sweep
    assert res.means[(0.05, 0.4)] >= res.means[(0.2, 0.4)]


def test_sweep_profiles_shape(shipped_sweep):
    out, res = shipped_sweep
    assert len(res.profiles) == len(SWEEP_RATES) * len(SWEEP_SEEDS) and not res.errors
    for (rate, seed), prof in res.profiles.items():
        on_disk = read_profile(out / f"profile_r{rate:g}_s{seed}.csv")
        assert [p for _, p, _ in on_disk] == [p for _, p, _ in prof]
        assert all(a[0] < b[0] for a, b in zip(on_disk, on_disk[1:]))


def test_parse_seeds():
    assert parse_seeds("1..5") == [1, 2, 3, 4, 5]
    assert parse_seeds("1,2,7") == [1, 2, 7]
    assert parse_seeds("1..3,9") == [1, 2, 3, 9]
    for bad in ("5..1", "", "a"):
        with pytest.raises((argparse.ArgumentTypeError, ValueError)):
            parse_seeds(bad)


def test_cli_plan_exit_codes(tmp_path, capsys):
    args = ["plan", "--profile-out", str(tmp_path / "p.csv"), "--tree-out", str(tmp_path / "t.txt")]
    assert main(args + ["--threshold", "0.5"]) == 0
    assert "proportion_refined=" in capsys.readouterr().out
    assert main(args + ["--threshold", "1.0", "--time-limit", "0.001"]) == 2
    assert main(args + ["--domain", str(tmp_path / "missing.sdom")]) == 1
    assert "error:" in capsys.readouterr().err


def test_cli_plan_with_explicit_files(tmp_path):
    args = [
        "plan", "--domain", str(DATA / "hangar.sdom"), "--problem", str(DATA / "hangar.sprob"),
        "--workspace", str(DATA / "hangar.wspc"), "--horizon", "10", "--threshold", "0.5", "--seed", "4",
        "--failure-rate", "0.1", "--replan-bias", "0.5",
        "--profile-out", str(tmp_path / "p.csv"), "--tree-out", str(tmp_path / "t.txt"),
        "--report-out", str(tmp_path / "r.json"),
    ]
    assert main(args) == 0
    assert json.loads((tmp_path / "r.json").read_text())["threshold_reached"] is True


def test_cli_sweep(tmp_path, capsys):
    code = main(["sweep", "--rates", "0.05", "--seeds", "1..2", "--threshold", "0.5", "--out-dir", str(tmp_path)])
    assert code == 0
    assert "runs=2 failed=0" in capsys.readouterr().out
    assert (tmp_path / "aggregate.csv").exists()


def test_cli_low_battery_scenario(tmp_path):
    sc = DATA / "hangar_low_battery.json"
    code = main(["plan", "--scenario", str(sc), "--threshold", "0.9",
                 "--profile-out", str(tmp_path / "p.csv"), "--tree-out", str(tmp_path / "t.txt")])
    assert code == 0


def test_horizon_override(scenario):
    sc = replace(scenario, horizon=4)
    d = sc.load_domain()
    assert sc.load_problem(d).horizon == 4
