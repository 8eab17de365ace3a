import csv
import json
from dataclasses import replace

import numpy as np
import pytest

from corrstruct.cli import main
from corrstruct.harness import (
    PRESETS,
    DetectorConfig,
    ExperimentPlan,
    PlanError,
    load_plan,
    plan_from_dict,
    preset_plan,
    run,
    unit_seeds,
)
from corrstruct.simgen import ScenarioConfig

from conftest import empty_structure

def read_summary(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


SMALL = {"scenario": {"K": 4, "J": 2, "N": 200, "pi0": 0.5}, "reps": 2, "B": 50,
         "sweep": {"param": "snr", "values": [0, 10]}}


def test_presets_listed():
    assert list(PRESETS) == ["1", "2", "3", "3b", "4", "5a", "5b"]
    for name in PRESETS:
        plan = preset_plan(name)
        assert len(plan.points()) == len(plan.grid) > 0


def test_plan_parsing(tmp_path):
    path = tmp_path / "plan.yaml"
    path.write_text("preset: '5b'\nreps: 3\nseed: 9\n"
                    "detectors:\n  - {name: lfdr-mult-cost, alpha: 0.05, alpha_cmp: 1}\n"
                    "  - {name: two-step, alpha_fa_i: 0.05}\n")
    plan = load_plan(path)
    assert plan.reps == 3 and plan.seed == 9 and plan.sweep == "eps"
    assert plan.detectors == (DetectorConfig("lfdr-mult-cost", 0.05, 1.0),
                              DetectorConfig("two-step", 0.05, 0.1))
    assert plan.scenario.contamination.kind == "pointmass"


def test_plan_errors(tmp_path):
    with pytest.raises(PlanError):
        plan_from_dict({"preset": "nope"})
    with pytest.raises(PlanError):
        plan_from_dict({"preset": "1", "bogus": 1})
    with pytest.raises(PlanError):
        plan_from_dict({"scenario": {"K": 4}})
    with pytest.raises(PlanError):
        plan_from_dict({**SMALL, "sweep": {"param": "snr", "values": []}})
    with pytest.raises(PlanError):
        plan_from_dict({**SMALL, "reps": 0})
    with pytest.raises(PlanError):
        plan_from_dict({**SMALL, "detectors": [{"name": "magic"}]})
    with pytest.raises(FileNotFoundError):
        load_plan(tmp_path / "none.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("preset: [1\n")
    with pytest.raises(PlanError):
        load_plan(bad)


def test_unit_seeds_depend_only_on_indices():
    a = np.random.default_rng(unit_seeds(5, 1, 2)[0]).random(3)
    b = np.random.default_rng(unit_seeds(5, 1, 2)[0]).random(3)
    c = np.random.default_rng(unit_seeds(5, 2, 1)[0]).random(3)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_run_is_independent_of_workers(tmp_path):
    plan = replace(plan_from_dict(SMALL), out=str(tmp_path / "a"))
    serial = run(plan, workers=1)
    parallel = run(replace(plan, out=str(tmp_path / "b")), workers=2)
    assert serial.read_bytes() == parallel.read_bytes()
    rows = read_summary(serial)
    assert list(rows[0])[:5] == ["detector", "param", "value", "reps", "status"]
    assert len(rows) == 2 * 3
    assert {r["detector"] for r in rows} == {
        "lfdr-mult-cost(0.1,0.1)", "lfdr-mult-cost(0.1,1)", "two-step(0.1,0.1)"}
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["plan"]["seed"] == 0


def test_trivial_null_scenario(tmp_path):
    cfg = ScenarioConfig(K=2, J=2, N=100, structure=empty_structure(2, 2))
    plan = ExperimentPlan(scenario=cfg, reps=1, B=50, out=str(tmp_path),
                          detectors=(DetectorConfig("lfdr-mult-cost"),))
    rows = read_summary(run(plan, workers=1))
    assert len(rows) == 1
    assert rows[0]["status"] == "ok" and float(rows[0]["fdr"]) == 0.0
    est = np.loadtxt(tmp_path / "activation" / "lfdr-mult-cost_0.1,0.1___-=-.csv",
                     delimiter=",")
    np.testing.assert_array_equal(est, 0.0)
    assert (tmp_path / "activation" / "lfdr-mult-cost_0.1,0.1___-=-.svg").exists()


def test_failing_grid_point_is_recorded(tmp_path):
    plan = plan_from_dict({**SMALL, "sweep": {"param": "pi0", "values": [0.5, 0.99]},
                           "reps": 1, "out": str(tmp_path)})
    status = [r["status"] for r in read_summary(run(plan, workers=1))]
    assert status[:3] == ["ok"] * 3
    assert all(s.startswith("failed: InfeasibleScenarioError") for s in status[3:])


def test_cli_presets(capsys):
    assert main(["presets"]) == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 7


def test_cli_errors(tmp_path, capsys):
    missing = tmp_path / "missing.yaml"
    assert main(["run", str(missing)]) != 0
    assert str(missing) in capsys.readouterr().err
    bad = tmp_path / "bad.yaml"
    bad.write_text("reps: 2\n")
    assert main(["run", str(bad)]) != 0
    assert main(["detect", str(tmp_path / "nodata")]) != 0


def test_cli_run_and_detect(tmp_path):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({**SMALL, "reps": 1}))
    assert main(["run", str(plan), "--out", str(tmp_path / "out"), "--seed", "3",
                 "--alpha", "0.05", "--workers", "1"]) == 0
    text = (tmp_path / "out" / "summary.csv").read_text()
    assert "lfdr-mult-cost(0.05,0.1)" in text
    data = tmp_path / "data"
    assert main(["simulate", "5a", "--out", str(data), "--seed", "1"]) == 0
    assert main(["detect", str(data), "--out", str(tmp_path / "det"), "-B", "60"]) == 0
    M = np.loadtxt(tmp_path / "det" / "lfdr_mult_cost.csv", delimiter=",", comments="#")
    truth = np.loadtxt(data / "truth.csv", delimiter=",")
    assert M.shape == truth.shape == (6, 12)
    assert np.all((M.sum(axis=1) != 1))
