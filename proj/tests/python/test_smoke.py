import json
import os

import vvccs


def scenario_path(name):
    return os.path.join(os.environ["VVCCS_SCENARIO_DIR"], name)


def test_version():
    assert vvccs.__version__


def test_bandwidth_numbers():
    assert vvccs.aggregate_bandwidth(1) == 40960.0
    assert vvccs.aggregate_bandwidth(50) == 2048000.0
    assert vvccs.aggregate_bandwidth(50, overhead=0.1) == 2252800.0
    assert vvccs.max_supported_vehicles(2457600.0) == 60


def test_controller_zero_error_duty():
    duty, integral = vvccs.controller_step(0.9, 0.0, 0.9, 0.01)
    assert duty == 0.1 * 0.9
    assert integral == 0.0
    assert vvccs.stopping_distance(0.9, -2.0) == 0.2025


def test_run_scenario():
    raw = vvccs.run_scenario(scenario_path("experiment1.json"), seed=42)
    m = json.loads(raw)
    assert m["seed"] == 42
    assert m["all_crossed"] is True
    assert m["collisions"] == []
    assert m["invariant_violations"] == []
    assert len(m["vehicles"]) == 2


def test_compare_scenarios():
    cmp = vvccs.compare_scenarios(scenario_path("experiment1.json"), seed=7)
    assert set(cmp) == {"lease", "lock", "completion_ratio"}
    assert 0.0 < cmp["completion_ratio"] < 1.0
