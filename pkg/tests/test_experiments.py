"""Full-scale reproductions; deselected by default, run with `pytest -m slow`."""

import pytest

from hss_migration.config import load_scenario
from hss_migration.engine import run_scenario

RULE_POLICIES = ["rule1", "rule2", "rule3"]
RL_POLICIES = ["rl-ft", "rl-dt", "rl-st"]

pytestmark = pytest.mark.slow


def _summaries(preset, policies):
    config = load_scenario(preset)
    return {name: run_scenario(config, name, keep_frames=False).summary for name in policies}


@pytest.fixture(scope="module")
def static_runs():
    return _summaries("sim-1000", RULE_POLICIES + RL_POLICIES)


def test_rl_needs_far_fewer_transfers(static_runs):
    for rule in RULE_POLICIES:
        for rl in RL_POLICIES:
            ratio = static_runs[rule].mean_total_transfers / static_runs[rl].mean_total_transfers
            assert ratio >= 3, (rule, rl, ratio)


def test_fast_tiers_end_up_full(static_runs):
    for summary in static_runs.values():
        assert summary.final_occupancy[1] > 0.99
        assert summary.final_occupancy[2] > 0.99


def test_final_temperature_hierarchy(static_runs):
    assert all(summary.temperature_hierarchy for summary in static_runs.values())


def test_estimated_response_parity(static_runs):
    finals = [summary.final_esr for summary in static_runs.values()]
    assert max(finals) / min(finals) <= 1.05


@pytest.mark.parametrize("preset", ["sim-1000-temp01", "sim-1000-uniform"])
def test_variants_keep_the_same_properties(preset):
    runs = _summaries(preset, RULE_POLICIES + RL_POLICIES)
    for rule in RULE_POLICIES:
        for rl in RL_POLICIES:
            assert runs[rule].mean_total_transfers >= 3 * runs[rl].mean_total_transfers
    for summary in runs.values():
        assert min(summary.final_occupancy[1:]) > 0.99
        assert summary.temperature_hierarchy


def test_dynamic_dataset():
    runs = _summaries("cloud-20000", ["rule1", "rl-ft"])
    assert runs["rule1"].mean_total_transfers >= 3 * runs["rl-ft"].mean_total_transfers
    finals = [summary.final_esr for summary in runs.values()]
    assert max(finals) / min(finals) <= 1.02


def test_static_cloud_dataset():
    runs = _summaries("cloud-20000-static", RULE_POLICIES + RL_POLICIES)
    for rule in RULE_POLICIES:
        for rl in RL_POLICIES:
            assert runs[rule].mean_total_transfers >= 3 * runs[rl].mean_total_transfers
    assert all(summary.temperature_hierarchy for summary in runs.values())
