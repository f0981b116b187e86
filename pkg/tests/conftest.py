import copy

import pytest

SMALL_SCENARIO = {
    "name": "small",
    "timesteps": 30,
    "seed": 7,
    "tiers": [
        {"name": "tier1", "capacity": 200000, "speed": 1000},
        {"name": "tier2", "capacity": 20000, "speed": 5000},
        {"name": "tier3", "capacity": 2000, "speed": 10000},
    ],
    "population": {
        "count": 100,
        "sizes": {"low": 1, "high": 1000},
        "temperature": {"low": 0.4, "high": 0.6},
    },
    "output": {"heatmap_interval": 10},
    "check_invariants": True,
}


@pytest.fixture
def scenario_data():
    """A fresh copy of a scenario small enough to run in well under a second."""
    return copy.deepcopy(SMALL_SCENARIO)
