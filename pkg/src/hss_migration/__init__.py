import importlib.metadata

from .agents import FrbAgent, compute_cost_signal, cost_value, td_update
from .config import ExperimentSpec, ScenarioConfig, load_scenario, parse_scenario
from .engine import (
    RunResult,
    Simulator,
    estimated_system_response,
    execute_decision_with_eviction,
    run_scenario,
    service_requests,
)
from .exceptions import (
    CapacityError,
    ConfigError,
    LearningError,
    MetadataError,
    MetricsError,
    PreconditionError,
    SimulationError,
)
from .metrics import MetricsFrame, RunSummary, emit_plot_data
from .policies import build_policy, decide_upgrade, rule_based_decide
from .runner import ExperimentRunner
from .storage import Hierarchy

try:
    __version__ = importlib.metadata.version("hss-migration")
except importlib.metadata.PackageNotFoundError:
    __version__ = "0.0.0"  # Fallback for development mode


__all__ = [
    "Hierarchy",
    "ScenarioConfig",
    "ExperimentSpec",
    "load_scenario",
    "parse_scenario",
    "Simulator",
    "RunResult",
    "run_scenario",
    "service_requests",
    "estimated_system_response",
    "execute_decision_with_eviction",
    "build_policy",
    "rule_based_decide",
    "decide_upgrade",
    "FrbAgent",
    "cost_value",
    "td_update",
    "compute_cost_signal",
    "MetricsFrame",
    "RunSummary",
    "emit_plot_data",
    "ExperimentRunner",
    "SimulationError",
    "ConfigError",
    "CapacityError",
    "MetadataError",
    "PreconditionError",
    "LearningError",
    "MetricsError",
]
