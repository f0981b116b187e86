import math
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from .exceptions import ConfigError

POLICY_NAMES = ("rule1", "rule2", "rule3", "rl-ft", "rl-dt", "rl-st")
PRESET_NAMES = (
    "sim-1000",
    "sim-1000-temp01",
    "sim-1000-uniform",
    "cloud-20000-static",
    "cloud-20000",
)

DEFAULT_MEMBERSHIP_A = math.exp(4.0)
DEFAULT_MEMBERSHIP_B = 8.0


def _check_policy_names(value: List[str]) -> List[str]:
    if not value:
        raise ValueError("at least one policy is required")
    unknown = [name for name in value if name not in POLICY_NAMES]
    if unknown:
        raise ValueError(f"unknown policies {unknown}; choose from {', '.join(POLICY_NAMES)}")
    return value


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class TierConfig(_Strict):
    """One storage level; list tiers from slowest to fastest"""

    name: Optional[str] = None
    capacity: float = Field(gt=0)
    speed: float = Field(gt=0)


class SizeSpec(_Strict):
    """File-size distribution over [low, high]"""

    low: float = Field(gt=0)
    high: float = Field(gt=0)
    distribution: Literal["uniform", "log_uniform", "bounded_pareto"] = "uniform"
    shape: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def _ordered(self) -> "SizeSpec":
        if self.high < self.low:
            raise ValueError("size range is empty (high < low)")
        return self

    def mean(self) -> float:
        """Expected size under the configured distribution."""
        low, high = self.low, self.high
        if high == low:
            return low
        if self.distribution == "uniform":
            return (low + high) / 2.0
        if self.distribution == "log_uniform":
            return (high - low) / math.log(high / low)
        alpha = self.shape
        ratio = (low / high) ** alpha
        if alpha == 1.0:
            return low * high * math.log(high / low) / (high - low)
        return (
            low**alpha
            / (1.0 - ratio)
            * alpha
            / (alpha - 1.0)
            * (low ** (1.0 - alpha) - high ** (1.0 - alpha))
        )


class TemperatureRange(_Strict):
    low: float = Field(default=0.4, ge=0, le=1)
    high: float = Field(default=0.6, ge=0, le=1)

    @model_validator(mode="after")
    def _ordered(self) -> "TemperatureRange":
        if self.high < self.low:
            raise ValueError("temperature range is empty (high < low)")
        return self

    def fraction_at_or_above(self, threshold: float) -> float:
        if self.high == self.low:
            return 1.0 if self.low >= threshold else 0.0
        covered = self.high - max(self.low, min(threshold, self.high))
        return covered / (self.high - self.low)


class PopulationConfig(_Strict):
    count: int = Field(ge=0)
    sizes: SizeSpec
    temperature: TemperatureRange = Field(default_factory=TemperatureRange)


class WorkloadParams(_Strict):
    """Request generation and the hot-cold temperature function"""

    pattern: Literal["poisson", "uniform"] = "poisson"
    hot_rate: float = Field(default=0.5, ge=0)
    cold_rate: float = Field(default=0.01, ge=0)
    hot_threshold: float = Field(default=0.5, gt=0, le=1)
    p_become_hot: float = Field(default=0.3, ge=0, le=1)
    cooldown_window: int = Field(default=10, ge=1)
    decay_step: float = Field(default=0.1, gt=0, le=1)
    recurring_decay: bool = True
    uniform_k: int = Field(default=200, ge=0)
    seed: Optional[int] = None


class InjectionSchedule(_Strict):
    """New files added to the slowest tier while the run progresses"""

    batch_size: int = Field(ge=1)
    period: int = Field(ge=1)
    start_step: int = Field(default=0, ge=0)
    total: Optional[int] = Field(default=None, ge=1)
    sizes: SizeSpec
    temperature: TemperatureRange = Field(default_factory=TemperatureRange)

    def due(self, timestep: int) -> bool:
        if timestep <= 0 or timestep < self.start_step:
            return False
        return (timestep - self.start_step) % self.period == 0


class PlacementStrategy(_Strict):
    variant: Literal["fastest_first", "slowest_first", "distributed"]
    fill_fraction: float = Field(default=0.8, gt=0, le=1)
    distributed_fractions: List[float] = Field(default_factory=lambda: [0.01, 0.10])

    @field_validator("distributed_fractions")
    @classmethod
    def _fractions_in_range(cls, value: List[float]) -> List[float]:
        for fraction in value:
            if not 0 < fraction <= 1:
                raise ValueError(f"fraction {fraction} must be in (0, 1]")
        return value


class RLHyperparams(_Strict):
    """TD(lambda) and fuzzy-membership settings shared by every tier agent"""

    lambda_: float = Field(default=0.6, ge=0, le=1, alias="lambda")
    beta: float = Field(default=0.1, gt=0)
    alpha: float = Field(default=0.1, gt=0)
    tau: float = Field(default=1.0, gt=0)
    membership_a: List[float] = Field(default_factory=lambda: [DEFAULT_MEMBERSHIP_A] * 3)
    membership_b: List[float] = Field(default_factory=lambda: [DEFAULT_MEMBERSHIP_B] * 3)
    scale_2: Optional[float] = Field(default=None, gt=0)
    scale_3: Optional[float] = Field(default=None, gt=0)
    initial_p: float = 0.0
    cold_start_fallback: bool = True

    @field_validator("membership_a", "membership_b")
    @classmethod
    def _three_positive(cls, value: List[float]) -> List[float]:
        if len(value) != 3:
            raise ValueError("expected one value per state dimension (3)")
        if not all(math.isfinite(v) and v > 0 for v in value):
            raise ValueError("membership parameters must be positive and finite")
        return value


class RuleParams(_Strict):
    trigger: Literal["mean", "threshold"] = "mean"


class OutputConfig(_Strict):
    directory: Optional[Path] = None
    heatmap_interval: int = Field(default=1, ge=1)
    agent_trace: bool = False


class ScenarioConfig(_Strict):
    """Everything one simulation run needs"""

    name: str = "scenario"
    tiers: List[TierConfig]
    population: PopulationConfig
    workload: WorkloadParams = Field(default_factory=WorkloadParams)
    injection: Optional[InjectionSchedule] = None
    rl: RLHyperparams = Field(default_factory=RLHyperparams)
    rules: RuleParams = Field(default_factory=RuleParams)
    policies: List[str] = Field(default_factory=lambda: list(POLICY_NAMES))
    timesteps: int = Field(default=1000, ge=0)
    seed: int = 0
    output: OutputConfig = Field(default_factory=OutputConfig)
    check_invariants: bool = False

    @field_validator("policies")
    @classmethod
    def _known_policies(cls, value: List[str]) -> List[str]:
        return _check_policy_names(value)

    @model_validator(mode="after")
    def _consistent(self) -> "ScenarioConfig":
        if len(self.tiers) < 2:
            raise ValueError("at least two tiers are required")
        for slower, faster in zip(self.tiers, self.tiers[1:]):
            if not faster.capacity < slower.capacity:
                raise ValueError("tier capacities must strictly decrease toward the fastest tier")
            if not faster.speed > slower.speed:
                raise ValueError("tier speeds must strictly increase toward the fastest tier")
        expected = self.population.count * self.population.sizes.mean()
        if self.injection is not None and self.injection.total is not None:
            expected += self.injection.total * self.injection.sizes.mean()
        if expected > self.total_capacity:
            raise ValueError(
                f"expected data volume {expected:.6g} exceeds total capacity {self.total_capacity:.6g}"
            )
        if (
            self.workload.pattern == "uniform"
            and self.injection is None
            and self.workload.uniform_k > self.population.count
        ):
            raise ValueError("workload.uniform_k exceeds the number of files")
        return self

    @property
    def total_capacity(self) -> float:
        return sum(tier.capacity for tier in self.tiers)

    def expected_requests_per_step(self) -> float:
        workload = self.workload
        if workload.pattern == "uniform":
            return float(workload.uniform_k)
        hot = self.population.temperature.fraction_at_or_above(workload.hot_threshold)
        return self.population.count * (
            hot * workload.hot_rate + (1.0 - hot) * workload.cold_rate
        )

    def state_scales(self) -> List[float]:
        """Normalization divisors for (s1, s2, s3)."""
        mean_size = self.population.sizes.mean()
        scale_2 = self.rl.scale_2 or self.workload.hot_threshold * mean_size
        if self.rl.scale_3 is not None:
            scale_3 = self.rl.scale_3
        else:
            inverse_speed = sum(1.0 / tier.speed for tier in self.tiers) / len(self.tiers)
            scale_3 = self.expected_requests_per_step() * mean_size * inverse_speed
        return [1.0, scale_2, max(scale_3, 1e-9)]


class ExperimentSpec(_Strict):
    """A fan-out of policies and repetitions over one scenario"""

    scenario: str
    policies: List[str]
    repetitions: int = Field(default=1, ge=1)
    seed: Optional[int] = None
    output_dir: Path
    workers: int = Field(default=1, ge=1)

    @field_validator("policies")
    @classmethod
    def _known_policies(cls, value: List[str]) -> List[str]:
        return _check_policy_names(value)


def _format_location(error: Dict[str, Any]) -> str:
    return ".".join(str(part) for part in error.get("loc", ())) or "<root>"


def parse_scenario(data: Dict[str, Any]) -> ScenarioConfig:
    """Validate a raw mapping into a ScenarioConfig, raising ConfigError on failure."""
    if not isinstance(data, dict):
        raise ConfigError(f"expected a mapping, got {type(data).__name__}")
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigError(first["msg"], field=_format_location(first)) from exc


def load_scenario(source: Union[str, Path]) -> ScenarioConfig:
    """Load a scenario from a YAML file or a bundled preset name."""
    path = Path(source)
    if path.is_file():
        text = path.read_text(encoding="utf-8")
    elif str(source) in PRESET_NAMES:
        text = resources.files("hss_migration").joinpath("presets").joinpath(f"{source}.yaml").read_text(
            encoding="utf-8"
        )
    else:
        raise ConfigError(
            f"no such file, and not a preset ({', '.join(PRESET_NAMES)})", field=str(source)
        )
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}", field=str(source)) from exc
    return parse_scenario(data)


def parse_experiment(data: Dict[str, Any]) -> ExperimentSpec:
    try:
        return ExperimentSpec.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigError(first["msg"], field=_format_location(first)) from exc
