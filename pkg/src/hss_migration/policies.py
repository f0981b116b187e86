import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set

from .agents import FrbAgent, compute_cost_signal
from .config import PlacementStrategy, ScenarioConfig
from .exceptions import PreconditionError
from .interfaces import IMigrationPolicy
from .models import CostSignalInputs, PolicyDecision, ServiceResult
from .storage import Hierarchy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PolicyProfile:
    """How a named policy initializes tiers and decides migrations"""

    kind: str  # 'rule' or 'rl'
    placement: PlacementStrategy
    size_sensitive: bool = False
    rule_variant: int = 0


POLICY_TABLE: Dict[str, PolicyProfile] = {
    "rule1": PolicyProfile("rule", PlacementStrategy(variant="fastest_first"), rule_variant=1),
    "rule2": PolicyProfile("rule", PlacementStrategy(variant="slowest_first"), rule_variant=2),
    "rule3": PolicyProfile(
        "rule", PlacementStrategy(variant="fastest_first"), size_sensitive=True, rule_variant=3
    ),
    "rl-ft": PolicyProfile("rl", PlacementStrategy(variant="fastest_first", fill_fraction=1.0)),
    "rl-dt": PolicyProfile("rl", PlacementStrategy(variant="distributed")),
    "rl-st": PolicyProfile("rl", PlacementStrategy(variant="slowest_first")),
}


def policy_profile(name: str) -> PolicyProfile:
    try:
        return POLICY_TABLE[name]
    except KeyError:
        raise PreconditionError(f"Unknown policy '{name}'")


def _rule_trigger(
    hierarchy: Hierarchy, file_id: int, trigger: str, hot_threshold: float
) -> bool:
    record = hierarchy.file(file_id)
    if trigger == "threshold":
        return record.temperature >= hot_threshold
    return record.temperature > hierarchy.compute_tier_state(record.tier_id + 1).s1


def rule_based_decide(
    variant: int,
    requested_file: int,
    hierarchy: Hierarchy,
    trigger: str = "mean",
    hot_threshold: float = 0.5,
) -> List[PolicyDecision]:
    """Upgrade a requested file that is hotter than its destination tier.

    Variant 3 shares this logic; its size sensitivity lives in the
    temperature dynamics. The returned list holds the evictions first and
    the upgrade last, or nothing when room cannot be made.
    """
    if variant not in (1, 2, 3):
        raise PreconditionError(f"Unknown rule-based variant {variant}")
    record = hierarchy.file(requested_file)
    if record.tier_id == hierarchy.fastest_tier:
        return []
    if not _rule_trigger(hierarchy, requested_file, trigger, hot_threshold):
        return []
    return hierarchy.plan_move(requested_file, record.tier_id + 1) or []


def decide_upgrade(
    file_k: int,
    tier_i: int,
    tier_j: int,
    agent_i: FrbAgent,
    agent_j: FrbAgent,
    hierarchy: Hierarchy,
    pending_i: float = 0.0,
    pending_j: float = 0.0,
) -> bool:
    """Upgrade iff room can be made and the cost-weighted mean temperature of the tier pair drops.

    C_up(i) * s1~(i) + C_up(j) * s1~(j) < C_not(i) * s1(i) + C_not(j) * s1(j), where the
    "up" terms are evaluated on the states the tiers would have once the whole
    planned move, evictions included, has been carried out (s1 and s2
    recomputed, s3 held). A move that displaces residents of tier j must also
    bring in a file hotter than tier j's current mean.
    """
    if tier_j != tier_i + 1:
        raise PreconditionError(f"Tier {tier_j} is not the next faster tier after {tier_i}")
    if tier_i >= hierarchy.fastest_tier:
        raise PreconditionError(f"File {file_k} is already in the fastest tier")
    record = hierarchy.file(file_k)
    if record.tier_id != tier_i:
        raise PreconditionError(f"File {file_k} is in tier {record.tier_id}, not tier {tier_i}")

    plan = hierarchy.plan_move(file_k, tier_j)
    if plan is None:
        return False
    now_i = hierarchy.compute_tier_state(tier_i, pending_i)
    now_j = hierarchy.compute_tier_state(tier_j, pending_j)
    if displaces(plan) and not record.temperature > now_j.s1:
        return False
    up_i = hierarchy.planned_state(tier_i, plan, pending_i)
    up_j = hierarchy.planned_state(tier_j, plan, pending_j)

    cost_up = agent_i.value(up_i.as_vector()) * up_i.s1 + agent_j.value(up_j.as_vector()) * up_j.s1
    cost_not = (
        agent_i.value(now_i.as_vector()) * now_i.s1 + agent_j.value(now_j.as_vector()) * now_j.s1
    )
    return cost_up < cost_not


def displaces(plan: Sequence[PolicyDecision]) -> bool:
    """Whether a planned move evicts anything besides moving its own file"""
    return len(plan) > 1


class RuleBasedPolicy(IMigrationPolicy):
    def __init__(
        self,
        name: str,
        variant: int,
        trigger: str = "mean",
        hot_threshold: float = 0.5,
        size_sensitive: bool = False,
    ):
        self.name = name
        self.variant = variant
        self.trigger = trigger
        self.hot_threshold = hot_threshold
        self.size_sensitive = size_sensitive

    def decide(self, file_id: int, hierarchy: Hierarchy) -> List[PolicyDecision]:
        return rule_based_decide(
            self.variant, file_id, hierarchy, self.trigger, self.hot_threshold
        )

    def admit(self, file_id: int, hierarchy: Hierarchy) -> bool:
        return _rule_trigger(hierarchy, file_id, self.trigger, self.hot_threshold)


class RLPolicy(IMigrationPolicy):
    """One FRB agent per tier; decisions by the cost comparison, learning once per timestep.

    Each tier pair takes at most one displacing upgrade per timestep.
    """

    def __init__(
        self,
        name: str,
        agents: Sequence[FrbAgent],
        tau: float = 1.0,
        cold_start_fallback: bool = True,
        trigger: str = "mean",
        hot_threshold: float = 0.5,
    ):
        self.name = name
        self.agents = list(agents)
        self.tau = tau
        self.cold_start_fallback = cold_start_fallback
        self.trigger = trigger
        self.hot_threshold = hot_threshold
        self._pending: List[float] = [0.0] * len(self.agents)
        self._displaced: Set[int] = set()

    def start(self, hierarchy: Hierarchy) -> None:
        """Record each tier's state right after initial placement."""
        for agent in self.agents:
            agent.observe(hierarchy.compute_tier_state(agent.tier_id).as_vector())

    def begin_timestep(self, hierarchy: Hierarchy, pending: Sequence[float]) -> None:
        self._pending = list(pending)
        self._displaced = set()

    def _learning(self, tier_i: int) -> bool:
        if not self.cold_start_fallback:
            return True
        return self.agents[tier_i].updates > 0 and self.agents[tier_i + 1].updates > 0

    def _upgrade(self, file_id: int, tier_i: int, hierarchy: Hierarchy) -> bool:
        tier_j = tier_i + 1
        return decide_upgrade(
            file_id,
            tier_i,
            tier_j,
            self.agents[tier_i],
            self.agents[tier_j],
            hierarchy,
            self._pending[tier_i],
            self._pending[tier_j],
        )

    def decide(self, file_id: int, hierarchy: Hierarchy) -> List[PolicyDecision]:
        record = hierarchy.file(file_id)
        tier_i = record.tier_id
        if tier_i == hierarchy.fastest_tier:
            return []
        if not self._learning(tier_i):
            if not _rule_trigger(hierarchy, file_id, self.trigger, self.hot_threshold):
                return []
            if hierarchy.plan_move(file_id, tier_i + 1) is None:
                return []
            return [PolicyDecision.upgrade(file_id, tier_i)]

        plan = hierarchy.plan_move(file_id, tier_i + 1)
        if plan is None:
            return []
        displacing = displaces(plan)
        if displacing and tier_i in self._displaced:
            return []
        if not self._upgrade(file_id, tier_i, hierarchy):
            return []
        if displacing:
            self._displaced.add(tier_i)
        return [PolicyDecision.upgrade(file_id, tier_i)]

    def admit(self, file_id: int, hierarchy: Hierarchy) -> bool:
        tier_i = hierarchy.file(file_id).tier_id
        if not self._learning(tier_i):
            return _rule_trigger(hierarchy, file_id, self.trigger, self.hot_threshold)
        return self._upgrade(file_id, tier_i, hierarchy)

    def end_timestep(
        self, hierarchy: Hierarchy, service: ServiceResult, timestep: int
    ) -> Optional[List[dict]]:
        records = []
        for agent in self.agents:
            if agent.last_state is None:
                agent.observe(hierarchy.compute_tier_state(agent.tier_id).as_vector())
            served = service.for_tier(agent.tier_id)
            inputs = CostSignalInputs(
                responses=tuple(request.response for request in served),
                arrival_times=tuple(timestep + request.offset for request in served),
                entry_time=float(timestep),
                tau=self.tau,
            )
            cost = compute_cost_signal(inputs, agent.beta)
            next_state = hierarchy.compute_tier_state(
                agent.tier_id, service.pending[agent.tier_id]
            ).as_vector()
            td_error = agent.update(cost, agent.last_state, next_state, inputs.tau)
            records.append(
                {
                    "tier_id": agent.tier_id,
                    "cost_signal": cost,
                    "td_error": td_error,
                    "p": agent.p.tolist(),
                }
            )
        logger.debug(
            "Timestep %d TD errors: %s",
            timestep,
            ", ".join(f"{record['td_error']:.4g}" for record in records),
        )
        return records


def build_policy(name: str, config: ScenarioConfig) -> IMigrationPolicy:
    profile = policy_profile(name)
    hot_threshold = config.workload.hot_threshold
    if profile.kind == "rule":
        return RuleBasedPolicy(
            name,
            profile.rule_variant,
            trigger=config.rules.trigger,
            hot_threshold=hot_threshold,
            size_sensitive=profile.size_sensitive,
        )
    scales = config.state_scales()
    agents = [
        FrbAgent.from_config(tier_id, config.rl, scales) for tier_id in range(len(config.tiers))
    ]
    return RLPolicy(
        name,
        agents,
        tau=config.rl.tau,
        cold_start_fallback=config.rl.cold_start_fallback,
        trigger=config.rules.trigger,
        hot_threshold=hot_threshold,
    )
