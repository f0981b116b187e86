import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator, List, Optional

import numpy as np

from .config import ScenarioConfig
from .exceptions import MetadataError
from .interfaces import IMigrationPolicy
from .metrics import (
    MetricsFrame,
    RunSummary,
    direction_of,
    summarize,
    transfer_directions,
)
from .models import Action, PolicyDecision, RequestTrace, ServedRequest, ServiceResult, TierSpec
from .placement import initial_placement
from .policies import build_policy, policy_profile
from .storage import Hierarchy
from .workload import (
    RequestGenerator,
    apply_temperature_dynamics,
    create_population,
    inject_new_files,
)

logger = logging.getLogger(__name__)


def service_requests(
    hierarchy: Hierarchy, trace: RequestTrace, tier_speeds: Optional[List[float]] = None
) -> ServiceResult:
    """Serve a timestep's requests on one FIFO server per tier.

    A request's response time is the service time queued ahead of it at
    its tier plus its own size / speed. The queue drains within the
    timestep; pending is the total service time enqueued per tier.
    """
    speeds = tier_speeds or [tier.speed for tier in hierarchy.tiers]
    busy = [0.0] * hierarchy.num_tiers
    served = []
    for offset, file_id in trace.arrivals():
        record = hierarchy.file(file_id)
        busy[record.tier_id] += record.size / speeds[record.tier_id]
        served.append(ServedRequest(file_id, record.tier_id, offset, busy[record.tier_id]))
    return ServiceResult(requests=served, pending=busy)


def estimated_system_response(hierarchy: Hierarchy) -> float:
    """Sum over files of temperature * size / speed of the tier holding it."""
    speeds = [tier.speed for tier in hierarchy.tiers]
    return math.fsum(
        record.temperature * record.size / speeds[record.tier_id]
        for record in hierarchy.files()
    )


def execute_decision_with_eviction(
    hierarchy: Hierarchy, decision: PolicyDecision
) -> List[PolicyDecision]:
    """Carry out one decision, downgrading colder residents first when the destination is full.

    Returns the executed moves, evictions first; empty when the move was
    abandoned or the decision was STAY.
    """
    if decision.action is Action.STAY:
        return []
    record = hierarchy.file(decision.file_id)
    if record.tier_id != decision.from_tier:
        raise MetadataError(
            f"File {decision.file_id} is in tier {record.tier_id}, "
            f"decision expects tier {decision.from_tier}"
        )
    moves = hierarchy.plan_move(decision.file_id, decision.to_tier)
    if moves is None:
        logger.debug("Abandoned move of file %d to tier %d", decision.file_id, decision.to_tier)
        return []
    hierarchy.apply(moves)
    return moves


def fill_free_space(hierarchy: Hierarchy, policy: IMigrationPolicy) -> List[PolicyDecision]:
    """Move admitted files up into free space, fastest tier first, hottest candidates first.

    Only files that fit without evicting anything are candidates; the scan of a
    tier stops at the first candidate the policy turns down.
    """
    moves: List[PolicyDecision] = []
    for dest in range(hierarchy.fastest_tier, hierarchy.slowest_tier, -1):
        for record in list(hierarchy.iter_hottest(dest - 1)):
            free = hierarchy.free(dest)
            if free <= 0:
                break
            if record.size > free:
                continue
            if not policy.admit(record.file_id, hierarchy):
                break
            moves.extend(
                execute_decision_with_eviction(
                    hierarchy, PolicyDecision.upgrade(record.file_id, dest - 1)
                )
            )
    return moves


@dataclass
class RunResult:
    summary: RunSummary
    frames: List[MetricsFrame] = field(default_factory=list)
    wall_seconds: float = 0.0


class Simulator:
    """One scenario under one policy, advanced a timestep at a time"""

    def __init__(
        self,
        config: ScenarioConfig,
        policy_name: str,
        seed: Optional[int] = None,
        policy: Optional[IMigrationPolicy] = None,
    ):
        self.config = config
        self.policy_name = policy_name
        self.seed = config.seed if seed is None else seed
        self.profile = policy_profile(policy_name)
        self.policy = policy or build_policy(policy_name, config)

        population_seq, requests_seq, dynamics_seq, injection_seq = np.random.SeedSequence(
            self.seed
        ).spawn(4)
        if config.workload.seed is not None:
            requests_seq, dynamics_seq = np.random.SeedSequence(config.workload.seed).spawn(2)
        self._population_rng = np.random.default_rng(population_seq)
        self._requests_rng = np.random.default_rng(requests_seq)
        self._dynamics_rng = np.random.default_rng(dynamics_seq)
        self._injection_rng = np.random.default_rng(injection_seq)

        self.hierarchy = Hierarchy(
            [
                TierSpec(tier_id=tier_id, capacity=tier.capacity, speed=tier.speed)
                for tier_id, tier in enumerate(config.tiers)
            ]
        )
        self.generator = RequestGenerator(config.workload)
        self.directions = transfer_directions(self.hierarchy.num_tiers)
        self.injected = 0
        self.timestep = 0
        self._started = False

    def setup(self) -> None:
        """Create the population and place it with the policy's strategy."""
        if self._started:
            return
        files = create_population(self.config.population, self._population_rng)
        initial_placement(files, self.hierarchy, self.profile.placement)
        self.policy.start(self.hierarchy)
        self._started = True

    def frame(
        self,
        timestep: int,
        moves: Optional[List[PolicyDecision]] = None,
        requests: int = 0,
        injected: int = 0,
        heatmap: bool = False,
        agents: Optional[List[dict]] = None,
    ) -> MetricsFrame:
        transfers = dict.fromkeys(self.directions, 0)
        for move in moves or []:
            transfers[direction_of(move.from_tier, move.to_tier)] += 1
        hierarchy = self.hierarchy
        states = [hierarchy.compute_tier_state(t) for t in range(hierarchy.num_tiers)]
        return MetricsFrame(
            timestep=timestep,
            requests=requests,
            injected=injected,
            transfers=transfers,
            total_transfers=sum(transfers.values()),
            estimated_system_response=estimated_system_response(hierarchy),
            occupancy=[hierarchy.occupancy(t) for t in range(hierarchy.num_tiers)],
            mean_temperature=[state.s1 for state in states],
            file_count=[state.file_count for state in states],
            heatmap=hierarchy.snapshot() if heatmap else None,
            agents=agents,
        )

    def step(self) -> MetricsFrame:
        self.setup()
        self.timestep += 1
        timestep = self.timestep
        config = self.config
        hierarchy = self.hierarchy

        injected = []
        if config.injection is not None:
            injected = inject_new_files(
                hierarchy, timestep, config.injection, self._injection_rng, self.injected
            )
            self.injected += len(injected)

        trace = self.generator.generate(hierarchy, timestep, self._requests_rng)
        service = service_requests(hierarchy, trace)
        self.policy.begin_timestep(hierarchy, service.pending)

        moves: List[PolicyDecision] = []
        for _, file_id in trace.arrivals():
            if hierarchy.file(file_id).tier_id == hierarchy.fastest_tier:
                continue
            for decision in self.policy.decide(file_id, hierarchy):
                moves.extend(execute_decision_with_eviction(hierarchy, decision))
        moves.extend(fill_free_space(hierarchy, self.policy))

        apply_temperature_dynamics(
            hierarchy,
            trace,
            timestep,
            config.workload,
            self._dynamics_rng,
            size_sensitivity=self.policy.size_sensitive,
        )
        hierarchy.resync()
        agents = self.policy.end_timestep(hierarchy, service, timestep)
        if config.check_invariants:
            hierarchy.check_invariants()

        interval = config.output.heatmap_interval
        snapshot = timestep == 1 or timestep == config.timesteps or timestep % interval == 0
        frame = self.frame(
            timestep,
            moves,
            requests=trace.total_requests,
            injected=len(injected),
            heatmap=snapshot,
            agents=agents if config.output.agent_trace else None,
        )
        logger.debug(
            "Timestep %d: %d requests, %d transfers", timestep, frame.requests, frame.total_transfers
        )
        return frame

    def run(self) -> Iterator[MetricsFrame]:
        self.setup()
        while self.timestep < self.config.timesteps:
            yield self.step()


def run_scenario(
    config: ScenarioConfig,
    policy_name: Optional[str] = None,
    seed: Optional[int] = None,
    sink: Optional[Callable[[MetricsFrame], None]] = None,
    keep_frames: bool = True,
) -> RunResult:
    """Run one policy over a scenario and summarize it.

    Args:
        config: A validated scenario
        policy_name: Defaults to the first policy the scenario lists
        seed: Overrides config.seed
        sink: Called with every frame as it is produced
        keep_frames: Drop frames after summarizing when False (heatmaps get large)

    Returns:
        RunResult with the summary and, when kept, the frames
    """
    name = policy_name or config.policies[0]
    simulator = Simulator(config, name, seed=seed)
    started = time.perf_counter()
    simulator.setup()
    initial = simulator.frame(0)
    logger.info(
        "Running %s on %s for %d timesteps (seed %d)",
        name,
        config.name,
        config.timesteps,
        simulator.seed,
    )

    frames = []
    for frame in simulator.run():
        if sink is not None:
            sink(frame)
        if not keep_frames:
            frame = frame.model_copy(update={"heatmap": None, "agents": None})
        frames.append(frame)

    summary = summarize(
        name, config.name, simulator.seed, initial.estimated_system_response, initial, frames
    )
    elapsed = time.perf_counter() - started
    logger.info(
        "%s finished: final ESR %.6g, %.2f transfers/timestep, %.1fs",
        name,
        summary.final_esr,
        summary.mean_total_transfers,
        elapsed,
    )
    return RunResult(summary=summary, frames=frames, wall_seconds=elapsed)
