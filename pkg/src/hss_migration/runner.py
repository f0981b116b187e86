import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

from .config import ExperimentSpec, ScenarioConfig, load_scenario
from .engine import run_scenario
from .metrics import COMPARISON_FILE, RunSummary, RunWriter, write_comparison

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunTask:
    """Represents one (policy, repetition) run of an experiment"""

    policy: str
    repetition: int
    seed: int
    run_dir: Path


def run_directory(output_dir: Path, policy: str, repetition: int) -> Path:
    return Path(output_dir) / f"{policy}_rep{repetition}"


def execute_task(config: ScenarioConfig, task: RunTask) -> RunSummary:
    """Run one task and write its artifacts; safe to call in a worker process."""
    with RunWriter(task.run_dir, agent_trace=config.output.agent_trace) as writer:
        result = run_scenario(
            config, task.policy, seed=task.seed, sink=writer.write_frame, keep_frames=False
        )
        writer.write_summary(result.summary)
    return result.summary


class ExperimentRunner:
    """Fans an experiment out over policies and repetitions"""

    def __init__(self, spec: ExperimentSpec, config: Optional[ScenarioConfig] = None):
        self.spec = spec
        self.config = config or load_scenario(spec.scenario)

    def tasks(self) -> List[RunTask]:
        base = self.config.seed if self.spec.seed is None else self.spec.seed
        return [
            RunTask(policy, repetition, base + repetition, run_directory(self.spec.output_dir, policy, repetition))
            for policy in self.spec.policies
            for repetition in range(self.spec.repetitions)
        ]

    def run(self) -> Path:
        """Execute every task and write the comparison table; returns its path."""
        tasks = self.tasks()
        output_dir = Path(self.spec.output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        logger.info(
            "Running %d runs of %s with %d worker(s) into %s",
            len(tasks),
            self.config.name,
            self.spec.workers,
            output_dir,
        )

        if self.spec.workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=self.spec.workers) as pool:
                summaries = list(pool.map(execute_task, [self.config] * len(tasks), tasks))
        else:
            summaries = [execute_task(self.config, task) for task in tasks]

        rows: List[Tuple[str, int, RunSummary]] = [
            (task.policy, task.repetition, summary) for task, summary in zip(tasks, summaries)
        ]
        path = write_comparison(rows, output_dir / COMPARISON_FILE)
        logger.info("Wrote %s", path)
        return path
