import csv
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from pydantic import BaseModel, Field, ValidationError

from .exceptions import MetricsError

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.jsonl"
HEATMAP_FILE = "heatmap.csv"
AGENTS_FILE = "agents.csv"
SUMMARY_FILE = "summary.json"
COMPARISON_FILE = "comparison.csv"

HEATMAP_COLUMNS = ["timestep", "tier_id", "slot_index", "file_id", "temperature", "size"]
PLOT_KINDS = ("transfers", "esr", "heatmap")

HeatmapRow = Tuple[int, int, int, float, float]


def transfer_directions(num_tiers: int) -> List[str]:
    """Direction keys with 1-based tier names: all upgrades slow to fast, then downgrades fast to slow."""
    ups = [f"up_{tier + 1}_{tier + 2}" for tier in range(num_tiers - 1)]
    downs = [f"down_{tier + 1}_{tier}" for tier in range(num_tiers - 1, 0, -1)]
    return ups + downs


def direction_of(from_tier: int, to_tier: int) -> str:
    kind = "up" if to_tier > from_tier else "down"
    return f"{kind}_{from_tier + 1}_{to_tier + 1}"


class MetricsFrame(BaseModel):
    """One timestep of a run; heatmap and agent records are written to their own CSV files"""

    timestep: int
    requests: int = Field(ge=0)
    injected: int = Field(default=0, ge=0)
    transfers: Dict[str, int]
    total_transfers: int = Field(ge=0)
    estimated_system_response: float
    occupancy: List[float]
    mean_temperature: List[float]
    file_count: List[int]
    heatmap: Optional[List[HeatmapRow]] = Field(default=None, exclude=True)
    agents: Optional[List[dict]] = Field(default=None, exclude=True)


class RunSummary(BaseModel):
    policy: str
    scenario: str
    seed: int
    timesteps: int
    initial_esr: float
    final_esr: float
    mean_transfers: Dict[str, float]
    mean_total_transfers: float
    final_occupancy: List[float]
    final_mean_temperature: List[float]
    temperature_hierarchy: bool
    total_injected: int = 0


def is_temperature_hierarchy(mean_temperature: Sequence[float], file_count: Sequence[int]) -> bool:
    """Mean temperature is non-decreasing from slower to faster among non-empty tiers."""
    means = [mean for mean, count in zip(mean_temperature, file_count) if count > 0]
    return all(faster >= slower - 1e-12 for slower, faster in zip(means, means[1:]))


def summarize(
    policy: str,
    scenario: str,
    seed: int,
    initial_esr: float,
    initial_frame: MetricsFrame,
    frames: Sequence[MetricsFrame],
) -> RunSummary:
    """Aggregate a finished run; without timesteps the placement state is reported."""
    last = frames[-1] if frames else initial_frame
    steps = len(frames)
    directions = list(initial_frame.transfers)
    mean_transfers = {
        direction: (sum(frame.transfers[direction] for frame in frames) / steps if steps else 0.0)
        for direction in directions
    }
    return RunSummary(
        policy=policy,
        scenario=scenario,
        seed=seed,
        timesteps=steps,
        initial_esr=initial_esr,
        final_esr=last.estimated_system_response,
        mean_transfers=mean_transfers,
        mean_total_transfers=(
            sum(frame.total_transfers for frame in frames) / steps if steps else 0.0
        ),
        final_occupancy=last.occupancy,
        final_mean_temperature=last.mean_temperature,
        temperature_hierarchy=is_temperature_hierarchy(last.mean_temperature, last.file_count),
        total_injected=sum(frame.injected for frame in frames),
    )


class RunWriter:
    """Streams one run's artifacts into its directory"""

    def __init__(self, run_dir: Path, agent_trace: bool = False):
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self._metrics = open(self.run_dir / METRICS_FILE, "w", encoding="utf-8", newline="\n")
        self._heatmap_file = open(self.run_dir / HEATMAP_FILE, "w", encoding="utf-8", newline="")
        self._heatmap = csv.writer(self._heatmap_file, lineterminator="\n")
        self._heatmap.writerow(HEATMAP_COLUMNS)
        self._agents_file = None
        self._agents = None
        if agent_trace:
            self._agents_file = open(self.run_dir / AGENTS_FILE, "w", encoding="utf-8", newline="")
            self._agents = csv.writer(self._agents_file, lineterminator="\n")
            self._agents.writerow(
                ["timestep", "tier_id", "cost_signal", "td_error"] + [f"p{i}" for i in range(8)]
            )

    def write_frame(self, frame: MetricsFrame) -> None:
        self._metrics.write(frame.model_dump_json() + "\n")
        if frame.heatmap:
            for tier_id, slot, file_id, temperature, size in frame.heatmap:
                self._heatmap.writerow(
                    [frame.timestep, tier_id, slot, file_id, repr(temperature), repr(size)]
                )
        if self._agents is not None and frame.agents:
            for record in frame.agents:
                self._agents.writerow(
                    [frame.timestep, record["tier_id"], repr(record["cost_signal"]), repr(record["td_error"])]
                    + [repr(value) for value in record["p"]]
                )

    def write_summary(self, summary: RunSummary) -> Path:
        path = self.run_dir / SUMMARY_FILE
        path.write_text(summary.model_dump_json(indent=2) + "\n", encoding="utf-8")
        return path

    def close(self) -> None:
        self._metrics.close()
        self._heatmap_file.close()
        if self._agents_file is not None:
            self._agents_file.close()

    def __enter__(self) -> "RunWriter":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def read_frames(run_dir: Path) -> List[MetricsFrame]:
    path = Path(run_dir) / METRICS_FILE
    if not path.is_file():
        raise MetricsError(f"No {METRICS_FILE} in {run_dir}")
    frames = []
    with open(path, encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                frames.append(MetricsFrame.model_validate_json(line))
            except ValidationError as exc:
                raise MetricsError(f"{path}:{number}: malformed metrics record") from exc
    return frames


def read_summary(run_dir: Path) -> RunSummary:
    path = Path(run_dir) / SUMMARY_FILE
    if not path.is_file():
        raise MetricsError(f"No {SUMMARY_FILE} in {run_dir}")
    return RunSummary.model_validate_json(path.read_text(encoding="utf-8"))


def emit_plot_data(
    run_dir: Path, kind: str, timesteps: Optional[Iterable[int]] = None
) -> Path:
    """Write a tidy CSV for plotting and return its path.

    transfers: (timestep, direction, count, policy)
    esr: (timestep, esr, policy)
    heatmap: the snapshot rows, optionally filtered to some timesteps
    """
    if kind not in PLOT_KINDS:
        raise MetricsError(f"Unknown plot kind '{kind}'; choose from {', '.join(PLOT_KINDS)}")
    run_dir = Path(run_dir)
    output = run_dir / f"plot_{kind}.csv"

    if kind == "heatmap":
        source = run_dir / HEATMAP_FILE
        if not source.is_file():
            raise MetricsError(f"No {HEATMAP_FILE} in {run_dir}")
        wanted = None if timesteps is None else {int(step) for step in timesteps}
        with open(source, encoding="utf-8", newline="") as handle, open(
            output, "w", encoding="utf-8", newline=""
        ) as out:
            reader = csv.reader(handle)
            writer = csv.writer(out, lineterminator="\n")
            header = next(reader, None)
            if header is None:
                raise MetricsError(f"{source} is empty")
            writer.writerow(header)
            for row in reader:
                if wanted is None or int(row[0]) in wanted:
                    writer.writerow(row)
        return output

    frames = read_frames(run_dir)
    if not frames:
        raise MetricsError(f"Run {run_dir} has no timesteps")
    policy = read_summary(run_dir).policy
    with open(output, "w", encoding="utf-8", newline="") as out:
        writer = csv.writer(out, lineterminator="\n")
        if kind == "transfers":
            writer.writerow(["timestep", "direction", "count", "policy"])
            for frame in frames:
                for direction, count in frame.transfers.items():
                    writer.writerow([frame.timestep, direction, count, policy])
        else:
            writer.writerow(["timestep", "esr", "policy"])
            for frame in frames:
                writer.writerow([frame.timestep, repr(frame.estimated_system_response), policy])
    logger.info("Wrote %s", output)
    return output


def write_comparison(rows: Sequence[Tuple[str, int, RunSummary]], path: Path) -> Path:
    """One row per (policy, repetition) run."""
    if not rows:
        raise MetricsError("No runs to compare")
    directions = list(rows[0][2].mean_transfers)
    tiers = len(rows[0][2].final_occupancy)
    header = (
        ["policy", "repetition", "seed"]
        + [f"mean_{direction}" for direction in directions]
        + ["mean_total_transfers", "final_esr"]
        + [f"final_occupancy_{tier + 1}" for tier in range(tiers)]
        + ["temperature_hierarchy"]
    )
    with open(path, "w", encoding="utf-8", newline="") as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        for policy, repetition, summary in rows:
            writer.writerow(
                [policy, repetition, summary.seed]
                + [repr(summary.mean_transfers[direction]) for direction in directions]
                + [repr(summary.mean_total_transfers), repr(summary.final_esr)]
                + [repr(value) for value in summary.final_occupancy]
                + [summary.temperature_hierarchy]
            )
    return path
