import logging
import math
from typing import List, Sequence

import numpy as np

from .config import InjectionSchedule, PopulationConfig, SizeSpec, TemperatureRange, WorkloadParams
from .exceptions import CapacityError, PreconditionError
from .interfaces import IRequestGenerator
from .models import FileRecord, RequestEntry, RequestTrace
from .storage import Hierarchy

logger = logging.getLogger(__name__)

# Temperatures are rounded so repeated decay lands exactly on multiples of the step
_TEMPERATURE_DECIMALS = 12


def draw_sizes(spec: SizeSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    """Sample file sizes from the configured distribution."""
    low, high = spec.low, spec.high
    if count == 0:
        return np.zeros(0)
    if spec.distribution == "uniform":
        if float(low).is_integer() and float(high).is_integer():
            return rng.integers(int(low), int(high), size=count, endpoint=True).astype(float)
        return rng.uniform(low, high, size=count)
    if spec.distribution == "log_uniform":
        return np.exp(rng.uniform(math.log(low), math.log(high), size=count))
    # bounded Pareto by inverse CDF
    alpha = spec.shape
    u = rng.random(count)
    ratio = (low / high) ** alpha
    return low * (1.0 - u * (1.0 - ratio)) ** (-1.0 / alpha)


def draw_temperatures(
    temperature: TemperatureRange, count: int, rng: np.random.Generator
) -> np.ndarray:
    return rng.uniform(temperature.low, temperature.high, size=count)


def create_population(config: PopulationConfig, rng: np.random.Generator) -> List[FileRecord]:
    """Unplaced file records; placement assigns the tier."""
    sizes = draw_sizes(config.sizes, config.count, rng)
    temperatures = draw_temperatures(config.temperature, config.count, rng)
    return [
        FileRecord(file_id=index, size=float(size), temperature=float(temp), tier_id=0)
        for index, (size, temp) in enumerate(zip(sizes, temperatures))
    ]


def gen_poisson_requests(
    files: Sequence[FileRecord],
    params: WorkloadParams,
    rng: np.random.Generator,
    timestep: int = 0,
) -> RequestTrace:
    """Per-file Poisson request counts, the rate chosen by the file's hotness."""
    if not files:
        raise PreconditionError("Cannot generate requests for an empty population")
    temperatures = np.fromiter(
        (record.request_temperature for record in files), dtype=float, count=len(files)
    )
    rates = np.where(temperatures >= params.hot_threshold, params.hot_rate, params.cold_rate)
    counts = rng.poisson(rates)
    entries = []
    for index in np.flatnonzero(counts):
        offsets = np.sort(rng.random(int(counts[index])))
        entries.append(RequestEntry(files[index].file_id, tuple(float(x) for x in offsets)))
    return RequestTrace(timestep=timestep, entries=entries)


def gen_uniform_requests(
    files: Sequence[FileRecord],
    params: WorkloadParams,
    rng: np.random.Generator,
    timestep: int = 0,
) -> RequestTrace:
    """Exactly uniform_k distinct files, one request each."""
    k = params.uniform_k
    if k > len(files):
        raise PreconditionError(f"uniform_k={k} exceeds the population of {len(files)} files")
    if k == 0:
        return RequestTrace(timestep=timestep, entries=[])
    chosen = np.sort(rng.choice(len(files), size=k, replace=False))
    offsets = rng.random(k)
    entries = [
        RequestEntry(files[index].file_id, (float(offset),))
        for index, offset in zip(chosen, offsets)
    ]
    return RequestTrace(timestep=timestep, entries=entries)


class RequestGenerator(IRequestGenerator):
    """Dispatches to the configured request pattern"""

    def __init__(self, params: WorkloadParams):
        self.params = params

    def generate(self, hierarchy: Hierarchy, timestep: int, rng: np.random.Generator) -> RequestTrace:
        files = hierarchy.files()
        if self.params.pattern == "uniform":
            return gen_uniform_requests(files, self.params, rng, timestep)
        return gen_poisson_requests(files, self.params, rng, timestep)


def apply_temperature_dynamics(
    hierarchy: Hierarchy,
    trace: RequestTrace,
    timestep: int,
    params: WorkloadParams,
    rng: np.random.Generator,
    size_sensitivity: bool = False,
) -> None:
    """The hot-cold function: requested cold files may turn hot, idle files cool down.

    With size sensitivity a file's temperature trails its activity, the
    hotness its requests follow. Once the activity has turned hot, each
    request brings the temperature up to it with probability
    min(1, mean file size / size), so a large file needs more requests
    to read as hot.
    """
    if trace.timestep != timestep:
        raise PreconditionError(
            f"Trace of timestep {trace.timestep} applied at timestep {timestep}"
        )
    hot = params.hot_threshold
    mean_size = hierarchy.mean_file_size() if size_sensitivity else 0.0
    for entry in trace.entries:
        record = hierarchy.file(entry.file_id)
        if record.request_temperature < hot and rng.random() < params.p_become_hot:
            heated = float(rng.uniform(hot, 1.0))
            if size_sensitivity:
                hierarchy.set_activity(entry.file_id, heated)
            else:
                hierarchy.set_temperature(entry.file_id, heated)
        if size_sensitivity and record.temperature < hot <= record.request_temperature:
            if rng.random() < min(1.0, mean_size / record.size):
                hierarchy.set_temperature(entry.file_id, record.request_temperature)
        hierarchy.touch(entry.file_id, timestep)

    for record in hierarchy.files():
        if record.request_temperature <= 0.0:
            continue
        idle = timestep - record.idle_since
        if params.recurring_decay:
            decays = idle >= params.cooldown_window
        else:
            decays = idle > 0 and idle % params.cooldown_window == 0
        if not decays:
            continue
        hierarchy.set_temperature(record.file_id, _cooled(record.temperature, params.decay_step))
        if record.activity is not None:
            hierarchy.set_activity(record.file_id, _cooled(record.activity, params.decay_step))


def _cooled(temperature: float, step: float) -> float:
    return round(max(0.0, temperature - step), _TEMPERATURE_DECIMALS)


def inject_new_files(
    hierarchy: Hierarchy,
    timestep: int,
    schedule: InjectionSchedule,
    rng: np.random.Generator,
    already_injected: int = 0,
) -> List[int]:
    """Create a scheduled batch in the slowest tier, spilling upward when it is full."""
    if not schedule.due(timestep):
        return []
    batch = schedule.batch_size
    if schedule.total is not None:
        batch = min(batch, schedule.total - already_injected)
    if batch <= 0:
        return []

    sizes = draw_sizes(schedule.sizes, batch, rng)
    temperatures = draw_temperatures(schedule.temperature, batch, rng)
    free = [hierarchy.free(tier_id) for tier_id in range(hierarchy.num_tiers)]
    if float(np.sum(sizes)) > sum(free):
        raise CapacityError(
            f"Injection at timestep {timestep} needs {float(np.sum(sizes)):.6g} units, "
            f"only {sum(free):.6g} free in the hierarchy"
        )

    placements = []
    for size in sizes:
        for tier_id in range(hierarchy.num_tiers):
            if free[tier_id] >= size:
                free[tier_id] -= size
                placements.append(tier_id)
                break
        else:
            raise CapacityError(
                f"No tier can hold an injected file of size {size:.6g} at timestep {timestep}"
            )

    first_id = hierarchy.next_file_id()
    created = []
    for offset, (size, temp, tier_id) in enumerate(zip(sizes, temperatures, placements)):
        record = FileRecord(
            file_id=first_id + offset,
            size=float(size),
            temperature=float(temp),
            tier_id=tier_id,
            created_step=timestep,
        )
        hierarchy.add_file(record)
        created.append(record.file_id)
    logger.debug("Injected %d files at timestep %d", len(created), timestep)
    return created
