import logging
from typing import List, Sequence

from .config import PlacementStrategy
from .exceptions import CapacityError, PreconditionError
from .models import FileRecord
from .storage import Hierarchy

logger = logging.getLogger(__name__)


def initial_placement(
    files: Sequence[FileRecord], hierarchy: Hierarchy, strategy: PlacementStrategy
) -> None:
    """Place a fresh population into an empty hierarchy.

    Args:
        files: Records to place, in insertion order; their tier_id is overwritten
        hierarchy: An empty hierarchy
        strategy: fastest_first fills each faster tier up to fill_fraction of its
            capacity before moving on, slowest_first puts everything in the slowest
            tier, distributed assigns fixed fractions of the files (by count) to the
            fastest tiers and the rest to the slowest

    Raises:
        CapacityError: If a file fits nowhere; the message names the tier
    """
    if len(hierarchy) != 0:
        raise PreconditionError("Initial placement requires an empty hierarchy")
    if strategy.variant == "fastest_first":
        targets = _fastest_first_targets(files, hierarchy, strategy.fill_fraction)
    elif strategy.variant == "slowest_first":
        targets = [hierarchy.slowest_tier] * len(files)
    else:
        targets = _distributed_targets(len(files), hierarchy, strategy.distributed_fractions)

    for record, target in zip(files, targets):
        record.tier_id = _first_fit(hierarchy, record, target)
        hierarchy.add_file(record)
    logger.info(
        "Placed %d files with %s: %s",
        len(files),
        strategy.variant,
        ", ".join(f"tier{t + 1}={len(hierarchy.file_ids_in(t))}" for t in range(hierarchy.num_tiers)),
    )


def _fastest_first_targets(
    files: Sequence[FileRecord], hierarchy: Hierarchy, fill_fraction: float
) -> List[int]:
    planned = [0.0] * hierarchy.num_tiers
    targets = []
    for record in files:
        target = hierarchy.slowest_tier
        for tier_id in range(hierarchy.fastest_tier, hierarchy.slowest_tier, -1):
            limit = fill_fraction * hierarchy.tiers[tier_id].capacity
            if planned[tier_id] + record.size <= limit:
                target = tier_id
                break
        planned[target] += record.size
        targets.append(target)
    return targets


def _distributed_targets(count: int, hierarchy: Hierarchy, fractions: Sequence[float]) -> List[int]:
    targets = []
    tier_id = hierarchy.fastest_tier
    for fraction in fractions:
        if tier_id == hierarchy.slowest_tier:
            break
        targets.extend([tier_id] * int(round(fraction * count)))
        tier_id -= 1
    targets = targets[:count]
    targets.extend([hierarchy.slowest_tier] * (count - len(targets)))
    return targets


def _first_fit(hierarchy: Hierarchy, record: FileRecord, target: int) -> int:
    """The target tier if it has room, otherwise the nearest tier that does (slower first)."""
    candidates = [target]
    candidates += list(range(target - 1, -1, -1))
    candidates += list(range(target + 1, hierarchy.num_tiers))
    for tier_id in candidates:
        if hierarchy.free(tier_id) >= record.size:
            return tier_id
    raise CapacityError(
        f"Tier {target + 1} (id {target}) and every other tier are too full for file "
        f"{record.file_id} of size {record.size}",
        tier_id=target,
    )
