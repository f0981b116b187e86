import logging
import math
from collections import defaultdict
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple

from sortedcontainers import SortedList

from .exceptions import CapacityError, MetadataError, PreconditionError
from .models import Action, FileRecord, PolicyDecision, TierSpec, TierState

logger = logging.getLogger(__name__)

# (temperature, -size, file_id): coldest first, bigger first on ties, then lower id
ColdKey = Tuple[float, float, int]


def _cold_key(record: FileRecord) -> ColdKey:
    return (record.temperature, -record.size, record.file_id)


class _TierOccupancy:
    """Derived per-tier index over the metadata table"""

    def __init__(self, spec: TierSpec):
        self.spec = spec
        self.members: Set[int] = set()
        self.coldness: SortedList = SortedList()
        self.used = 0.0
        self.temperature_sum = 0.0
        self.weighted_sum = 0.0

    def add(self, record: FileRecord) -> None:
        self.members.add(record.file_id)
        self.coldness.add(_cold_key(record))
        self.used += record.size
        self.temperature_sum += record.temperature
        self.weighted_sum += record.temperature * record.size

    def remove(self, record: FileRecord) -> None:
        self.members.remove(record.file_id)
        self.coldness.remove(_cold_key(record))
        self.used -= record.size
        self.temperature_sum -= record.temperature
        self.weighted_sum -= record.temperature * record.size
        if not self.members:
            self.used = 0.0
            self.temperature_sum = 0.0
            self.weighted_sum = 0.0


class Hierarchy:
    """Tier hierarchy plus the file metadata table.

    The metadata table is the source of truth; per-tier occupancy sets,
    coldness indexes and running sums are derived from it and kept in step
    by every mutating method.
    """

    def __init__(self, tiers: Sequence[TierSpec]):
        self._validate_tiers(tiers)
        self._tiers: List[_TierOccupancy] = [_TierOccupancy(spec) for spec in tiers]
        self._metadata: Dict[int, FileRecord] = {}

    @staticmethod
    def _validate_tiers(tiers: Sequence[TierSpec]) -> None:
        if len(tiers) < 2:
            raise PreconditionError("A hierarchy needs at least two tiers")
        for index, spec in enumerate(tiers):
            if spec.tier_id != index:
                raise PreconditionError(
                    f"Tier ids must be 0..n-1 in order, got {spec.tier_id} at position {index}"
                )
            if not (spec.capacity > 0 and spec.speed > 0):
                raise PreconditionError(f"Tier {index} needs positive capacity and speed")
        for slower, faster in zip(tiers, tiers[1:]):
            if not faster.capacity < slower.capacity:
                raise PreconditionError(
                    f"Tier {faster.tier_id} must be smaller than tier {slower.tier_id}"
                )
            if not faster.speed > slower.speed:
                raise PreconditionError(
                    f"Tier {faster.tier_id} must be faster than tier {slower.tier_id}"
                )

    # Read access

    @property
    def tiers(self) -> List[TierSpec]:
        return [tier.spec for tier in self._tiers]

    @property
    def num_tiers(self) -> int:
        return len(self._tiers)

    @property
    def fastest_tier(self) -> int:
        return len(self._tiers) - 1

    @property
    def slowest_tier(self) -> int:
        return 0

    def __len__(self) -> int:
        return len(self._metadata)

    def __contains__(self, file_id: int) -> bool:
        return file_id in self._metadata

    def file(self, file_id: int) -> FileRecord:
        try:
            return self._metadata[file_id]
        except KeyError:
            raise MetadataError(f"Unknown file {file_id}")

    def files(self) -> List[FileRecord]:
        """All files in insertion (creation) order."""
        return list(self._metadata.values())

    def file_ids_in(self, tier_id: int) -> Set[int]:
        return set(self._tier(tier_id).members)

    def used(self, tier_id: int) -> float:
        return self._tier(tier_id).used

    def free(self, tier_id: int) -> float:
        tier = self._tier(tier_id)
        return tier.spec.capacity - tier.used

    def occupancy(self, tier_id: int) -> float:
        tier = self._tier(tier_id)
        return tier.used / tier.spec.capacity

    def next_file_id(self) -> int:
        return max(self._metadata, default=-1) + 1

    def _tier(self, tier_id: int) -> _TierOccupancy:
        if not 0 <= tier_id < len(self._tiers):
            raise PreconditionError(f"Unknown tier {tier_id}")
        return self._tiers[tier_id]

    # Mutation

    def add_file(self, record: FileRecord) -> None:
        """Register a new file in the tier named by record.tier_id."""
        if record.file_id in self._metadata:
            raise MetadataError(f"File {record.file_id} already exists")
        tier = self._tier(record.tier_id)
        if tier.used + record.size > tier.spec.capacity:
            raise CapacityError(
                f"Tier {record.tier_id} cannot hold file {record.file_id} "
                f"(size {record.size}, free {tier.spec.capacity - tier.used})",
                tier_id=record.tier_id,
            )
        self._metadata[record.file_id] = record
        tier.add(record)

    def move_file(self, file_id: int, dest_tier_id: int) -> None:
        """Move a file between tiers; refused without state change if it does not fit."""
        record = self.file(file_id)
        dest = self._tier(dest_tier_id)
        if record.tier_id == dest_tier_id:
            raise PreconditionError(f"File {file_id} is already in tier {dest_tier_id}")
        if dest.used + record.size > dest.spec.capacity:
            raise CapacityError(
                f"Tier {dest_tier_id} has {dest.spec.capacity - dest.used} free, "
                f"file {file_id} needs {record.size}",
                tier_id=dest_tier_id,
            )
        source = self._tiers[record.tier_id]
        if file_id not in source.members:
            raise MetadataError(
                f"File {file_id} is not indexed in its tier {record.tier_id}"
            )
        source.remove(record)
        record.tier_id = dest_tier_id
        dest.add(record)

    def set_temperature(self, file_id: int, temperature: float) -> None:
        if not 0.0 <= temperature <= 1.0:
            raise PreconditionError(f"Temperature {temperature} outside [0, 1]")
        record = self.file(file_id)
        if temperature == record.temperature:
            return
        tier = self._tiers[record.tier_id]
        tier.remove(record)
        record.temperature = temperature
        tier.add(record)

    def set_activity(self, file_id: int, activity: float) -> None:
        if not 0.0 <= activity <= 1.0:
            raise PreconditionError(f"Activity {activity} outside [0, 1]")
        self.file(file_id).activity = activity

    def touch(self, file_id: int, timestep: int) -> None:
        self.file(file_id).last_request_step = timestep

    def apply(self, decisions: Sequence[PolicyDecision]) -> None:
        """Execute moves in order; each must fit at the time it runs."""
        for decision in decisions:
            if decision.action is Action.STAY:
                continue
            record = self.file(decision.file_id)
            if record.tier_id != decision.from_tier:
                raise MetadataError(
                    f"File {decision.file_id} is in tier {record.tier_id}, "
                    f"decision expects tier {decision.from_tier}"
                )
            self.move_file(decision.file_id, decision.to_tier)

    # State vector

    def compute_tier_state(self, tier_id: int, pending_service_time: float = 0.0) -> TierState:
        tier = self._tier(tier_id)
        if pending_service_time < 0:
            raise PreconditionError("pending_service_time must be non-negative")
        return self._state(
            tier.temperature_sum,
            tier.weighted_sum,
            len(tier.members),
            tier.used,
            pending_service_time,
        )

    def hypothetical_state(
        self,
        tier_id: int,
        add: Optional[FileRecord] = None,
        remove: Optional[int] = None,
        pending_service_time: float = 0.0,
    ) -> TierState:
        """State the tier would have after adding and/or removing one file."""
        tier = self._tier(tier_id)
        temperature_sum = tier.temperature_sum
        weighted_sum = tier.weighted_sum
        count = len(tier.members)
        used = tier.used
        if remove is not None:
            if remove not in tier.members:
                raise MetadataError(f"File {remove} is not in tier {tier_id}")
            removed = self._metadata[remove]
            temperature_sum -= removed.temperature
            weighted_sum -= removed.temperature * removed.size
            count -= 1
            used -= removed.size
        if add is not None:
            if add.file_id in tier.members:
                raise PreconditionError(f"File {add.file_id} is already in tier {tier_id}")
            temperature_sum += add.temperature
            weighted_sum += add.temperature * add.size
            count += 1
            used += add.size
        if count == 0:
            temperature_sum = weighted_sum = used = 0.0
        return self._state(temperature_sum, weighted_sum, count, used, pending_service_time)

    def hypothetical_s1(
        self,
        tier_id: int,
        add: Optional[FileRecord] = None,
        remove: Optional[int] = None,
    ) -> float:
        return self.hypothetical_state(tier_id, add=add, remove=remove).s1

    def planned_state(
        self,
        tier_id: int,
        moves: Sequence[PolicyDecision],
        pending_service_time: float = 0.0,
    ) -> TierState:
        """State the tier would have once a planned move list has been carried out."""
        tier = self._tier(tier_id)
        temperature_sum = tier.temperature_sum
        weighted_sum = tier.weighted_sum
        count = len(tier.members)
        used = tier.used
        for move in moves:
            if tier_id not in (move.from_tier, move.to_tier) or move.from_tier == move.to_tier:
                continue
            record = self.file(move.file_id)
            sign = 1 if move.to_tier == tier_id else -1
            temperature_sum += sign * record.temperature
            weighted_sum += sign * record.temperature * record.size
            count += sign
            used += sign * record.size
        if count == 0:
            temperature_sum = weighted_sum = used = 0.0
        return self._state(temperature_sum, weighted_sum, count, used, pending_service_time)

    @staticmethod
    def _state(
        temperature_sum: float,
        weighted_sum: float,
        count: int,
        used: float,
        pending: float,
    ) -> TierState:
        if count == 0:
            return TierState(s1=0.0, s2=0.0, s3=pending, used=0.0, file_count=0)
        s1 = min(1.0, max(0.0, temperature_sum / count))
        s2 = max(0.0, weighted_sum / count)
        return TierState(s1=s1, s2=s2, s3=pending, used=used, file_count=count)

    # Coldness

    def coldest_file(self, tier_id: int) -> Optional[int]:
        coldness = self._tier(tier_id).coldness
        if not coldness:
            return None
        return coldness[0][2]

    def iter_coldest(self, tier_id: int) -> Iterator[FileRecord]:
        """Files of a tier from coldest to hottest (ties: larger first, then lower id)."""
        for _, _, file_id in self._tier(tier_id).coldness:
            yield self._metadata[file_id]

    def iter_hottest(self, tier_id: int) -> Iterator[FileRecord]:
        for _, _, file_id in reversed(self._tier(tier_id).coldness):
            yield self._metadata[file_id]

    def plan_move(self, file_id: int, dest_tier_id: int) -> Optional[List[PolicyDecision]]:
        """Ordered moves bringing a file one tier up or down, evicting as needed.

        Room at the destination is made by downgrading its coldest files
        that are strictly colder than the incoming file, recursively at the
        tier below. The slowest tier never evicts. Returns None when room
        cannot be made; nothing is mutated either way.
        """
        record = self.file(file_id)
        if abs(dest_tier_id - record.tier_id) != 1:
            raise PreconditionError(
                f"File {file_id} can only move one tier from {record.tier_id}"
            )
        self._tier(dest_tier_id)
        planner = _EvictionPlanner(self, exclude={file_id})
        moves = planner.make_room(dest_tier_id, record.size, record.temperature, depth=0)
        if moves is None:
            return None
        if dest_tier_id > record.tier_id:
            moves.append(PolicyDecision.upgrade(file_id, record.tier_id))
        else:
            moves.append(PolicyDecision.downgrade(file_id, record.tier_id))
        return moves

    # Consistency

    def resync(self) -> None:
        """Recompute running sums exactly from the metadata table."""
        for tier in self._tiers:
            records = [self._metadata[file_id] for _, _, file_id in tier.coldness]
            tier.used = math.fsum(record.size for record in records)
            tier.temperature_sum = math.fsum(record.temperature for record in records)
            tier.weighted_sum = math.fsum(
                record.temperature * record.size for record in records
            )

    def check_invariants(self) -> None:
        """Audit conservation, index agreement and capacity."""
        seen: Set[int] = set()
        for tier in self._tiers:
            duplicated = seen & tier.members
            if duplicated:
                raise MetadataError(f"Files {sorted(duplicated)} appear in several tiers")
            seen |= tier.members
            if len(tier.coldness) != len(tier.members):
                raise MetadataError(f"Coldness index of tier {tier.spec.tier_id} is stale")
            size_sum = 0.0
            for file_id in tier.members:
                record = self._metadata.get(file_id)
                if record is None or record.tier_id != tier.spec.tier_id:
                    raise MetadataError(
                        f"File {file_id} indexed in tier {tier.spec.tier_id} disagrees with metadata"
                    )
                size_sum += record.size
            if not math.isclose(size_sum, tier.used, rel_tol=1e-9, abs_tol=1e-6):
                raise MetadataError(
                    f"Tier {tier.spec.tier_id} used {tier.used} != size sum {size_sum}"
                )
            if tier.used > tier.spec.capacity:
                raise CapacityError(
                    f"Tier {tier.spec.tier_id} over capacity", tier_id=tier.spec.tier_id
                )
        if seen != set(self._metadata):
            raise MetadataError("Metadata table and tier occupancy disagree")

    def snapshot(self) -> List[Tuple[int, int, int, float, float]]:
        """Heatmap rows (tier_id, slot_index, file_id, temperature, size), hottest slot first."""
        rows = []
        for tier in self._tiers:
            for slot, (_, _, file_id) in enumerate(reversed(tier.coldness)):
                record = self._metadata[file_id]
                rows.append(
                    (tier.spec.tier_id, slot, file_id, record.temperature, record.size)
                )
        return rows

    def mean_file_size(self) -> float:
        if not self._metadata:
            return 0.0
        return math.fsum(record.size for record in self._metadata.values()) / len(
            self._metadata
        )


class _EvictionPlanner:
    """Plans an eviction cascade against a frozen hierarchy"""

    def __init__(self, hierarchy: Hierarchy, exclude: Set[int]):
        self.hierarchy = hierarchy
        self.delta: Dict[int, float] = defaultdict(float)
        self.moving: Set[int] = set(exclude)

    def free(self, tier_id: int) -> float:
        return self.hierarchy.free(tier_id) - self.delta[tier_id]

    def make_room(
        self, tier_id: int, size: float, incoming_temperature: float, depth: int
    ) -> Optional[List[PolicyDecision]]:
        if self.free(tier_id) >= size:
            return []
        if tier_id == self.hierarchy.slowest_tier or depth >= self.hierarchy.num_tiers:
            return None
        planned: List[PolicyDecision] = []
        for victim in self.hierarchy.iter_coldest(tier_id):
            if self.free(tier_id) >= size:
                break
            if victim.file_id in self.moving:
                continue
            if victim.temperature >= incoming_temperature:
                return None
            below = self.make_room(tier_id - 1, victim.size, victim.temperature, depth + 1)
            if below is None:
                return None
            planned.extend(below)
            planned.append(PolicyDecision.downgrade(victim.file_id, tier_id))
            self.moving.add(victim.file_id)
            self.delta[tier_id] -= victim.size
            self.delta[tier_id - 1] += victim.size
        if self.free(tier_id) >= size:
            return planned
        return None
