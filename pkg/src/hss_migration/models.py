from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

from .exceptions import PreconditionError


@dataclass
class FileRecord:
    """Represents a stored object and its placement metadata"""

    file_id: int
    size: float
    temperature: float
    tier_id: int
    last_request_step: Optional[int] = None
    created_step: int = 0
    # None while the request process follows temperature itself
    activity: Optional[float] = None

    def __post_init__(self):
        if not self.size > 0:
            raise PreconditionError(f"File {self.file_id} must have a positive size")
        if not 0.0 <= self.temperature <= 1.0:
            raise PreconditionError(
                f"File {self.file_id} temperature {self.temperature} outside [0, 1]"
            )

    @property
    def request_temperature(self) -> float:
        """Hotness the request process follows; never below temperature"""
        return self.temperature if self.activity is None else self.activity

    @property
    def idle_since(self) -> int:
        """Timestep from which idleness is measured"""
        if self.last_request_step is None:
            return self.created_step
        return self.last_request_step


@dataclass(frozen=True)
class TierSpec:
    """Represents one storage level; a higher tier_id is faster and smaller"""

    tier_id: int
    capacity: float
    speed: float


@dataclass(frozen=True)
class TierState:
    """Represents the observed state vector of a tier"""

    s1: float
    s2: float
    s3: float
    used: float
    file_count: int

    def as_vector(self) -> Tuple[float, float, float]:
        return (self.s1, self.s2, self.s3)


class Action(str, Enum):
    UPGRADE = "upgrade"
    DOWNGRADE = "downgrade"
    STAY = "stay"


@dataclass(frozen=True)
class PolicyDecision:
    """Represents one file movement (or the decision not to move)"""

    file_id: int
    action: Action
    from_tier: int
    to_tier: int

    def __post_init__(self):
        if self.action is Action.UPGRADE and self.to_tier != self.from_tier + 1:
            raise PreconditionError("An upgrade must target the next faster tier")
        if self.action is Action.DOWNGRADE and self.to_tier != self.from_tier - 1:
            raise PreconditionError("A downgrade must target the next slower tier")
        if self.action is Action.STAY and self.to_tier != self.from_tier:
            raise PreconditionError("A stay decision cannot change tier")

    @classmethod
    def upgrade(cls, file_id: int, from_tier: int) -> "PolicyDecision":
        return cls(file_id, Action.UPGRADE, from_tier, from_tier + 1)

    @classmethod
    def downgrade(cls, file_id: int, from_tier: int) -> "PolicyDecision":
        return cls(file_id, Action.DOWNGRADE, from_tier, from_tier - 1)


@dataclass(frozen=True)
class RequestEntry:
    """Requests for one file within a timestep, as sorted arrival offsets in [0, 1)"""

    file_id: int
    offsets: Tuple[float, ...]

    @property
    def count(self) -> int:
        return len(self.offsets)


@dataclass
class RequestTrace:
    """Represents the file-access requests of one timestep"""

    timestep: int
    entries: List[RequestEntry] = field(default_factory=list)

    @property
    def total_requests(self) -> int:
        return sum(entry.count for entry in self.entries)

    def arrivals(self) -> List[Tuple[float, int]]:
        """All requests as (offset, file_id), in arrival order."""
        return sorted(
            (offset, entry.file_id) for entry in self.entries for offset in entry.offsets
        )


@dataclass(frozen=True)
class ServedRequest:
    file_id: int
    tier_id: int
    offset: float
    response: float


@dataclass
class ServiceResult:
    """Per-request response times and per-tier enqueued service time"""

    requests: List[ServedRequest]
    pending: List[float]

    def for_tier(self, tier_id: int) -> List[ServedRequest]:
        return [request for request in self.requests if request.tier_id == tier_id]


@dataclass(frozen=True)
class CostSignalInputs:
    """Observations gathered while a tier sat in one state"""

    responses: Tuple[float, ...]
    arrival_times: Tuple[float, ...]
    entry_time: float
    tau: float = 1.0

    @property
    def count(self) -> int:
        return len(self.responses)
