from typing import Optional


class SimulationError(Exception):
    """Base class for simulator errors"""

    pass


class ConfigError(SimulationError):
    """Invalid or inconsistent scenario configuration"""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class CapacityError(SimulationError):
    """A tier cannot hold the requested placement"""

    def __init__(self, message: str, tier_id: Optional[int] = None):
        self.tier_id = tier_id
        super().__init__(message)


class MetadataError(SimulationError):
    """File metadata and tier occupancy disagree, or a file is unknown"""

    pass


class PreconditionError(SimulationError):
    """An operation was called outside its contract"""

    pass


class LearningError(SimulationError):
    """Non-finite or invalid input to an agent update"""

    pass


class MetricsError(SimulationError):
    """Run artifacts are missing or empty"""

    pass
