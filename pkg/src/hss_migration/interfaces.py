from abc import ABC, abstractmethod
from typing import List, Optional, Sequence

import numpy as np

from .models import PolicyDecision, RequestTrace, ServiceResult


class IRequestGenerator(ABC):
    @abstractmethod
    def generate(self, hierarchy, timestep: int, rng: np.random.Generator) -> RequestTrace:
        """Produces the request trace of one timestep"""
        pass


class ICostFunction(ABC):
    @abstractmethod
    def value(self, state: Sequence[float]) -> float:
        """Estimated cost of a raw (s1, s2, s3) state"""
        pass

    @abstractmethod
    def update(
        self,
        reward: float,
        state: Sequence[float],
        next_state: Sequence[float],
        tau: float,
    ) -> float:
        """Applies one learning step and returns the temporal-difference error"""
        pass


class IMigrationPolicy(ABC):
    name: str = "policy"
    size_sensitive: bool = False

    def start(self, hierarchy) -> None:
        """Observes the hierarchy right after initial placement"""
        pass

    def begin_timestep(self, hierarchy, pending: Sequence[float]) -> None:
        """Observes the per-tier enqueued service time before any decision"""
        pass

    @abstractmethod
    def decide(self, file_id: int, hierarchy) -> List[PolicyDecision]:
        """Decisions for a request to a file outside the fastest tier"""
        pass

    def admit(self, file_id: int, hierarchy) -> bool:
        """Whether a file may move up into free space in the next faster tier"""
        return False

    def end_timestep(
        self, hierarchy, service: ServiceResult, timestep: int
    ) -> Optional[List[dict]]:
        """Learns from the finished timestep; returns per-tier learning records if any"""
        return None
