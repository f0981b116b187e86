"""Fuzzy rule base with two categories (Small, Large) per state dimension."""

import itertools
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import expit

from .config import DEFAULT_MEMBERSHIP_A, DEFAULT_MEMBERSHIP_B
from .exceptions import PreconditionError

NUM_DIMENSIONS = 3

# LLL, LLS, LSL, LSS, SLL, SLS, SSL, SSS
RULES: Tuple[Tuple[str, ...], ...] = tuple(itertools.product("LS", repeat=NUM_DIMENSIONS))
NUM_RULES = len(RULES)
_LARGE_MASK = np.array([[category == "L" for category in rule] for rule in RULES])


def membership_large(x, a: float, b: float):
    """S-shaped membership 1 / (1 + a * exp(-b * x)), computed without overflow."""
    return expit(b * np.asarray(x, dtype=float) - np.log(a))


def membership_small(x, a: float, b: float):
    return 1.0 - membership_large(x, a, b)


@dataclass(frozen=True)
class MembershipParams:
    """Per-dimension logistic shape (a, b) and input normalization divisor"""

    a: Tuple[float, ...] = (DEFAULT_MEMBERSHIP_A,) * NUM_DIMENSIONS
    b: Tuple[float, ...] = (DEFAULT_MEMBERSHIP_B,) * NUM_DIMENSIONS
    scale: Tuple[float, ...] = field(default=(1.0,) * NUM_DIMENSIONS)

    def __post_init__(self):
        for name in ("a", "b", "scale"):
            values = getattr(self, name)
            if len(values) != NUM_DIMENSIONS:
                raise PreconditionError(f"membership {name} needs {NUM_DIMENSIONS} values")
            if not all(np.isfinite(v) and v > 0 for v in values):
                raise PreconditionError(f"membership {name} must be positive and finite")

    def normalize(self, state: Sequence[float]) -> np.ndarray:
        return np.asarray(state, dtype=float) / np.asarray(self.scale)


def rule_weights(normalized_state: Sequence[float], membership: MembershipParams) -> np.ndarray:
    """Firing strength of each rule: the product of its per-dimension memberships."""
    x = np.asarray(normalized_state, dtype=float)
    if x.shape != (NUM_DIMENSIONS,) or not np.all(np.isfinite(x)):
        raise PreconditionError(f"expected a finite {NUM_DIMENSIONS}-vector, got {normalized_state!r}")
    large = membership_large(x, np.asarray(membership.a), np.asarray(membership.b))
    small = 1.0 - large
    return np.prod(np.where(_LARGE_MASK, large, small), axis=1)


def basis(normalized_state: Sequence[float], membership: MembershipParams) -> np.ndarray:
    """Normalized weights phi^i = w^i / sum(w)."""
    weights = rule_weights(normalized_state, membership)
    return weights / weights.sum()


def rule_names() -> List[str]:
    return ["".join(rule) for rule in RULES]
