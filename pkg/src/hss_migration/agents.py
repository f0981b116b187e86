import logging
import math
from typing import Optional, Sequence

import numpy as np

from .config import RLHyperparams
from .exceptions import LearningError, PreconditionError
from .fuzzy import NUM_RULES, MembershipParams, basis
from .interfaces import ICostFunction
from .models import CostSignalInputs

logger = logging.getLogger(__name__)


class FrbAgent(ICostFunction):
    """Per-tier cost function C(s) = sum_i p^i phi^i(s), learned online by TD(lambda).

    The state passed in is the raw (s1, s2, s3) tier state; it is divided by
    the membership scales before the rule weights are evaluated.
    """

    def __init__(
        self,
        tier_id: int = 0,
        membership: Optional[MembershipParams] = None,
        lambda_: float = 0.6,
        beta: float = 0.1,
        alpha: float = 0.1,
        initial_p: float = 0.0,
    ):
        if not 0.0 <= lambda_ <= 1.0:
            raise PreconditionError(f"lambda must be in [0, 1], got {lambda_}")
        if not (beta > 0 and alpha > 0 and math.isfinite(beta) and math.isfinite(alpha)):
            raise PreconditionError("beta and alpha must be positive and finite")
        if not math.isfinite(initial_p):
            raise PreconditionError("initial_p must be finite")
        self.tier_id = tier_id
        self.membership = membership or MembershipParams()
        self.lambda_ = lambda_
        self.beta = beta
        self.alpha = alpha
        self.p = np.full(NUM_RULES, float(initial_p))
        self.z = np.zeros(NUM_RULES)
        self.last_state: Optional[np.ndarray] = None
        self.last_cost: Optional[float] = None
        self.last_td_error = 0.0
        self.updates = 0

    @classmethod
    def from_config(
        cls, tier_id: int, rl: RLHyperparams, scales: Sequence[float]
    ) -> "FrbAgent":
        membership = MembershipParams(
            a=tuple(rl.membership_a), b=tuple(rl.membership_b), scale=tuple(scales)
        )
        return cls(
            tier_id=tier_id,
            membership=membership,
            lambda_=rl.lambda_,
            beta=rl.beta,
            alpha=rl.alpha,
            initial_p=rl.initial_p,
        )

    def features(self, state: Sequence[float]) -> np.ndarray:
        return basis(self.membership.normalize(state), self.membership)

    def value(self, state: Sequence[float]) -> float:
        return float(self.p @ self.features(state))

    def observe(self, state: Sequence[float]) -> None:
        """Cache the state the agent is entering."""
        self.last_state = np.asarray(state, dtype=float)
        self.last_cost = self.value(self.last_state)

    def update(
        self,
        reward: float,
        state: Sequence[float],
        next_state: Sequence[float],
        tau: float,
    ) -> float:
        current = np.asarray(state, dtype=float)
        following = np.asarray(next_state, dtype=float)
        if not (
            math.isfinite(reward)
            and math.isfinite(tau)
            and np.all(np.isfinite(current))
            and np.all(np.isfinite(following))
        ):
            raise LearningError(f"Agent {self.tier_id}: non-finite TD input")
        if tau <= 0:
            raise LearningError(f"Agent {self.tier_id}: sojourn time must be positive, got {tau}")

        discount = math.exp(-self.beta * tau)
        phi = self.features(current)
        traces = self.lambda_ * discount * self.z + phi
        td_error = reward + discount * float(self.p @ self.features(following)) - float(
            self.p @ phi
        )
        parameters = self.p + self.alpha * td_error * traces
        if not np.all(np.isfinite(parameters)):
            raise LearningError(f"Agent {self.tier_id}: update diverged")

        self.z = traces
        self.p = parameters
        self.last_td_error = td_error
        self.updates += 1
        self.observe(following)
        return td_error


def cost_value(agent: FrbAgent, state: Sequence[float]) -> float:
    return agent.value(state)


def td_update(
    agent: FrbAgent,
    reward: float,
    state: Sequence[float],
    next_state: Sequence[float],
    tau: float,
) -> float:
    return agent.update(reward, state, next_state, tau)


def compute_cost_signal(inputs: CostSignalInputs, beta: float) -> float:
    """Discounted mean response time of the requests seen in one state; 0 without requests."""
    if inputs.count == 0:
        return 0.0
    if len(inputs.arrival_times) != inputs.count:
        raise PreconditionError("Every response needs an arrival time")
    responses = np.asarray(inputs.responses, dtype=float)
    elapsed = np.asarray(inputs.arrival_times, dtype=float) - inputs.entry_time
    if np.any(elapsed < 0):
        raise PreconditionError("A request arrived before its state was entered")
    return float(np.mean(responses * np.exp(-beta * elapsed)))
