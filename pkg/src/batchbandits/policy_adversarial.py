"""Non-adaptive batched play against adversarial reward tables.

The horizon is cut into B near-equal batches fixed in advance. Inside a
batch the player draws i.i.d. from a frozen EXP3 distribution; the batch's
rewards arrive only at its end, which is EXP3 with feedback delayed by at
most ceil(T/B) rounds.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .env import AdversarialRewardTable, BatchSchedule
from .exceptions import ProtocolError, ValidationError
from .regret import RegretTrace, compute_adversarial_regret

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-12


def make_uniform_schedule(horizon: int, n_batches: int) -> BatchSchedule:
    """B sizes differing by at most one, larger ones first."""
    if not 1 <= n_batches <= horizon:
        raise ValidationError(f"batches: need 1 <= B <= T, got B={n_batches}, T={horizon}")
    base, extra = divmod(horizon, n_batches)
    return BatchSchedule(tuple([base + 1] * extra + [base] * (n_batches - extra)))


def default_learning_rate(n_arms: int, horizon: int, n_batches: int) -> float:
    """sqrt(ln K / (T (K + D))) with delay D = ceil(T/B)."""
    delay = math.ceil(horizon / n_batches)
    return math.sqrt(math.log(max(n_arms, 2)) / (horizon * (n_arms + delay)))


@dataclass
class Exp3DelayedState:
    log_weights: np.ndarray
    eta: float
    schedule: BatchSchedule
    pending: list = field(default_factory=list)

    @classmethod
    def initial(cls, n_arms: int, schedule: BatchSchedule, eta: float | None = None) -> "Exp3DelayedState":
        if eta is None:
            eta = default_learning_rate(n_arms, schedule.horizon, schedule.n_batches)
        if not eta > 0:
            raise ValidationError(f"eta: learning rate must be positive, got {eta}")
        return cls(np.zeros(n_arms), float(eta), schedule)

    @property
    def n_arms(self) -> int:
        return self.log_weights.size

    def probabilities(self) -> np.ndarray:
        z = self.log_weights - self.log_weights.max()
        p = np.exp(z)
        return p / p.sum()


def exp3_sample(state: Exp3DelayedState, rng: np.random.Generator) -> tuple[int, float]:
    p = state.probabilities()
    arm = int(rng.choice(state.n_arms, p=p))
    return arm, float(p[arm])


def exp3_delayed_update(state: Exp3DelayedState, batch_observations) -> Exp3DelayedState:
    """Apply a finished batch's importance-weighted rewards.

    ``batch_observations`` holds ``(round, arm, reward, prob)`` tuples with
    the probability recorded when the arm was drawn.
    """
    obs = sorted(batch_observations, key=lambda o: o[0])
    for _, arm, reward, prob in obs:
        if not prob > 0:
            raise ProtocolError(f"observation with non-positive probability {prob}")
        state.log_weights[int(arm)] += state.eta * float(reward) / max(float(prob), PROB_FLOOR)
    state.pending.clear()
    return state


@dataclass
class AdversarialRunResult:
    actions: np.ndarray
    trace: RegretTrace
    schedule: BatchSchedule
    batch_probabilities: list[np.ndarray] = field(repr=False, default_factory=list)

    @property
    def n_batches(self) -> int:
        return self.schedule.n_batches


def run_batched_adversarial(
    table: AdversarialRewardTable,
    horizon: int,
    n_batches: int,
    rng: np.random.Generator,
    eta: float | None = None,
) -> AdversarialRunResult:
    if horizon != table.horizon:
        raise ValidationError(f"horizon: table has {table.horizon} rounds, expected {horizon}")
    schedule = make_uniform_schedule(horizon, n_batches)
    state = Exp3DelayedState.initial(table.n_arms, schedule, eta)
    actions = np.empty(horizon, dtype=int)
    frozen = []
    for b, (start, stop) in enumerate(schedule.bounds()):
        p = state.probabilities()
        frozen.append(p)
        arms = rng.choice(table.n_arms, size=stop - start, p=p)
        actions[start:stop] = arms
        rewards = table.rewards[arms, np.arange(start, stop)]
        # same effect as exp3_delayed_update: the distribution is frozen in-batch
        probs = np.maximum(p[arms], PROB_FLOOR)
        np.add.at(state.log_weights, arms, state.eta * rewards / probs)
        logger.debug("batch %d: rounds %d-%d distribution=%s", b + 1, start + 1, stop, np.round(p, 4).tolist())
    return AdversarialRunResult(actions, compute_adversarial_regret(actions, table), schedule, frozen)
