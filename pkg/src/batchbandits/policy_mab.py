"""Batched arm elimination for stochastic multi-armed bandits.

Batch i pulls every active arm floor(q^i) times; after it, any arm whose
running mean trails the best by more than sqrt(2 ln(2KTB) / c_i) is
dropped, where c_i = sum_{j<=i} floor(q^j). The last batch spends all
remaining rounds on the empirically best active arm.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .env import StochasticMabInstance
from .exceptions import ProtocolError, ValidationError
from .regret import RegretTrace

logger = logging.getLogger(__name__)


def _int_root_floor(horizon: int, n_batches: int, i: int) -> int:
    """floor(T^(i/B)) computed exactly."""
    x = horizon ** (i / n_batches)
    m = round(x)
    if abs(x - m) > 1e-6 * max(1.0, x):
        return math.floor(x)
    # near an integer: settle it with exact integer arithmetic
    g = math.gcd(i, n_batches)
    i, n_batches = i // g, n_batches // g
    while m**n_batches > horizon**i:
        m -= 1
    while (m + 1) ** n_batches <= horizon**i:
        m += 1
    return m


def floor_power(q: float, i: int) -> int:
    """floor(q^i), snapping values within 1e-12 (relative) of an integer."""
    x = q**i
    m = round(x)
    if abs(x - m) <= 1e-12 * max(1.0, x):
        return int(m)
    return math.floor(x)


def schedule_covers(q: float, horizon: int, n_batches: int) -> bool:
    """True if sum_{i=1..B} floor(q^i) >= T."""
    total = 0
    for i in range(1, n_batches + 1):
        total += floor_power(q, i)
        if total >= horizon:
            return True
    return False


@dataclass
class MabEliminationState:
    """Mutable state of one batched-elimination run.

    ``batch_index`` counts completed exploration batches; ``cumulative``
    is c_i for the last completed one.
    """

    n_arms: int
    horizon: int
    n_batches: int
    q: float | None = None
    active: list[int] = field(default_factory=list)
    sums: np.ndarray | None = None
    counts: np.ndarray | None = None
    batch_index: int = 0
    cumulative: int = 0
    remaining: int = 0
    finished: bool = False
    last_threshold: float = math.nan

    def __post_init__(self):
        if self.n_arms < 1:
            raise ValidationError("n_arms: need at least one arm")
        if not 1 <= self.n_batches <= self.horizon:
            raise ValidationError(f"batches: need 1 <= B <= T, got B={self.n_batches}, T={self.horizon}")
        if self.q is not None:
            if not (self.q >= 1 and math.isfinite(self.q)):
                raise ValidationError(f"q: must be a finite value >= 1, got {self.q}")
            if not schedule_covers(self.q, self.horizon, self.n_batches):
                raise ValidationError(
                    f"q: sum of floor(q^i) over i=1..{self.n_batches} must reach T={self.horizon}"
                )
        if not self.active:
            self.active = list(range(self.n_arms))
        if self.sums is None:
            self.sums = np.zeros(self.n_arms)
        if self.counts is None:
            self.counts = np.zeros(self.n_arms, dtype=np.int64)
        if not self.remaining:
            self.remaining = self.horizon

    @property
    def q_value(self) -> float:
        return self.horizon ** (1.0 / self.n_batches) if self.q is None else self.q

    def pulls_in_batch(self, i: int) -> int:
        """floor(q^i)."""
        if self.q is None:
            return _int_root_floor(self.horizon, self.n_batches, i)
        return floor_power(self.q, i)

    def estimates(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            est = np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), 0.0)
        return est

    def threshold(self, c: int) -> float:
        return math.sqrt(2.0 * math.log(2 * self.n_arms * self.horizon * self.n_batches) / c)


@dataclass
class BatchPlan:
    """Pulls for the next batch; ``last`` marks the exploitation batch."""

    pulls: list[tuple[int, int]]
    last: bool = False

    @property
    def size(self) -> int:
        return sum(n for _, n in self.pulls)

    def as_sequence(self) -> np.ndarray:
        if not self.pulls:
            return np.zeros(0, dtype=int)
        arms, reps = zip(*self.pulls)
        return np.repeat(np.asarray(arms, dtype=int), reps)


def _best_active(state: MabEliminationState) -> int:
    est = state.estimates()
    active = np.asarray(state.active)
    # active is sorted, so argmax's first-hit rule is lowest-index tie-break
    return int(active[np.argmax(est[active])])


def plan_mab_batch(state: MabEliminationState) -> BatchPlan:
    if state.finished or state.remaining == 0:
        state.finished = True
        return BatchPlan([], last=True)
    i = state.batch_index + 1
    if i <= state.n_batches - 1:
        reps = state.pulls_in_batch(i)
        if reps * len(state.active) <= state.remaining:
            return BatchPlan([(a, reps) for a in state.active])
    return BatchPlan([(_best_active(state), state.remaining)], last=True)


def _absorb(state: MabEliminationState, arm_sums: dict[int, tuple[float, int]], last: bool) -> list[int]:
    played = 0
    for arm, (s, n) in arm_sums.items():
        if arm not in state.active:
            raise ProtocolError(f"observation for inactive arm {arm}")
        state.sums[arm] += s
        state.counts[arm] += n
        played += n
    if played > state.remaining:
        raise ProtocolError(f"batch of {played} pulls exceeds the {state.remaining} remaining rounds")
    state.remaining -= played
    if last:
        state.finished = True
        return []

    state.batch_index += 1
    state.cumulative += state.pulls_in_batch(state.batch_index)
    thr = state.threshold(state.cumulative)
    state.last_threshold = thr
    est = state.estimates()
    best = max(est[a] for a in state.active)
    eliminated = [a for a in state.active if est[a] < best - thr]
    state.active = [a for a in state.active if a not in eliminated]
    logger.debug(
        "batch %d: size=%d c=%d threshold=%.4f active=%s eliminated=%s",
        state.batch_index, played, state.cumulative, thr, state.active, eliminated,
    )
    if state.remaining == 0:
        state.finished = True
    return eliminated


def update_mab(state: MabEliminationState, observations, last: bool = False) -> list[int]:
    """Fold a completed exploration batch into ``state`` and eliminate.

    ``observations`` is an iterable of ``(arm, reward)``. Returns the arms
    removed from the active set. Pass ``last=True`` for the exploitation
    batch, which only consumes rounds.
    """
    totals: dict[int, list] = {}
    for arm, reward in observations:
        entry = totals.setdefault(int(arm), [0.0, 0])
        entry[0] += float(reward)
        entry[1] += 1
    return _absorb(state, {a: (s, n) for a, (s, n) in totals.items()}, last)


@dataclass
class MabRunResult:
    trace: RegretTrace
    n_batches: int
    pull_counts: np.ndarray
    final_active: list[int]
    actions: np.ndarray = field(repr=False, default=None)


def run_batched_mab(
    instance: StochasticMabInstance,
    horizon: int,
    n_batches: int,
    rng: np.random.Generator,
    q: float | None = None,
) -> MabRunResult:
    """Play T rounds of batched arm elimination against ``instance``."""
    state = MabEliminationState(instance.n_arms, horizon, n_batches, q=q)
    batches = []
    used = 0
    while not state.finished:
        plan = plan_mab_batch(state)
        if plan.size == 0:
            break
        totals = {}
        for arm, reps in plan.pulls:
            totals[arm] = (float(instance.sample(arm, reps, rng).sum()), reps)
        batches.append(plan.as_sequence())
        used += 1
        _absorb(state, totals, plan.last)

    actions = np.concatenate(batches) if batches else np.zeros(0, dtype=int)
    regret = np.cumsum((instance.best_mean - instance.means)[actions])
    return MabRunResult(
        trace=RegretTrace(regret, kind="pseudo"),
        n_batches=used,
        pull_counts=np.bincount(actions, minlength=instance.n_arms),
        final_active=list(state.active),
        actions=actions,
    )


def ucb_baseline(instance: StochasticMabInstance, horizon: int, rng: np.random.Generator) -> RegretTrace:
    """Sequential UCB1 with index mean + sqrt(2 ln t / n)."""
    k = instance.n_arms
    # reward of the j-th pull of each arm, drawn up front
    draws = np.stack([instance.sample(a, horizon, rng) for a in range(k)])
    sums = [0.0] * k
    counts = [0] * k
    actions = np.empty(horizon, dtype=int)
    for t in range(horizon):
        if t < k:
            arm = t
        else:
            log_t = 2.0 * math.log(t + 1)
            arm = max(range(k), key=lambda a: sums[a] / counts[a] + math.sqrt(log_t / counts[a]))
        sums[arm] += draws[arm, counts[arm]]
        counts[arm] += 1
        actions[t] = arm
    gap = instance.best_mean - instance.means
    return RegretTrace(np.cumsum(gap[actions]), kind="pseudo")
