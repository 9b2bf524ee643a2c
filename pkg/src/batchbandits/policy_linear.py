"""Batched elimination for stochastic linear bandits.

Each exploration batch plays the rounded approximate G-optimal design of
the surviving actions, sized so that every survivor's predicted reward is
eps_i-accurate with probability 1 - 1/(K T^2), where
eps_i = sqrt(d ln(K T^2) / q^i) and q = (T / c)^(1/B). The batch's own
least-squares estimate then removes every action trailing the best by more
than 2 eps_i.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import design as dsg
from .env import LinearBanditInstance
from .exceptions import ValidationError
from .regret import RegretTrace

logger = logging.getLogger(__name__)


@dataclass
class LinearEliminationState:
    """State of one run; ``theta_hat`` lives in the ambient coordinates."""

    actions: np.ndarray
    horizon: int
    n_batches: int
    dim: int = 0
    active: np.ndarray | None = None
    theta_hat: np.ndarray | None = None
    batch_index: int = 0
    remaining: int = 0
    finished: bool = False
    design_tol: float = 0.01
    c: float = dsg.DESIGN_C_LOW

    def __post_init__(self):
        self.actions = np.asarray(self.actions, dtype=float)
        if not 1 <= self.n_batches <= self.horizon:
            raise ValidationError(f"batches: need 1 <= B <= T, got B={self.n_batches}, T={self.horizon}")
        if not self.dim:
            self.dim = dsg.project_to_span(self.actions)[2]
        if self.active is None:
            self.active = np.arange(self.actions.shape[0])
        if self.theta_hat is None:
            self.theta_hat = np.zeros(self.actions.shape[1])
        if not self.remaining:
            self.remaining = self.horizon

    @property
    def n_actions(self) -> int:
        return self.actions.shape[0]

    @property
    def q(self) -> float:
        return (self.horizon / self.c) ** (1.0 / self.n_batches)

    @property
    def delta(self) -> float:
        return 1.0 / (self.n_actions * self.horizon**2)

    def eps(self, i: int) -> float:
        return math.sqrt(self.dim * math.log(self.n_actions * self.horizon**2) / self.q**i)


@dataclass
class LinearBatchPlan:
    """Action indices to play next, in play order."""

    indices: np.ndarray
    last: bool = False
    eps: float = math.nan
    g_value: float = math.nan
    budget: int = 0

    @property
    def size(self) -> int:
        return int(self.indices.size)


def _exploit(state: LinearEliminationState) -> LinearBatchPlan:
    scores = state.actions[state.active] @ state.theta_hat
    best = int(state.active[np.argmax(scores)])
    return LinearBatchPlan(np.full(state.remaining, best, dtype=int), last=True)


def plan_linear_batch(state: LinearEliminationState) -> LinearBatchPlan:
    if state.finished or state.remaining == 0:
        state.finished = True
        return LinearBatchPlan(np.zeros(0, dtype=int), last=True)
    i = state.batch_index + 1
    if i > state.n_batches - 1 or state.active.size == 1:
        return _exploit(state)
    _, projected, _ = dsg.project_to_span(state.actions[state.active])
    design = dsg.frank_wolfe_goptimal(projected, tol=state.design_tol)
    eps = state.eps(i)
    pulls = dsg.round_design(design, eps, state.delta)
    if pulls.total > state.remaining:
        return _exploit(state)
    return LinearBatchPlan(
        state.active[pulls.as_sequence()], eps=eps, g_value=design.g_value, budget=pulls.budget
    )


def eliminate_linear(active_actions, theta_hat, eps: float) -> np.ndarray:
    """Positions (into ``active_actions``) that survive the 2 eps filter."""
    scores = np.asarray(active_actions, dtype=float) @ np.asarray(theta_hat, dtype=float)
    return np.flatnonzero(~(scores < scores.max() - 2.0 * eps))


@dataclass
class BatchRecord:
    index: int
    size: int
    eps: float
    g_value: float
    active_before: np.ndarray
    theta_hat: np.ndarray
    survivors: np.ndarray


def update_linear(state: LinearEliminationState, plan: LinearBatchPlan, rewards) -> BatchRecord | None:
    """Estimate theta from this batch alone, then filter the active set."""
    if plan.size > state.remaining:
        raise ValidationError("plan exceeds the remaining rounds")
    state.remaining -= plan.size
    if plan.last:
        state.finished = True
        return None
    state.batch_index += 1
    pulled = state.actions[plan.indices]
    basis, coords, _ = dsg.project_to_span(pulled)
    est = dsg.least_squares(coords, rewards)
    state.theta_hat = basis @ est.theta_hat
    before = state.active.copy()
    keep = eliminate_linear(state.actions[before], state.theta_hat, plan.eps)
    state.active = before[keep]
    logger.debug(
        "batch %d: n=%d g=%.4f eps=%.4f survivors=%s",
        state.batch_index, plan.size, plan.g_value, plan.eps, state.active.tolist(),
    )
    if state.remaining == 0:
        state.finished = True
    return BatchRecord(state.batch_index, plan.size, plan.eps, plan.g_value, before, state.theta_hat.copy(), state.active.copy())


@dataclass
class LinearRunResult:
    trace: RegretTrace
    n_batches: int
    actions: np.ndarray = field(repr=False)
    history: list[BatchRecord] = field(default_factory=list, repr=False)


def run_batched_linear(
    instance: LinearBanditInstance,
    horizon: int,
    n_batches: int,
    rng: np.random.Generator,
    design_tol: float = 0.01,
) -> LinearRunResult:
    state = LinearEliminationState(instance.actions, horizon, n_batches, design_tol=design_tol)
    played, history = [], []
    while not state.finished:
        plan = plan_linear_batch(state)
        if plan.size == 0:
            break
        rewards = instance.pull(plan.indices, rng)
        played.append(plan.indices)
        record = update_linear(state, plan, rewards)
        if record is not None:
            history.append(record)
    actions = np.concatenate(played) if played else np.zeros(0, dtype=int)
    expected = instance.expected_rewards()
    regret = np.cumsum(expected.max() - expected[actions])
    return LinearRunResult(RegretTrace(regret, kind="pseudo"), len(played), actions, history)


@dataclass
class InfiniteRunResult:
    trace: RegretTrace
    net_size: int
    net: np.ndarray = field(repr=False)
    inner: LinearRunResult = field(repr=False)


def run_infinite_linear(
    candidates,
    theta_star,
    horizon: int,
    n_batches: int,
    rng: np.random.Generator,
    noise: str = "gaussian",
    sigma: float = 1.0,
) -> InfiniteRunResult:
    """Run the finite-arm algorithm on a 1/T-net of a dense candidate set.

    ``candidates`` stands in for the (possibly infinite) action set, e.g. a
    fine mesh or a large sample of it. Regret is measured against the best
    candidate, not just the best net point.
    """
    candidates = np.asarray(candidates, dtype=float)
    if candidates.ndim != 2 or candidates.shape[0] == 0:
        raise ValidationError("candidates: expected a non-empty (N, d) array")
    net = dsg.epsilon_net(candidates, 1.0 / horizon)
    instance = LinearBanditInstance(theta_star, candidates[net], noise=noise, sigma=sigma)
    inner = run_batched_linear(instance, horizon, n_batches, rng)
    best = float((candidates @ instance.theta_star).max())
    played = instance.expected_rewards()[inner.actions]
    trace = RegretTrace(np.cumsum(best - played), kind="pseudo")
    return InfiniteRunResult(trace, int(net.size), net, inner)
