"""Regret traces and the closed-form regret bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import AdversarialRewardTable, LinearBanditInstance, StochasticMabInstance, gaps
from .exceptions import ValidationError


@dataclass
class RegretTrace:
    """Cumulative regret after each round.

    ``kind`` is ``"pseudo"`` (stochastic, computed from true means) or
    ``"adversarial"``. For adversarial traces ``cumulative`` compares to
    the running best arm, ``hindsight`` to the single arm that is best
    over the full horizon; both end at the reported regret.
    """

    cumulative: np.ndarray
    kind: str = "pseudo"
    hindsight: np.ndarray | None = None

    @property
    def final(self) -> float:
        return float(self.cumulative[-1]) if self.cumulative.size else 0.0

    def __len__(self) -> int:
        return self.cumulative.size


def _instantaneous_mab(actions, instance: StochasticMabInstance) -> np.ndarray:
    actions = np.asarray(actions, dtype=int)
    if actions.size and (actions.min() < 0 or actions.max() >= instance.n_arms):
        raise IndexError(f"action index out of range for {instance.n_arms} arms")
    return gaps(instance)[actions]


def _instantaneous_linear(actions, instance: LinearBanditInstance) -> np.ndarray:
    expected = instance.expected_rewards()
    best = expected.max()
    actions = np.asarray(actions)
    if actions.ndim == 2:
        return best - actions @ instance.theta_star
    actions = actions.astype(int)
    if actions.size and (actions.min() < 0 or actions.max() >= instance.n_actions):
        raise IndexError(f"action index out of range for {instance.n_actions} actions")
    return best - expected[actions]


def compute_pseudo_regret(actions, instance) -> RegretTrace:
    """Cumulative pseudo-regret of a played action sequence.

    For a linear instance, ``actions`` may be indices into
    ``instance.actions`` or a (T, d) array of action vectors.
    """
    if isinstance(instance, StochasticMabInstance):
        inst = _instantaneous_mab(actions, instance)
    elif isinstance(instance, LinearBanditInstance):
        inst = _instantaneous_linear(actions, instance)
    else:
        raise TypeError(f"unsupported instance type {type(instance).__name__}")
    return RegretTrace(np.cumsum(inst), kind="pseudo")


def compute_adversarial_regret(actions, table: AdversarialRewardTable) -> RegretTrace:
    actions = np.asarray(actions, dtype=int)
    if actions.size != table.horizon:
        raise ValidationError(f"actions: expected {table.horizon} rounds, got {actions.size}")
    if actions.size and (actions.min() < 0 or actions.max() >= table.n_arms):
        raise IndexError(f"action index out of range for {table.n_arms} arms")
    arm_totals = np.cumsum(table.rewards, axis=1)
    player = np.cumsum(table.rewards[actions, np.arange(table.horizon)])
    running = arm_totals.max(axis=0) - player
    best = int(np.argmax(arm_totals[:, -1]))
    return RegretTrace(running, kind="adversarial", hindsight=arm_totals[best] - player)


def theoretical_bound_mab(instance: StochasticMabInstance, horizon: int, n_batches: int, q: float | None = None) -> float:
    """9 q ln(2KTB) sum_{gap>0} 1/gap, with q = T^(1/B) by default."""
    g = gaps(instance)
    positive = g[g > 0]
    if positive.size == 0:
        return 0.0
    if q is None:
        q = horizon ** (1.0 / n_batches)
    k = instance.n_arms
    return 9.0 * q * math.log(2 * k * horizon * n_batches) * float(np.sum(1.0 / positive))


def batch_random_expected_regret(sizes) -> float:
    """E|t_1 R_1 + ... + t_B R_B| / 2 for independent Rademacher R_i.

    Exact enumeration of the 2^B sign patterns (exact for B <= 20, which
    is the practical limit).
    """
    sizes = np.asarray(sizes, dtype=float)
    b = sizes.size
    if b > 20:
        raise ValidationError("exact enumeration is limited to B <= 20")
    patterns = ((np.arange(2**b)[:, None] >> np.arange(b)) & 1) * 2 - 1
    return float(np.abs(patterns @ sizes).mean() / 2.0)
