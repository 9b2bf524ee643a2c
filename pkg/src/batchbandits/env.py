"""Reward-generating environments.

Stochastic multi-armed instances, stochastic linear instances, and fully
specified adversarial reward tables, including the two hard two-armed
adversaries used for the batched lower bounds.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize, stats

from .exceptions import UnsupportedInstanceError, ValidationError

_NORM_SLACK = 1e-9

REWARD_KINDS = ("bernoulli", "truncated_gaussian")
NOISE_KINDS = ("gaussian", "uniform", "none")


def _truncnorm_loc(mean: float, sigma: float) -> float:
    """Location of a N(loc, sigma^2) truncated to [0, 1] whose mean is ``mean``."""

    def excess(loc):
        a, b = (0.0 - loc) / sigma, (1.0 - loc) / sigma
        return stats.truncnorm.mean(a, b, loc=loc, scale=sigma) - mean

    lo, hi = -30.0 * sigma, 1.0 + 30.0 * sigma
    if excess(lo) > 0 or excess(hi) < 0:
        raise ValidationError(
            f"mean {mean} is not reachable by a [0,1]-truncated Gaussian with sigma={sigma}"
        )
    return optimize.brentq(excess, lo, hi, xtol=1e-13)


@dataclass(frozen=True)
class StochasticMabInstance:
    """True arm means of a stochastic K-armed bandit.

    ``reward_kind`` is ``"bernoulli"`` (default) or ``"truncated_gaussian"``;
    the latter needs ``sigma`` and is shifted so its mean after truncation
    to [0, 1] equals the declared mean.
    """

    means: np.ndarray
    reward_kind: str = "bernoulli"
    sigma: float | None = None
    _locs: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float).ravel()
        if means.size < 1:
            raise ValidationError("means: need at least one arm")
        if not np.all(np.isfinite(means)) or np.any(means < 0) or np.any(means > 1):
            raise ValidationError(f"means: every mean must lie in [0, 1], got {means.tolist()}")
        if self.reward_kind not in REWARD_KINDS:
            raise ValidationError(f"reward_kind: expected one of {REWARD_KINDS}, got {self.reward_kind!r}")
        means.setflags(write=False)
        object.__setattr__(self, "means", means)
        if self.reward_kind == "truncated_gaussian":
            if self.sigma is None or not self.sigma > 0:
                raise ValidationError("sigma: truncated Gaussian rewards need sigma > 0")
            locs = np.array(
                [m if m in (0.0, 1.0) else _truncnorm_loc(m, self.sigma) for m in means]
            )
            object.__setattr__(self, "_locs", locs)

    @property
    def n_arms(self) -> int:
        return self.means.size

    @property
    def best_mean(self) -> float:
        return float(self.means.max())

    def sample(self, arm: int, size: int, rng: np.random.Generator) -> np.ndarray:
        """``size`` independent rewards of ``arm``."""
        if not 0 <= arm < self.n_arms:
            raise IndexError(f"arm {arm} out of range for {self.n_arms} arms")
        mu = self.means[arm]
        if self.reward_kind == "bernoulli" or mu in (0.0, 1.0):
            return (rng.random(size) < mu).astype(float)
        loc = self._locs[arm]
        a, b = (0.0 - loc) / self.sigma, (1.0 - loc) / self.sigma
        return stats.truncnorm.rvs(a, b, loc=loc, scale=self.sigma, size=size, random_state=rng)


def sample_stochastic_reward(instance: StochasticMabInstance, arm: int, rng: np.random.Generator) -> float:
    """One reward draw from ``arm``; always in [0, 1]."""
    return float(instance.sample(arm, 1, rng)[0])


def gaps(instance: StochasticMabInstance) -> np.ndarray:
    """Gap of each arm to the best mean."""
    return instance.best_mean - instance.means


@dataclass(frozen=True)
class LinearBanditInstance:
    """Hidden parameter and finite action set of a stochastic linear bandit.

    Rewards are ``<a, theta_star> + noise`` with noise ``"gaussian"``
    (N(0, sigma^2), sigma <= 1), ``"uniform"`` (U[-1, 1]) or ``"none"``.
    """

    theta_star: np.ndarray
    actions: np.ndarray
    noise: str = "gaussian"
    sigma: float = 1.0

    def __post_init__(self):
        theta = np.asarray(self.theta_star, dtype=float).ravel()
        actions = np.asarray(self.actions, dtype=float)
        if actions.ndim == 1:
            actions = actions.reshape(-1, theta.size)
        if theta.size < 1:
            raise ValidationError("theta_star: dimension must be at least 1")
        if actions.ndim != 2 or actions.shape[0] < 1 or actions.shape[1] != theta.size:
            raise ValidationError(
                f"actions: expected a (K, {theta.size}) array with K >= 1, got shape {actions.shape}"
            )
        if np.linalg.norm(theta) > 1 + _NORM_SLACK:
            raise ValidationError(f"theta_star: Euclidean norm {np.linalg.norm(theta):.6g} exceeds 1")
        norms = np.linalg.norm(actions, axis=1)
        if np.any(norms > 1 + _NORM_SLACK):
            bad = int(np.argmax(norms))
            raise ValidationError(f"actions: action {bad} has norm {norms[bad]:.6g} > 1")
        if self.noise not in NOISE_KINDS:
            raise ValidationError(f"noise: expected one of {NOISE_KINDS}, got {self.noise!r}")
        if self.noise == "gaussian" and not 0 < self.sigma <= 1:
            raise ValidationError("sigma: Gaussian noise must have 0 < sigma <= 1 to stay 1-subgaussian")
        theta.setflags(write=False)
        actions.setflags(write=False)
        object.__setattr__(self, "theta_star", theta)
        object.__setattr__(self, "actions", actions)

    @property
    def dim(self) -> int:
        return self.theta_star.size

    @property
    def n_actions(self) -> int:
        return self.actions.shape[0]

    def expected_rewards(self) -> np.ndarray:
        return self.actions @ self.theta_star

    def noise_draws(self, size: int, rng: np.random.Generator) -> np.ndarray:
        if self.noise == "gaussian":
            return rng.normal(0.0, self.sigma, size)
        if self.noise == "uniform":
            return rng.uniform(-1.0, 1.0, size)
        return np.zeros(size)

    def pull(self, indices, rng: np.random.Generator) -> np.ndarray:
        """Noisy rewards for a sequence of action indices."""
        indices = np.asarray(indices, dtype=int)
        return self.actions[indices] @ self.theta_star + self.noise_draws(indices.size, rng)


def linear_reward(instance: LinearBanditInstance, action, rng: np.random.Generator) -> float:
    """Noisy reward of an arbitrary action vector with norm at most 1."""
    action = np.asarray(action, dtype=float).ravel()
    if action.size != instance.dim:
        raise ValidationError(f"action: expected dimension {instance.dim}, got {action.size}")
    if np.linalg.norm(action) > 1 + _NORM_SLACK:
        raise ValidationError(f"action: norm {np.linalg.norm(action):.6g} exceeds 1")
    return float(action @ instance.theta_star + instance.noise_draws(1, rng)[0])


@dataclass(frozen=True)
class BatchSchedule:
    """Non-adaptive batch sizes t_1..t_B."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes:
            raise ValidationError("sizes: a schedule needs at least one batch")
        if any(s < 1 for s in sizes):
            raise ValidationError(f"sizes: every batch must be >= 1, got {sizes}")
        object.__setattr__(self, "sizes", sizes)

    @property
    def horizon(self) -> int:
        return sum(self.sizes)

    @property
    def n_batches(self) -> int:
        return len(self.sizes)

    def bounds(self) -> list[tuple[int, int]]:
        """Half-open ``(start, stop)`` round ranges, 0-based."""
        edges = np.concatenate([[0], np.cumsum(self.sizes)])
        return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


@dataclass(frozen=True)
class AdversarialRewardTable:
    """A K x T reward table; row = arm, column = round."""

    rewards: np.ndarray
    provenance: str | None = None

    def __post_init__(self):
        rewards = np.asarray(self.rewards, dtype=float)
        if rewards.ndim != 2 or min(rewards.shape) < 1:
            raise ValidationError(f"rewards: expected a non-empty (K, T) matrix, got shape {rewards.shape}")
        if not np.all(np.isfinite(rewards)) or rewards.min() < 0 or rewards.max() > 1:
            raise ValidationError("rewards: every entry must lie in [0, 1]")
        rewards.setflags(write=False)
        object.__setattr__(self, "rewards", rewards)

    @property
    def n_arms(self) -> int:
        return self.rewards.shape[0]

    @property
    def horizon(self) -> int:
        return self.rewards.shape[1]

    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["arm"] + [f"t{t}" for t in range(1, self.horizon + 1)])
            for arm, row in enumerate(self.rewards):
                writer.writerow([arm] + [repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, provenance: str | None = "file") -> "AdversarialRewardTable":
        with Path(path).open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or header[0] != "arm":
                raise ValidationError(f"{path}: expected header 'arm,t1..tT'")
            rows = [row for row in reader if row]
        horizon = len(header) - 1
        rewards = np.zeros((len(rows), horizon))
        for k, row in enumerate(rows):
            if len(row) != horizon + 1 or int(row[0]) != k:
                raise ValidationError(f"{path}: malformed row {k}")
            rewards[k] = [float(v) for v in row[1:]]
        return cls(rewards, provenance=provenance)


def make_batch_random_adversary(
    schedule: BatchSchedule, rng: np.random.Generator, n_arms: int = 2
) -> AdversarialRewardTable:
    """Per batch, a fair coin picks the arm that earns 1 for the whole batch."""
    if n_arms != 2:
        raise UnsupportedInstanceError("the batch-random adversary is defined for exactly 2 arms")
    winners = rng.integers(0, 2, size=schedule.n_batches)
    per_round = np.repeat(winners, schedule.sizes)
    rewards = np.zeros((2, schedule.horizon))
    rewards[per_round, np.arange(schedule.horizon)] = 1.0
    return AdversarialRewardTable(rewards, provenance="batchrandom")


def make_switching_adversary(
    horizon: int,
    rng: np.random.Generator,
    n_arms: int = 2,
    switch_round: int | None = None,
    winner: int | None = None,
) -> AdversarialRewardTable:
    """All-zero rewards until a uniform switch round, then one arm pays 1 forever.

    ``switch_round`` is 1-based in {1..T}; pass it (and/or ``winner``) to
    force the construction instead of drawing it.
    """
    if n_arms != 2:
        raise UnsupportedInstanceError("the switching adversary is defined for exactly 2 arms")
    if horizon < 1:
        raise ValidationError("horizon: must be >= 1")
    tau = int(rng.integers(1, horizon + 1)) if switch_round is None else int(switch_round)
    arm = int(rng.integers(0, 2)) if winner is None else int(winner)
    if not 1 <= tau <= horizon or arm not in (0, 1):
        raise ValidationError(f"switch_round must be in 1..{horizon} and winner in {{0, 1}}")
    rewards = np.zeros((2, horizon))
    rewards[arm, tau - 1:] = 1.0
    return AdversarialRewardTable(rewards, provenance=f"switching:tau={tau}")


def make_iid_adversary(
    means, horizon: int, rng: np.random.Generator
) -> AdversarialRewardTable:
    """Oblivious table of independent Bernoulli rewards (a benign adversary)."""
    means = np.asarray(means, dtype=float).ravel()
    if means.size < 1 or np.any(means < 0) or np.any(means > 1):
        raise ValidationError("means: every mean must lie in [0, 1]")
    rewards = (rng.random((means.size, horizon)) < means[:, None]).astype(float)
    return AdversarialRewardTable(rewards, provenance="iid")
