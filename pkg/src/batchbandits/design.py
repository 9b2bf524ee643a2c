"""Linear-algebra kernel for batched linear elimination.

Approximate G-optimal designs (Frank-Wolfe / Fedorov-Wynn on log det V),
rounding a design to a multi-set of pulls, least-squares estimation,
greedy epsilon-nets and projection of an action set onto its span.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .exceptions import DegenerateInstanceError, RankError, ValidationError

RANK_RTOL = 1e-8

# Sizing constants of the multi-set: n lies in [c, C] * d ln(2/delta) / eps^2.
DESIGN_C_LOW = 2.0
DESIGN_C_HIGH = 4.0


def _as_matrix(actions) -> np.ndarray:
    a = np.asarray(actions, dtype=float)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2 or a.shape[0] == 0:
        raise ValidationError(f"actions: expected a non-empty (K, d) array, got shape {a.shape}")
    return a


def matrix_rank(a: np.ndarray) -> int:
    """Numerical rank with a singular-value cut at RANK_RTOL * s_max."""
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


@dataclass
class Design:
    """A probability distribution over an action list.

    ``weights`` holds one entry per action (zeros off the support).
    ``converged`` is False when the solver stopped at ``max_iter``.
    """

    weights: np.ndarray
    g_value: float
    converged: bool = True
    iterations: int = 0
    logdet_history: list[float] = field(default_factory=list, repr=False)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    @property
    def n_actions(self) -> int:
        return self.weights.size

    def to_dict(self, counts=None) -> dict:
        support = self.support
        out = {
            "support": support.tolist(),
            "weights": self.weights[support].tolist(),
            "counts": [] if counts is None else np.asarray(counts)[support].astype(int).tolist(),
            "g": float(self.g_value),
        }
        return out

    def to_json(self, counts=None) -> str:
        return json.dumps(self.to_dict(counts))

    @classmethod
    def from_dict(cls, data: dict, n_actions: int) -> "Design":
        weights = np.zeros(n_actions)
        weights[np.asarray(data["support"], dtype=int)] = data["weights"]
        return cls(weights=weights, g_value=float(data["g"]))


@dataclass
class PullMultiset:
    """How many times to pull each action in one batch."""

    counts: np.ndarray
    budget: int

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def as_sequence(self) -> np.ndarray:
        """Action indices in play order (grouped by action)."""
        return np.repeat(np.arange(self.counts.size), self.counts)


@dataclass
class LeastSquaresEstimate:
    theta_hat: np.ndarray
    gram: np.ndarray
    condition: float


def design_matrix(actions, weights) -> np.ndarray:
    """V(pi) = sum_a pi_a a a^T."""
    a = _as_matrix(actions)
    return (a * np.asarray(weights, dtype=float)[:, None]).T @ a


def _leverages(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    try:
        factor = linalg.cho_factor(v, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise RankError("design matrix is singular") from exc
    # cho_factor can succeed on a numerically singular matrix
    diag = np.abs(np.diag(factor[0]))
    if diag.min() <= math.sqrt(RANK_RTOL) * diag.max():
        raise RankError("design matrix is singular")
    solved = linalg.cho_solve(factor, a.T, check_finite=False)
    return np.einsum("ij,ji->i", a, solved)


def max_leverage(actions, design: Design) -> tuple[int, float]:
    """Index and value of max_a ||a||^2 in the V(design)^-1 norm.

    Ties go to the lowest index.
    """
    a = _as_matrix(actions)
    lev = _leverages(a, design_matrix(a, design.weights))
    idx = int(np.argmax(lev))
    return idx, float(lev[idx])


def frank_wolfe_goptimal(actions, tol: float = 0.01, max_iter: int = 100_000) -> Design:
    """Approximate G-optimal design by Frank-Wolfe ascent on log det V(pi).

    Starts from the uniform design and moves mass to the action of maximal
    leverage g with the exact line-search step
    ``gamma = (g/d - 1) / (g - 1)`` until ``g <= d (1 + tol)``. By the
    Kiefer-Wolfowitz theorem the optimum of g is d, so the stopping rule is
    a certificate of near-optimality.

    The actions must span R^d; call :func:`project_to_span` first
    otherwise. If ``max_iter`` is hit, the best iterate is returned with
    ``converged=False``.
    """
    if not 0 < tol < 1:
        raise ValidationError(f"tol: expected a value in (0, 1), got {tol}")
    a = _as_matrix(actions)
    k, d = a.shape
    if matrix_rank(a) < d:
        raise RankError(f"actions span a space of dimension {matrix_rank(a)} < {d}")

    w = np.full(k, 1.0 / k)
    target = d * (1.0 + tol)
    history = []
    best_w, best_g = w.copy(), math.inf
    for it in range(max_iter + 1):
        v = design_matrix(a, w)
        lev = _leverages(a, v)
        j = int(np.argmax(lev))
        g = float(lev[j])
        history.append(float(np.linalg.slogdet(v)[1]))
        if g < best_g:
            best_w, best_g = w.copy(), g
        if g <= target:
            return Design(w, g, converged=True, iterations=it, logdet_history=history)
        if it == max_iter:
            break
        gamma = (g / d - 1.0) / (g - 1.0)
        w *= 1.0 - gamma
        w[j] += gamma
    return Design(best_w, best_g, converged=False, iterations=max_iter, logdet_history=history)


def multiset_size(g_value: float, eps: float, delta: float) -> int:
    """n = ceil(2 g ln(2/delta) / eps^2)."""
    return max(1, math.ceil(2.0 * g_value * math.log(2.0 / delta) / eps**2 - 1e-9))


def round_design(design: Design, eps: float, delta: float) -> PullMultiset:
    """Turn a design into pull counts giving eps-accurate predictions.

    Every action a with pi_a > 0 is pulled ceil(pi_a n) times, so the
    Gram matrix dominates n V(pi) and ||a||^2_{Gram^-1} <= g / n for every
    action. With 1-subgaussian noise this bounds |<a, theta_hat - theta>|
    by eps with probability at least 1 - delta, for each a.
    """
    if not eps > 0 or not math.isfinite(eps):
        raise ValidationError(f"eps: expected a positive finite value, got {eps}")
    if not 0 < delta < 1:
        raise ValidationError(f"delta: expected a value in (0, 1), got {delta}")
    n = multiset_size(design.g_value, eps, delta)
    counts = np.zeros(design.n_actions, dtype=np.int64)
    support = design.support
    counts[support] = np.ceil(design.weights[support] * n - 1e-9).astype(np.int64)
    counts[support] = np.maximum(counts[support], 1)
    return PullMultiset(counts=counts, budget=n)


def least_squares(pulled_actions, rewards) -> LeastSquaresEstimate:
    """theta_hat = (sum a a^T)^-1 sum r a, via a Cholesky solve."""
    a = _as_matrix(pulled_actions)
    r = np.asarray(rewards, dtype=float).ravel()
    if r.size != a.shape[0]:
        raise ValidationError(f"rewards: expected {a.shape[0]} values, got {r.size}")
    gram = a.T @ a
    s = np.linalg.svd(gram, compute_uv=False)
    if s[0] == 0 or s[-1] <= RANK_RTOL * s[0]:
        raise RankError("pulled actions do not span the working space")
    theta = linalg.cho_solve(linalg.cho_factor(gram, lower=True), a.T @ r)
    return LeastSquaresEstimate(theta_hat=theta, gram=gram, condition=float(s[0] / s[-1]))


def epsilon_net(points, eps: float) -> np.ndarray:
    """Greedy farthest-point eps-net; returns sorted indices into ``points``.

    Starts from point 0 and keeps adding the point farthest from the
    current net (lowest index on ties) while that distance exceeds eps.
    The result covers every point within eps and its members are pairwise
    more than eps apart.
    """
    p = _as_matrix(points)
    if not eps > 0:
        raise ValidationError(f"eps: expected a positive value, got {eps}")
    chosen = [0]
    dist = np.linalg.norm(p - p[0], axis=1)
    while True:
        j = int(np.argmax(dist))
        if dist[j] <= eps:
            break
        chosen.append(j)
        np.minimum(dist, np.linalg.norm(p - p[j], axis=1), out=dist)
    return np.sort(np.asarray(chosen, dtype=int))


def project_to_span(actions) -> tuple[np.ndarray, np.ndarray, int]:
    """Isometric coordinates of the actions inside their own span.

    Returns ``(basis, projected, rank)`` with ``basis`` a (d, rank) matrix
    of orthonormal columns and ``projected = actions @ basis``; inner
    products between actions are preserved.
    """
    a = _as_matrix(actions)
    _, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        raise DegenerateInstanceError("actions: every action is the zero vector")
    rank = int(np.sum(s > RANK_RTOL * s[0]))
    basis = vt[:rank].T
    return basis, a @ basis, rank
