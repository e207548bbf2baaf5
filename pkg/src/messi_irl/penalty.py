"""Trajectory similarities and the pairwise reward-smoothness penalty."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .mdp import Trajectory


def rbf_similarity(fa, fb, sigma: float) -> float:
    """exp(-||fa - fb||^2 / (2 sigma)). Note the bandwidth is not squared."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    diff = np.asarray(fa, dtype=float) - np.asarray(fb, dtype=float)
    return float(np.exp(-(diff @ diff) / (2.0 * sigma)))


def unsquared_distance_similarity(fa, fb, scale: float) -> float:
    """exp(-||fa - fb|| / scale)."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    diff = np.asarray(fa, dtype=float) - np.asarray(fb, dtype=float)
    return float(np.exp(-np.linalg.norm(diff) / scale))


def turn_count(trajectory: Trajectory) -> int:
    """Number of direction changes, i.e. steps where the action differs from the previous one."""
    if not trajectory.has_actions:
        raise ValueError("turn counting needs the trajectory's actions")
    a = trajectory.actions
    return int(np.count_nonzero(a[1:] != a[:-1]))


def turn_count_similarity(a: Trajectory, b: Trajectory) -> float:
    return float(np.exp(-abs(turn_count(a) - turn_count(b))))


SIMILARITIES = ("rbf", "unsquared", "turn_count")


def similarity_matrix(
    trajectories: Sequence[Trajectory], kind: str = "rbf", **params
) -> np.ndarray:
    """Pairwise similarity over ``trajectories`` for a named kernel.

    ``kind`` is one of ``"rbf"`` (param ``sigma``), ``"unsquared"`` (param
    ``scale``) or ``"turn_count"``. A callable ``kind(traj_a, traj_b)`` is
    also accepted and evaluated on every pair.
    """
    n = len(trajectories)
    if callable(kind):
        S = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                S[i, j] = S[j, i] = kind(trajectories[i], trajectories[j])
        return S
    if kind == "turn_count":
        counts = np.array([turn_count(t) for t in trajectories], dtype=float)
        return np.exp(-np.abs(counts[:, None] - counts[None, :]))
    F = np.array([t.feature_count for t in trajectories], dtype=float).reshape(n, -1)
    if kind == "rbf":
        sigma = float(params.get("sigma", 5.0))
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        return np.exp(-cdist(F, F, "sqeuclidean") / (2.0 * sigma))
    if kind == "unsquared":
        scale = float(params.get("scale", 10.0))
        if scale <= 0:
            raise ValueError("scale must be positive")
        return np.exp(-cdist(F, F, "euclidean") / scale)
    raise ValueError(f"unknown similarity {kind!r}; expected one of {SIMILARITIES}")


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Expert trajectories, unsupervised trajectories and their similarity matrix.

    Rows of ``similarity`` and ``feature_counts`` list the expert
    trajectories first, then the unsupervised ones.
    """

    expert: tuple
    unsupervised: tuple
    similarity: np.ndarray
    feature_counts: np.ndarray
    expert_mean_fc: np.ndarray

    @classmethod
    def build(
        cls,
        expert: Sequence[Trajectory],
        unsupervised: Sequence[Trajectory] = (),
        similarity: str | Callable = "rbf",
        **params,
    ) -> "TrainingSet":
        expert, unsupervised = tuple(expert), tuple(unsupervised)
        if not expert:
            raise ValueError("at least one expert trajectory is required")
        allt = expert + unsupervised
        S = similarity_matrix(allt, similarity, **params)
        return cls.from_matrix(expert, unsupervised, S)

    @classmethod
    def from_matrix(cls, expert, unsupervised, similarity) -> "TrainingSet":
        expert, unsupervised = tuple(expert), tuple(unsupervised)
        if not expert:
            raise ValueError("at least one expert trajectory is required")
        S = np.array(similarity, dtype=float)
        n = len(expert) + len(unsupervised)
        if S.shape != (n, n):
            raise ValueError(f"similarity must be ({n}, {n}), got {S.shape}")
        if not np.allclose(S, S.T, atol=1e-12):
            raise ValueError("similarity matrix must be symmetric")
        if np.any(S < 0) or np.any(S > 1 + 1e-12):
            raise ValueError("similarity entries must lie in [0, 1]")
        S.setflags(write=False)
        F = np.array([t.feature_count for t in expert + unsupervised], dtype=float)
        F.setflags(write=False)
        f_star = F[: len(expert)].mean(axis=0)
        f_star.setflags(write=False)
        return cls(expert, unsupervised, S, F, f_star)

    @property
    def trajectories(self) -> tuple:
        return self.expert + self.unsupervised

    @property
    def n_expert(self) -> int:
        return len(self.expert)

    def __len__(self) -> int:
        return len(self.expert) + len(self.unsupervised)


def _reward_gaps(theta, ts: TrainingSet) -> np.ndarray:
    if len(ts) == 0:
        raise ValueError("empty trajectory set")
    theta = np.asarray(theta, dtype=float)
    if theta.shape != ts.feature_counts.shape[1:]:
        raise ValueError("theta and feature counts differ in dimension")
    r = ts.feature_counts @ theta
    return r[:, None] - r[None, :]


def pairwise_penalty(theta, ts: TrainingSet) -> float:
    """1/(2n) * sum over ordered pairs of s(i, j) * (theta . (f_i - f_j))^2."""
    D = _reward_gaps(theta, ts)
    return float(np.sum(ts.similarity * D**2) / (2.0 * len(ts)))


def penalty_gradient(theta, ts: TrainingSet) -> np.ndarray:
    """Gradient of :func:`pairwise_penalty` with respect to theta."""
    M = ts.similarity * _reward_gaps(theta, ts)
    # sum_ij M_ij (f_i - f_j) = (row sums of M) . F - (column sums of M) . F
    return (M.sum(axis=1) - M.sum(axis=0)) @ ts.feature_counts / len(ts)
