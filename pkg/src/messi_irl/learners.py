"""MaxEnt IRL, MESSI and the EM-style MaxEnt baseline as plain functions."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .mdp import MdpModel, Trajectory
from .penalty import TrainingSet, pairwise_penalty, penalty_gradient
from .soft_dp import (
    DEFAULT_MAX_SWEEPS,
    DEFAULT_TOL,
    backward_pass,
    expected_feature_count,
    forward_pass,
    trajectory_log_prob,
)


@dataclass(frozen=True)
class LearnerConfig:
    """Hyper-parameters shared by every learner.

    ``horizon`` is the number of states the forward pass accumulates;
    ``None`` uses the infinite discounted limit. ``discount``, when given,
    must agree with the MDP it is used on.
    """

    iterations: int = 100
    theta_max: float = 500.0
    lambda0: float = 0.05
    seed: int = 0
    step_size: float = 1.0
    horizon: Optional[int] = None
    discount: Optional[float] = None
    tol: float = DEFAULT_TOL
    max_sweeps: int = DEFAULT_MAX_SWEEPS

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.theta_max > 0:
            raise ValueError("theta_max must be positive")
        if self.lambda0 < 0:
            raise ValueError("lambda0 must be non-negative")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    @property
    def penalty_weight(self) -> float:
        # lambda = lambda0 / theta_max
        return self.lambda0 / self.theta_max


@dataclass
class History:
    """Per-iteration record of a learning run.

    ``thetas[t]`` is theta_t for t = 0..T, ``feature_counts[t]`` the
    expected feature count f_t of the policy at theta_t for t = 0..T-1.
    """

    thetas: list = field(default_factory=list)
    feature_counts: list = field(default_factory=list)
    targets: list = field(default_factory=list)
    penalties: list = field(default_factory=list)
    weights: list = field(default_factory=list)

    @property
    def mismatch(self) -> np.ndarray:
        """||target - f_t||_2 per iteration."""
        return np.array(
            [np.linalg.norm(g - f) for g, f in zip(self.targets, self.feature_counts)]
        )

    def equals(self, other: "History") -> bool:
        """Bit-level equality of thetas and feature counts."""
        return (
            len(self.thetas) == len(other.thetas)
            and all(np.array_equal(a, b) for a, b in zip(self.thetas, other.thetas))
            and all(np.array_equal(a, b) for a, b in zip(self.feature_counts, other.feature_counts))
        )

    def to_csv(self, path) -> None:
        """Write rows (iteration, theta_0..theta_{d-1}, mismatch, penalty)."""
        d = len(self.thetas[0])
        mism = self.mismatch
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", *[f"theta_{i}" for i in range(d)], "mismatch", "penalty"])
            for t, f in enumerate(self.feature_counts):
                w.writerow([t, *map(repr, self.thetas[t].tolist()), repr(mism[t]), repr(self.penalties[t])])


def project_inf_ball(theta, theta_max: float) -> np.ndarray:
    """Rescale ``theta`` onto the infinity-norm ball of radius ``theta_max`` if outside it."""
    theta = np.asarray(theta, dtype=float)
    norm = np.max(np.abs(theta)) if theta.size else 0.0
    if norm <= theta_max:
        return theta.copy()
    return theta * (theta_max / norm)


def messi_step(theta_t, ts: TrainingSet, f_t, cfg: LearnerConfig) -> np.ndarray:
    """One projected ascent step on log-likelihood minus the weighted pairwise penalty."""
    theta_t = np.asarray(theta_t, dtype=float)
    f_t = np.asarray(f_t, dtype=float)
    if theta_t.shape != f_t.shape or theta_t.shape != ts.expert_mean_fc.shape:
        raise ValueError("theta, f_t and the training-set feature counts differ in dimension")
    grad = ts.expert_mean_fc - f_t
    if cfg.lambda0 > 0:
        grad = grad - cfg.penalty_weight * penalty_gradient(theta_t, ts)
    return project_inf_ball(theta_t + cfg.step_size * grad, cfg.theta_max)


def initial_theta(n_features: int, seed) -> np.ndarray:
    """Uniform draw on [-1, 1]^d from the run seed."""
    return np.random.default_rng(seed).uniform(-1.0, 1.0, size=n_features)


def _check_discount(mdp: MdpModel, cfg: LearnerConfig):
    if cfg.discount is not None and not math.isclose(cfg.discount, mdp.discount):
        raise ValueError(
            f"config discount {cfg.discount} does not match the MDP's {mdp.discount}"
        )
    if not mdp.normalized:
        raise ValueError("learners expect a normalized MDP; call normalize_features first")


def _expected_counts(mdp, theta, cfg, warm=None):
    policy = backward_pass(
        mdp,
        theta,
        tol=cfg.tol,
        max_sweeps=cfg.max_sweeps,
        init_values=None if warm is None else warm.soft_values,
    )
    rho = forward_pass(mdp, policy, cfg.horizon)
    return expected_feature_count(mdp, rho), policy


def run_messi(mdp: MdpModel, ts: TrainingSet, cfg: LearnerConfig):
    """Fit reward weights with MESSI. Returns ``(theta_T, history)``."""
    _check_discount(mdp, cfg)
    if ts.feature_counts.shape[1] != mdp.n_features:
        raise ValueError("training set feature dimension does not match the MDP")
    theta = project_inf_ball(initial_theta(mdp.n_features, cfg.seed), cfg.theta_max)
    hist = History(thetas=[theta])
    policy = None
    for _ in range(cfg.iterations):
        f_t, policy = _expected_counts(mdp, theta, cfg, policy)
        hist.feature_counts.append(f_t)
        hist.targets.append(ts.expert_mean_fc)
        hist.penalties.append(pairwise_penalty(theta, ts))
        theta = messi_step(theta, ts, f_t, cfg)
        hist.thetas.append(theta)
    return theta, hist


def run_maxent(mdp: MdpModel, expert, cfg: LearnerConfig):
    """MaxEnt IRL: MESSI without unsupervised data and with lambda0 = 0."""
    if isinstance(expert, TrainingSet):
        expert = expert.expert
    ts = TrainingSet.from_matrix(expert, (), np.eye(len(expert)))
    plain = replace(cfg, lambda0=0.0)
    return run_messi(mdp, ts, plain)


def em_weights(mdp: MdpModel, theta, trajectories, soft_values) -> np.ndarray:
    """Normalized P(zeta | theta) over ``trajectories``.

    The per-path partition is V(s_0) from the soft policy at ``theta``.
    """
    logp = np.array(
        [trajectory_log_prob(mdp, theta, z, soft_values[z.states[0]]) for z in trajectories]
    )
    if not np.any(np.isfinite(logp)):
        raise ValueError("every trajectory has zero probability under the current reward")
    return np.exp(logp - logsumexp(logp))


def em_maxent(
    mdp: MdpModel,
    ts: TrainingSet,
    cfg: LearnerConfig,
    eta: int = 10,
    rounds: Optional[int] = None,
):
    """eta-EM-MaxEnt baseline.

    Each round reweights every trajectory in the training set by its
    probability under the previous reward, then takes ``eta`` projected
    MaxEnt steps towards the weighted mean feature count. ``rounds``
    defaults to ``ceil(cfg.iterations / eta)``.
    """
    _check_discount(mdp, cfg)
    if eta < 1:
        raise ValueError("eta must be >= 1")
    if rounds is None:
        rounds = math.ceil(cfg.iterations / eta)
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    trajs = ts.trajectories
    theta = project_inf_ball(initial_theta(mdp.n_features, cfg.seed), cfg.theta_max)
    hist = History(thetas=[theta])
    policy = None
    for _ in range(rounds):
        f_t, policy = _expected_counts(mdp, theta, cfg, policy)
        w = em_weights(mdp, theta, trajs, policy.soft_values)
        hist.weights.append(w)
        target = w @ ts.feature_counts
        for k in range(eta):
            if k:
                f_t, policy = _expected_counts(mdp, theta, cfg, policy)
            hist.feature_counts.append(f_t)
            hist.targets.append(target)
            hist.penalties.append(0.0)
            theta = project_inf_ball(theta + cfg.step_size * (target - f_t), cfg.theta_max)
            hist.thetas.append(theta)
    return theta, hist
