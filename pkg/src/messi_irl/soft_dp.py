"""Backward/forward passes of MaxEnt IRL and a brute-force path enumerator.

The stationary backward pass is discounted soft value iteration,

    Q(s, a) = theta . f(s) + gamma * sum_s' p(s'|s, a) V(s')
    V(s)    = log sum_a exp Q(s, a)

run in log space so rewards with ``|theta|_inf`` in the hundreds stay finite.
Passing ``horizon`` instead gives the exact finite-horizon MaxEnt recursion
over paths with ``horizon`` actions, whose policy is time-indexed; this is
the form that reproduces ``exp(theta . f_zeta) * prod p / Z`` path by path
and is what :func:`enumerate_trajectories` checks against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import logsumexp

from .mdp import MdpModel, Trajectory

DEFAULT_TOL = 1e-8
DEFAULT_MAX_SWEEPS = 1000
DEFAULT_ENUMERATION_CAP = 10**6


class EnumerationTooLargeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SoftPolicy:
    """Stochastic MaxEnt policy.

    ``action_probs`` is (S, A) for the stationary pass and (H, S, A) for the
    finite-horizon pass, where row ``t`` is used for the action at step t.
    ``soft_values`` holds V(s) (the log partition of paths starting at s).
    """

    action_probs: np.ndarray
    soft_values: np.ndarray
    theta_snapshot: np.ndarray
    converged: bool = True
    sweeps: int = 0

    @property
    def is_time_indexed(self) -> bool:
        return self.action_probs.ndim == 3

    def at(self, t: int) -> np.ndarray:
        if self.is_time_indexed:
            return self.action_probs[min(t, self.action_probs.shape[0] - 1)]
        return self.action_probs


@dataclass(frozen=True, eq=False)
class VisitationFrequencies:
    rho: np.ndarray
    horizon_used: Union[int, str]


def _check_theta(mdp: MdpModel, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (mdp.n_features,):
        raise ValueError(
            f"theta has shape {theta.shape}, expected ({mdp.n_features},)"
        )
    return theta


def backward_pass(
    mdp: MdpModel,
    theta,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    horizon: int | None = None,
    init_values=None,
) -> SoftPolicy:
    """Compute the soft policy induced by reward weights ``theta``.

    Parameters
    ----------
    mdp : MdpModel
    theta : array of shape (n_features,)
    tol : float
        Stop once the max-norm change of V drops below ``tol``.
    max_sweeps : int
        Hard cap on sweeps. Hitting it is not an error; the returned policy
        carries ``converged=False``.
    horizon : int, optional
        Number of actions for the exact finite-horizon pass. ``None`` runs
        the stationary discounted iteration.
    init_values : array of shape (n_states,), optional
        Warm start for V, e.g. the soft values of a nearby theta.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    theta = _check_theta(mdp, theta)
    if horizon is not None:
        return _finite_backward_pass(mdp, theta, int(horizon))

    P, gamma = mdp.transition, mdp.discount
    r = mdp.features @ theta
    terminal = mdp.terminal_mask
    # (S*A, S) view keeps the per-sweep product a single BLAS call
    P2 = P.reshape(-1, mdp.n_states)
    shape = (mdp.n_states, mdp.n_actions)
    V = np.zeros(mdp.n_states) if init_values is None else np.array(init_values, dtype=float)
    V[terminal] = 0.0
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        Q = r[:, None] + gamma * (P2 @ V).reshape(shape)
        V_new = _lse_rows(Q)
        V_new[terminal] = 0.0
        delta = np.max(np.abs(V_new - V))
        V = V_new
        if delta < tol:
            converged = True
            break

    Q = r[:, None] + gamma * (P @ V)
    pi = np.exp(Q - logsumexp(Q, axis=1, keepdims=True))
    pi[terminal] = 1.0 / mdp.n_actions
    return SoftPolicy(pi, V, theta.copy(), converged=converged, sweeps=sweeps)


def _lse_rows(Q):
    m = Q.max(axis=1)
    return m + np.log(np.exp(Q - m[:, None]).sum(axis=1))


def _finite_backward_pass(mdp: MdpModel, theta: np.ndarray, horizon: int) -> SoftPolicy:
    # Path reward is sum_t gamma^t r(s_t) over horizon + 1 states; L[t] is the
    # log partition of the suffix starting at step t.
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    P, gamma = mdp.transition, mdp.discount
    r = mdp.features @ theta
    L = gamma**horizon * r
    probs = np.empty((horizon, mdp.n_states, mdp.n_actions))
    for t in range(horizon - 1, -1, -1):
        Q = gamma**t * r[:, None] + logsumexp(
            np.broadcast_to(L, P.shape), b=P, axis=2
        )
        L = logsumexp(Q, axis=1)
        probs[t] = np.exp(Q - L[:, None])
    return SoftPolicy(probs, L, theta.copy(), converged=True, sweeps=horizon)


def forward_pass(
    mdp: MdpModel, policy: SoftPolicy, horizon: int | None
) -> VisitationFrequencies:
    """Discounted state visitation rho(s) = sum_{t<horizon} gamma^t d_t(s).

    ``horizon=None`` returns the infinite-horizon limit by solving
    ``(I - gamma P_pi^T) rho = d_0``; it needs a stationary policy.
    """
    P, gamma = mdp.transition, mdp.discount
    if horizon is None:
        if policy.is_time_indexed:
            raise ValueError("infinite-horizon visitation needs a stationary policy")
        P_pi = np.einsum("sa,sak->sk", policy.action_probs, P)
        rho = np.linalg.solve(np.eye(mdp.n_states) - gamma * P_pi.T, mdp.initial_dist)
        return VisitationFrequencies(np.maximum(rho, 0.0), "converged")

    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    d = mdp.initial_dist.copy()
    rho = np.zeros(mdp.n_states)
    w = 1.0
    for t in range(horizon):
        rho += w * d
        if t + 1 < horizon:
            d = np.einsum("s,sa,sak->k", d, policy.at(t), P)
            w *= gamma
    return VisitationFrequencies(rho, int(horizon))


def expected_feature_count(mdp: MdpModel, rho) -> np.ndarray:
    """Expected (discounted) feature count sum_s rho(s) f(s)."""
    rho = getattr(rho, "rho", rho)
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (mdp.n_states,):
        raise ValueError(f"rho has shape {rho.shape}, expected ({mdp.n_states},)")
    return rho @ mdp.features


def policy_feature_count(mdp, theta, horizon=None, tol=DEFAULT_TOL, max_sweeps=DEFAULT_MAX_SWEEPS):
    """Backward pass, forward pass and expected feature count in one call."""
    policy = backward_pass(mdp, theta, tol=tol, max_sweeps=max_sweeps)
    rho = forward_pass(mdp, policy, horizon)
    return expected_feature_count(mdp, rho), policy


def trajectory_log_prob(mdp: MdpModel, theta, trajectory: Trajectory, partition: float) -> float:
    """log P(zeta | theta) = theta . f_zeta - log Z + sum_t log p(s_{t+1} | s_t, a_t).

    Returns ``-inf`` for trajectories that take a zero-probability transition.
    """
    theta = _check_theta(mdp, theta)
    if not trajectory.has_actions:
        raise ValueError("trajectory_log_prob needs the actions of the trajectory")
    s, a = trajectory.states, trajectory.actions
    p = mdp.transition[s[:-1], a, s[1:]]
    if np.any(p <= 0):
        return -np.inf
    return float(theta @ trajectory.feature_count - partition + np.log(p).sum())


def enumerate_trajectories(
    mdp: MdpModel, horizon: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> list[tuple[Trajectory, float]]:
    """Every feasible path with exactly ``horizon`` actions.

    Each path starts in a state with positive initial mass and comes with its
    probability under uniformly random actions,
    ``initial_dist(s_0) * prod_t p(s_{t+1} | s_t, a_t) / n_actions``, so the
    returned probabilities sum to 1. The action factor is the same for every
    path and cancels out of any MaxEnt reweighting.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if mdp.n_actions**horizon > cap:
        raise EnumerationTooLargeError(
            f"{mdp.n_actions}^{horizon} action sequences exceed the cap of {cap}"
        )
    P = mdp.transition
    u = 1.0 / mdp.n_actions
    paths = [([s], [], float(mdp.initial_dist[s])) for s in np.flatnonzero(mdp.initial_dist > 0)]
    for _ in range(horizon):
        grown = []
        for states, actions, prob in paths:
            s = states[-1]
            for a in range(mdp.n_actions):
                for s2 in np.flatnonzero(P[s, a] > 0):
                    grown.append((states + [int(s2)], actions + [a], prob * u * P[s, a, s2]))
        paths = grown
        if len(paths) > cap:
            raise EnumerationTooLargeError(f"more than {cap} feasible paths")
    return [(Trajectory.from_states(mdp, st, ac), p) for st, ac, p in paths]
