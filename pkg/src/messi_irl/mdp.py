"""Tabular MDPs, feature maps and trajectories."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

ROW_TOL = 1e-9


class InvalidMdpError(ValueError):
    """Raised when an MDP violates its structural invariants."""


class InvalidTrajectoryError(ValueError):
    """Raised when a trajectory is malformed or leaves the state space."""


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MdpModel:
    """A finite MDP with state features.

    Parameters
    ----------
    transition : array of shape (n_states, n_actions, n_states)
        ``transition[s, a, s2]`` is p(s2 | s, a).
    features : array of shape (n_states, n_features)
        Per-state feature vectors f(s).
    initial_dist : array of shape (n_states,)
    discount : float in (0, 1)
    terminal_states : iterable of int
        Absorbing states. They self-loop under every action and carry zero
        features once the model is normalized.
    normalized : bool
        Set by :func:`normalize_features`; marks features as already
        rescaled into ``[0, 1 - discount]``.
    """

    transition: np.ndarray
    features: np.ndarray
    initial_dist: np.ndarray
    discount: float
    terminal_states: frozenset = field(default_factory=frozenset)
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "transition", _frozen(self.transition))
        object.__setattr__(self, "features", _frozen(self.features))
        object.__setattr__(self, "initial_dist", _frozen(self.initial_dist))
        object.__setattr__(self, "discount", float(self.discount))
        object.__setattr__(
            self, "terminal_states", frozenset(int(s) for s in self.terminal_states)
        )
        self._validate()

    def _validate(self):
        P, F, d0 = self.transition, self.features, self.initial_dist
        if P.ndim != 3 or P.shape[0] != P.shape[2] or P.shape[0] < 1 or P.shape[1] < 1:
            raise InvalidMdpError(f"transition must have shape (S, A, S), got {P.shape}")
        n_states = P.shape[0]
        if F.ndim != 2 or F.shape[0] != n_states:
            raise InvalidMdpError(
                f"features must have shape ({n_states}, d), got {F.shape}"
            )
        if d0.shape != (n_states,):
            raise InvalidMdpError(f"initial_dist must have shape ({n_states},)")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(F)) and np.all(np.isfinite(d0))):
            raise InvalidMdpError("non-finite entries in MDP arrays")
        if np.any(P < 0):
            raise InvalidMdpError("negative transition probability")
        bad = np.abs(P.sum(axis=2) - 1.0) > ROW_TOL
        if np.any(bad):
            s, a = np.argwhere(bad)[0]
            raise InvalidMdpError(f"transition row (s={s}, a={a}) does not sum to 1")
        if np.any(d0 < 0) or abs(d0.sum() - 1.0) > ROW_TOL:
            raise InvalidMdpError("initial_dist must be a probability vector")
        if not 0.0 < self.discount < 1.0:
            raise InvalidMdpError(f"discount must lie in (0, 1), got {self.discount}")
        for s in self.terminal_states:
            if not 0 <= s < n_states:
                raise InvalidMdpError(f"terminal state {s} out of range")
            if not np.allclose(P[s, :, s], 1.0, atol=ROW_TOL):
                raise InvalidMdpError(f"terminal state {s} must be absorbing")
        if self.normalized:
            hi = 1.0 - self.discount
            if np.any(F < -1e-12) or np.any(F > hi + 1e-12):
                raise InvalidMdpError("normalized features must lie in [0, 1 - discount]")

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def terminal_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_states, dtype=bool)
        mask[list(self.terminal_states)] = True
        return mask


def normalize_features(mdp: MdpModel) -> MdpModel:
    """Min-max rescale every feature dimension to [0, 1], then scale by (1 - gamma).

    Extremes are taken over non-terminal states; terminal states get zero
    features. Constant dimensions map to 0. Already-normalized models are
    returned unchanged so the (1 - gamma) factor is applied exactly once.
    """
    if mdp.normalized:
        return mdp
    F = np.array(mdp.features, dtype=float)
    if not np.all(np.isfinite(F)):
        raise InvalidMdpError("non-finite feature values")
    live = ~mdp.terminal_mask
    ref = F[live] if live.any() else F
    lo, hi = ref.min(axis=0), ref.max(axis=0)
    span = hi - lo
    scaled = np.zeros_like(F)
    nz = span > 0
    scaled[:, nz] = (F[:, nz] - lo[nz]) / span[nz]
    scaled = np.clip(scaled, 0.0, 1.0) * (1.0 - mdp.discount)
    scaled[~live] = 0.0
    return replace(mdp, features=scaled, normalized=True)


def _check_states(states, n_states: int) -> np.ndarray:
    states = np.asarray(states)
    if states.ndim != 1 or states.size < 1:
        raise InvalidTrajectoryError("a trajectory needs at least one state")
    if not np.issubdtype(states.dtype, np.integer):
        if not np.all(np.equal(np.mod(states, 1), 0)):
            raise InvalidTrajectoryError("state indices must be integers")
        states = states.astype(int)
    if states.min() < 0 or states.max() >= n_states:
        raise InvalidTrajectoryError(
            f"state index out of range [0, {n_states}): {states.min()}..{states.max()}"
        )
    return states


def feature_count(states: Sequence[int], mdp: MdpModel) -> np.ndarray:
    """Discounted feature count sum_t gamma^t f(s_t), with t = 0 at the first state."""
    states = _check_states(states, mdp.n_states)
    weights = mdp.discount ** np.arange(states.size)
    return weights @ mdp.features[states]


def trajectory_reward(theta, f) -> float:
    """Cumulative reward theta^T f of a trajectory with feature count ``f``."""
    theta = np.asarray(theta, dtype=float)
    f = np.asarray(f, dtype=float)
    if theta.shape != f.shape:
        raise ValueError(f"dimension mismatch: theta {theta.shape} vs f {f.shape}")
    return float(theta @ f)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A state sequence, optionally with the actions taken between states.

    Build with :meth:`from_states` so the feature count is computed against
    the MDP; ``actions`` is either empty or one shorter than ``states``.
    """

    states: np.ndarray
    actions: np.ndarray
    feature_count: np.ndarray

    def __post_init__(self):
        states = _frozen(self.states, dtype=int)
        actions = _frozen(self.actions if self.actions is not None else [], dtype=int)
        if states.ndim != 1 or states.size < 1:
            raise InvalidTrajectoryError("a trajectory needs at least one state")
        if actions.size and actions.size != states.size - 1:
            raise InvalidTrajectoryError(
                f"{actions.size} actions for {states.size} states; expected {states.size - 1}"
            )
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "feature_count", _frozen(self.feature_count))

    @classmethod
    def from_states(cls, mdp: MdpModel, states, actions=None) -> "Trajectory":
        states = _check_states(states, mdp.n_states)
        actions = np.asarray([] if actions is None else actions, dtype=int)
        if actions.size and (actions.min() < 0 or actions.max() >= mdp.n_actions):
            raise InvalidTrajectoryError("action index out of range")
        return cls(states, actions, feature_count(states, mdp))

    @property
    def has_actions(self) -> bool:
        return self.actions.size > 0 or self.states.size == 1

    def __len__(self) -> int:
        return int(self.states.size)

    def to_dict(self) -> dict:
        out = {"states": self.states.tolist()}
        if self.actions.size:
            out["actions"] = self.actions.tolist()
        return out


def sample_trajectory(mdp: MdpModel, policy, horizon: int, rng) -> Trajectory:
    """Roll out ``policy`` for at most ``horizon`` states.

    ``policy`` is anything with an ``action_probs`` table of shape (S, A) or,
    for time-indexed policies, (H, S, A). The rollout stops early once a
    terminal state is entered.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    rng = np.random.default_rng(rng)
    pi = np.asarray(policy.action_probs)
    P = mdp.transition
    terminal = mdp.terminal_mask
    s = int(rng.choice(mdp.n_states, p=mdp.initial_dist))
    states, actions = [s], []
    for t in range(horizon - 1):
        if terminal[s]:
            break
        probs = pi[min(t, pi.shape[0] - 1), s] if pi.ndim == 3 else pi[s]
        a = int(rng.choice(mdp.n_actions, p=probs))
        s = int(rng.choice(mdp.n_states, p=P[s, a]))
        actions.append(a)
        states.append(s)
    return Trajectory.from_states(mdp, states, actions)


def mdp_to_dict(mdp: MdpModel) -> dict:
    return {
        "n_states": mdp.n_states,
        "n_actions": mdp.n_actions,
        "transition": mdp.transition.tolist(),
        "features": mdp.features.tolist(),
        "initial_dist": mdp.initial_dist.tolist(),
        "discount": mdp.discount,
        "terminal_states": sorted(mdp.terminal_states),
        "normalized": mdp.normalized,
    }


def mdp_from_dict(doc: dict) -> MdpModel:
    try:
        mdp = MdpModel(
            transition=doc["transition"],
            features=doc["features"],
            initial_dist=doc["initial_dist"],
            discount=doc["discount"],
            terminal_states=doc.get("terminal_states", []),
            normalized=bool(doc.get("normalized", False)),
        )
    except KeyError as e:
        raise InvalidMdpError(f"missing field {e.args[0]!r}") from None
    except (TypeError, ValueError) as e:
        if isinstance(e, InvalidMdpError):
            raise
        raise InvalidMdpError(f"malformed MDP document: {e}") from None
    if "n_states" in doc and doc["n_states"] != mdp.n_states:
        raise InvalidMdpError("n_states disagrees with transition shape")
    if "n_actions" in doc and doc["n_actions"] != mdp.n_actions:
        raise InvalidMdpError("n_actions disagrees with transition shape")
    return mdp


def save_mdp(mdp: MdpModel, path) -> None:
    Path(path).write_text(json.dumps(mdp_to_dict(mdp)))


def load_mdp(path) -> MdpModel:
    return mdp_from_dict(json.loads(Path(path).read_text()))
