"""Input checks shared by the estimators and the harness."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .mdp import InvalidTrajectoryError, MdpModel, Trajectory

EXPERT, UNLABELED = 1, -1


def as_trajectory(item, mdp: MdpModel) -> Trajectory:
    """Coerce a Trajectory, a state list or a ``{"states", "actions"}`` mapping."""
    if isinstance(item, Trajectory):
        if item.feature_count.shape != (mdp.n_features,):
            raise InvalidTrajectoryError("trajectory was built for an MDP with a different feature set")
        return item
    if isinstance(item, dict):
        if "states" not in item:
            raise InvalidTrajectoryError("trajectory mapping needs a 'states' entry")
        return Trajectory.from_states(mdp, item["states"], item.get("actions"))
    return Trajectory.from_states(mdp, item)


def check_trajectories(X, mdp: MdpModel, require_actions: bool = False) -> list[Trajectory]:
    """Validate a non-empty collection of trajectories against ``mdp``."""
    if X is None or isinstance(X, (str, bytes)):
        raise InvalidTrajectoryError("expected a sequence of trajectories")
    out = [as_trajectory(item, mdp) for item in X]
    if not out:
        raise InvalidTrajectoryError("at least one trajectory is required")
    if require_actions and not all(t.has_actions for t in out):
        raise InvalidTrajectoryError("every trajectory needs its actions here")
    return out


def check_labels(y, n: int) -> np.ndarray:
    """Labels for semi-supervised fitting: 1 marks an expert trajectory, -1 an unlabeled one.

    ``None`` means every trajectory is an expert demonstration.
    """
    if y is None:
        return np.full(n, EXPERT)
    y = np.asarray(y)
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")
    bad = set(np.unique(y).tolist()) - {EXPERT, UNLABELED}
    if bad:
        raise ValueError(f"labels must be 1 (expert) or -1 (unlabeled), got {sorted(bad)}")
    if not np.any(y == EXPERT):
        raise ValueError("at least one trajectory must be labeled as expert (1)")
    return y.astype(int)


def split_labeled(trajectories: Sequence[Trajectory], y: np.ndarray):
    expert = [t for t, lab in zip(trajectories, y) if lab == EXPERT]
    unlabeled = [t for t, lab in zip(trajectories, y) if lab == UNLABELED]
    return expert, unlabeled


def check_mdp(mdp) -> MdpModel:
    if not isinstance(mdp, MdpModel):
        raise TypeError(f"mdp must be an MdpModel, got {type(mdp).__name__}")
    if not mdp.normalized:
        raise ValueError("mdp features must be normalized; call normalize_features first")
    return mdp
