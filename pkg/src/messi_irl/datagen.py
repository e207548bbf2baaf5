"""Expert and unsupervised demonstration sets."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .environments import EnvironmentBundle
from .mdp import MdpModel, Trajectory, sample_trajectory
from .soft_dp import backward_pass

MIXTURES = ("mu1", "mu2", "mu3", "ustar")

Component = Union[str, np.ndarray]


@dataclass(frozen=True)
class MixtureSpec:
    """Per-trajectory mixture over behaviour sources.

    A component is either a source name of the bundle (``"star"``, ``"one"``,
    ``"two"``) or a reward vector whose soft policy is sampled.
    """

    components: tuple
    weights: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.components) != w.size or w.size == 0:
            raise ValueError("components and weights must be non-empty and equally long")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("mixture weights must be non-negative and sum to 1")

    @classmethod
    def two(cls, first: Component, second: Component, nu: float) -> "MixtureSpec":
        if not 0.0 <= nu <= 1.0:
            raise ValueError(f"nu must lie in [0, 1], got {nu}")
        return cls((first, second), (nu, 1.0 - nu))

    @classmethod
    def named(cls, name: str, nu: float = 0.5) -> "MixtureSpec":
        """``mu1`` = nu*P_u* + (1-nu)*P_1, ``mu2`` = nu*P_u* + (1-nu)*P_2,
        ``mu3`` = nu*P_1 + (1-nu)*P_2, ``ustar`` = P_u* alone."""
        if name == "mu1":
            return cls.two("star", "one", nu)
        if name == "mu2":
            return cls.two("star", "two", nu)
        if name == "mu3":
            return cls.two("one", "two", nu)
        if name == "ustar":
            return cls.two("star", "one", 1.0)
        raise ValueError(f"unknown mixture {name!r}; choose from {MIXTURES}")


def _resolve(bundle: EnvironmentBundle, component):
    if isinstance(component, str):
        try:
            return bundle.sources[component]
        except KeyError:
            raise ValueError(f"bundle {bundle.name!r} has no source {component!r}") from None
    theta = bundle.expert_beta * np.asarray(component, dtype=float)
    return [(backward_pass(bundle.mdp, theta), 1.0)]


def _pick(weights, u: float) -> int:
    cum = np.cumsum(weights)
    return int(min(np.searchsorted(cum, u, side="right"), len(cum) - 1))


def generate_expert(bundle: EnvironmentBundle, l: int, cfg=None, rng=None) -> list[Trajectory]:
    """Sample ``l`` demonstrations from the bundle's expert policy."""
    if l < 1:
        raise ValueError("l must be >= 1")
    rng = np.random.default_rng(rng)
    return [sample_trajectory(bundle.mdp, bundle.expert_policy, bundle.horizon, rng) for _ in range(l)]


def generate_unsupervised(
    bundle: EnvironmentBundle, spec: MixtureSpec, u: int, rng=None, return_components=False
):
    """Draw ``u`` trajectories, each from an independently chosen mixture component.

    Every trajectory consumes one uniform draw for the component and one for
    the sub-policy inside the component, whatever the weights, so mixtures
    that agree on the chosen components yield identical sets from one seed.
    """
    if u < 0:
        raise ValueError("u must be >= 0")
    rng = np.random.default_rng(rng)
    resolved = [_resolve(bundle, c) for c in spec.components]
    trajs, chosen = [], []
    for _ in range(u):
        k = _pick(spec.weights, rng.random())
        sub = resolved[k]
        j = _pick([w for _, w in sub], rng.random())
        trajs.append(sample_trajectory(bundle.mdp, sub[j][0], bundle.horizon, rng))
        chosen.append(k)
    if return_components:
        return trajs, chosen
    return trajs


def save_trajectories(trajectories: Sequence[Trajectory], path) -> None:
    """One JSON object per line: ``{"states": [...], "actions": [...]}``."""
    with open(path, "w") as fh:
        for t in trajectories:
            fh.write(json.dumps(t.to_dict()) + "\n")


def load_trajectories(path, mdp: MdpModel) -> list[Trajectory]:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            doc = json.loads(line)
            out.append(Trajectory.from_states(mdp, doc["states"], doc.get("actions")))
    return out
