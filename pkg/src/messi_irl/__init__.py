"""Tabular MaxEnt inverse reinforcement learning with a semi-supervised pairwise penalty."""

from .datagen import MixtureSpec, generate_expert, generate_unsupervised
from .environments import (
    EnvironmentBundle,
    build_gridworld,
    build_highway,
    build_pit,
    evaluate_policy,
    make_environment,
)
from .estimators import EMMaxEnt, MaxEntIRL, MESSI, TrajectoryFeaturizer
from .learners import LearnerConfig, em_maxent, run_maxent, run_messi
from .mdp import MdpModel, Trajectory, normalize_features
from .penalty import TrainingSet, pairwise_penalty, penalty_gradient
from .soft_dp import backward_pass, expected_feature_count, forward_pass

__version__ = "0.1.0"

__all__ = [
    "EMMaxEnt",
    "EnvironmentBundle",
    "LearnerConfig",
    "MESSI",
    "MaxEntIRL",
    "MdpModel",
    "MixtureSpec",
    "TrainingSet",
    "Trajectory",
    "TrajectoryFeaturizer",
    "backward_pass",
    "build_gridworld",
    "build_highway",
    "build_pit",
    "em_maxent",
    "evaluate_policy",
    "expected_feature_count",
    "forward_pass",
    "generate_expert",
    "generate_unsupervised",
    "make_environment",
    "normalize_features",
    "pairwise_penalty",
    "penalty_gradient",
    "run_maxent",
    "run_messi",
]
