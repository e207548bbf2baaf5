"""scikit-learn style wrappers around the learners.

``X`` is a sequence of trajectories (``Trajectory`` objects, state lists or
``{"states", "actions"}`` mappings) on the MDP passed to the constructor.
For the semi-supervised estimators ``y`` follows the scikit-learn
convention: ``1`` marks an expert demonstration, ``-1`` an unlabeled one.

    est = MESSI(mdp, similarity="rbf", similarity_params={"sigma": 5.0})
    est.fit(expert + unlabeled, [1] * len(expert) + [-1] * len(unlabeled))
    est.reward_
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .learners import LearnerConfig, em_maxent, run_maxent, run_messi
from .penalty import TrainingSet
from .soft_dp import (
    DEFAULT_MAX_SWEEPS,
    DEFAULT_TOL,
    backward_pass,
    expected_feature_count,
    forward_pass,
    trajectory_log_prob,
)
from .validation import check_labels, check_mdp, check_trajectories, split_labeled


class TrajectoryFeaturizer(TransformerMixin, BaseEstimator):
    """Map trajectories to their discounted feature counts, shape (n, d)."""

    def __init__(self, mdp):
        self.mdp = mdp

    def fit(self, X=None, y=None):
        self.n_features_out_ = self.mdp.n_features
        return self

    def transform(self, X):
        trajs = check_trajectories(X, self.mdp)
        return np.array([t.feature_count for t in trajs])


class _IrlBase(BaseEstimator):
    def __init__(
        self,
        mdp,
        iterations=100,
        theta_max=500.0,
        step_size=1.0,
        horizon=None,
        random_state=0,
        tol=DEFAULT_TOL,
        max_sweeps=DEFAULT_MAX_SWEEPS,
    ):
        self.mdp = mdp
        self.iterations = iterations
        self.theta_max = theta_max
        self.step_size = step_size
        self.horizon = horizon
        self.random_state = random_state
        self.tol = tol
        self.max_sweeps = max_sweeps

    def _config(self, lambda0=0.0) -> LearnerConfig:
        return LearnerConfig(
            iterations=self.iterations,
            theta_max=self.theta_max,
            lambda0=lambda0,
            seed=self.random_state,
            step_size=self.step_size,
            horizon=self.horizon,
            tol=self.tol,
            max_sweeps=self.max_sweeps,
        )

    def _finish(self, theta, history):
        self.theta_ = theta
        self.history_ = history
        self.policy_ = backward_pass(self.mdp, theta, tol=self.tol, max_sweeps=self.max_sweeps)
        self.n_features_in_ = self.mdp.n_features
        return self

    @property
    def reward_(self) -> np.ndarray:
        """Per-state reward ``features @ theta_``."""
        check_is_fitted(self, "theta_")
        return self.mdp.features @ self.theta_

    def expected_feature_count(self, horizon=None) -> np.ndarray:
        """Expected feature count of the fitted soft policy."""
        check_is_fitted(self, "theta_")
        h = self.horizon if horizon is None else horizon
        return expected_feature_count(self.mdp, forward_pass(self.mdp, self.policy_, h))

    def decision_function(self, X) -> np.ndarray:
        """Cumulative learned reward ``theta_ . f_zeta`` of each trajectory."""
        check_is_fitted(self, "theta_")
        return np.array([t.feature_count @ self.theta_ for t in check_trajectories(X, self.mdp)])

    def score_samples(self, X) -> np.ndarray:
        """log P(zeta | theta_) per trajectory; needs actions."""
        check_is_fitted(self, "theta_")
        V = self.policy_.soft_values
        return np.array(
            [
                trajectory_log_prob(self.mdp, self.theta_, t, V[t.states[0]])
                for t in check_trajectories(X, self.mdp, require_actions=True)
            ]
        )

    def predict_proba(self, states) -> np.ndarray:
        """Action probabilities of the fitted soft policy in ``states``."""
        check_is_fitted(self, "theta_")
        return self.policy_.action_probs[np.asarray(states, dtype=int)]

    def predict(self, states) -> np.ndarray:
        """Most likely action in each of ``states``."""
        return np.argmax(self.predict_proba(states), axis=-1)

    def score(self, X, y=None) -> float:
        """Negative distance between the demonstrations' mean feature count and the policy's.

        Only trajectories labeled 1 count when ``y`` is given.
        """
        trajs = check_trajectories(X, self.mdp)
        expert, _ = split_labeled(trajs, check_labels(y, len(trajs)))
        target = np.mean([t.feature_count for t in expert], axis=0)
        return -float(np.linalg.norm(target - self.expected_feature_count()))


class MaxEntIRL(_IrlBase):
    """Maximum-entropy IRL by projected gradient ascent on the log-likelihood.

    Unlabeled trajectories (``y == -1``) are ignored.
    """

    def fit(self, X, y=None):
        mdp = check_mdp(self.mdp)
        trajs = check_trajectories(X, mdp)
        expert, _ = split_labeled(trajs, check_labels(y, len(trajs)))
        return self._finish(*run_maxent(mdp, expert, self._config()))


class MESSI(_IrlBase):
    """MaxEnt IRL with a pairwise penalty that ties the rewards of similar trajectories.

    ``similarity`` names a kernel (``"rbf"``, ``"unsquared"``,
    ``"turn_count"``) or is a callable on two trajectories;
    ``similarity_params`` holds its keyword arguments.
    """

    def __init__(
        self,
        mdp,
        lambda0=0.05,
        similarity="rbf",
        similarity_params=None,
        iterations=100,
        theta_max=500.0,
        step_size=1.0,
        horizon=None,
        random_state=0,
        tol=DEFAULT_TOL,
        max_sweeps=DEFAULT_MAX_SWEEPS,
    ):
        super().__init__(
            mdp,
            iterations=iterations,
            theta_max=theta_max,
            step_size=step_size,
            horizon=horizon,
            random_state=random_state,
            tol=tol,
            max_sweeps=max_sweeps,
        )
        self.lambda0 = lambda0
        self.similarity = similarity
        self.similarity_params = similarity_params

    def _training_set(self, X, y, require_actions=False):
        mdp = check_mdp(self.mdp)
        trajs = check_trajectories(X, mdp, require_actions=require_actions)
        expert, unlabeled = split_labeled(trajs, check_labels(y, len(trajs)))
        ts = TrainingSet.build(expert, unlabeled, self.similarity, **(self.similarity_params or {}))
        return mdp, ts

    def fit(self, X, y=None):
        mdp, ts = self._training_set(X, y)
        self.training_set_ = ts
        return self._finish(*run_messi(mdp, ts, self._config(self.lambda0)))


class EMMaxEnt(_IrlBase):
    """EM-style semi-supervised MaxEnt baseline.

    Every round reweights all trajectories by their likelihood under the
    current reward and takes ``eta`` MaxEnt steps toward the weighted mean
    feature count. Trajectories need their actions.
    """

    def __init__(
        self,
        mdp,
        eta=10,
        iterations=100,
        theta_max=500.0,
        step_size=1.0,
        horizon=None,
        random_state=0,
        tol=DEFAULT_TOL,
        max_sweeps=DEFAULT_MAX_SWEEPS,
    ):
        super().__init__(
            mdp,
            iterations=iterations,
            theta_max=theta_max,
            step_size=step_size,
            horizon=horizon,
            random_state=random_state,
            tol=tol,
            max_sweeps=max_sweeps,
        )
        self.eta = eta

    def fit(self, X, y=None):
        mdp = check_mdp(self.mdp)
        trajs = check_trajectories(X, mdp, require_actions=True)
        expert, unlabeled = split_labeled(trajs, check_labels(y, len(trajs)))
        ts = TrainingSet.from_matrix(expert, unlabeled, np.eye(len(trajs)))
        return self._finish(*em_maxent(mdp, ts, self._config(), eta=self.eta))
