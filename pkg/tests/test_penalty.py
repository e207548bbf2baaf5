import numpy as np
import pytest

from messi_irl.mdp import MdpModel, Trajectory
from messi_irl.penalty import (
    TrainingSet,
    pairwise_penalty,
    penalty_gradient,
    rbf_similarity,
    similarity_matrix,
    turn_count,
    turn_count_similarity,
    unsquared_distance_similarity,
)

from .conftest import chain_mdp, random_mdp


class FakeTraj:
    """Just enough of a Trajectory for the penalty: a cached feature count."""

    def __init__(self, f, actions=None):
        self.feature_count = np.asarray(f, dtype=float)
        self.actions = None if actions is None else np.asarray(actions)

    @property
    def has_actions(self):
        return self.actions is not None


def make_set(F, S, n_expert=1):
    trajs = [FakeTraj(f) for f in F]
    return TrainingSet.from_matrix(trajs[:n_expert], trajs[n_expert:], S)


def central_diff(fn, theta, h=1e-5):
    g = np.zeros_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        g[i] = (fn(theta + e) - fn(theta - e)) / (2 * h)
    return g


@pytest.fixture
def pair():
    return make_set([[1.0, 0.0], [0.0, 0.0]], np.ones((2, 2)))


class TestPenalty:
    def test_zero_theta(self, pair):
        assert pairwise_penalty(np.zeros(2), pair) == 0.0

    def test_shared_feature_counts(self, rng):
        ts = make_set([[0.3, 0.2]] * 4, rng.random((4, 4)) * 0 + 0.5)
        assert pairwise_penalty(rng.normal(size=2) * 100, ts) == 0.0

    def test_two_trajectories(self, pair):
        assert pairwise_penalty(np.array([2.0, 0.0]), pair) == pytest.approx(2.0)

    def test_non_negative(self, rng):
        for _ in range(50):
            n, d = rng.integers(1, 9), rng.integers(1, 11)
            A = rng.random((n, n))
            ts = make_set(rng.random((n, d)), (A + A.T) / 2)
            assert pairwise_penalty(rng.normal(size=d) * 50, ts) >= 0

    def test_zero_iff_no_gap_on_similar_pairs(self):
        # the only unequal pair has similarity 0
        S = np.array([[1.0, 0.0], [0.0, 1.0]])
        ts = make_set([[1.0, 0.0], [0.0, 1.0]], S)
        assert pairwise_penalty(np.array([5.0, -3.0]), ts) == 0.0

    def test_linear_in_similarity(self, rng):
        A = rng.random((5, 5))
        S = (A + A.T) / 4
        F = rng.random((5, 3))
        theta = rng.normal(size=3)
        a, b = make_set(F, S), make_set(F, 2 * S)
        assert pairwise_penalty(theta, b) == pytest.approx(2 * pairwise_penalty(theta, a), rel=1e-14)
        np.testing.assert_allclose(penalty_gradient(theta, b), 2 * penalty_gradient(theta, a), rtol=1e-14)

    def test_empty_set(self):
        ts = make_set([[1.0]], [[1.0]])
        with pytest.raises(ValueError):
            pairwise_penalty(np.zeros(2), ts)


class TestGradient:
    def test_zero_theta(self, pair):
        np.testing.assert_array_equal(penalty_gradient(np.zeros(2), pair), 0)

    def test_identical_counts(self):
        ts = make_set([[0.2, 0.1]] * 3, np.ones((3, 3)))
        np.testing.assert_array_equal(penalty_gradient(np.array([4.0, 1.0]), ts), 0)

    def test_two_trajectories(self, pair):
        # R(theta) = theta_0^2 / 2 on this set, so dR/dtheta = [theta_0, 0] = [2, 0]
        theta = np.array([2.0, 0.0])
        g = penalty_gradient(theta, pair)
        np.testing.assert_allclose(g, [2.0, 0.0], rtol=1e-12)
        fd = central_diff(lambda t: pairwise_penalty(t, pair), theta)
        assert np.linalg.norm(g - fd) <= 1e-5 * np.linalg.norm(fd)

    def test_finite_differences(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n, d = int(rng.integers(1, 9)), int(rng.integers(1, 11))
            A = rng.random((n, n))
            ts = make_set(rng.random((n, d)), (A + A.T) / 2)
            theta = rng.uniform(-5, 5, d)
            g = penalty_gradient(theta, ts)
            fd = central_diff(lambda t: pairwise_penalty(t, ts), theta)
            assert np.linalg.norm(g - fd) <= 1e-5 * max(np.linalg.norm(fd), 1e-12)


class TestKernels:
    def test_rbf(self):
        assert rbf_similarity([1, 2], [1, 2], 3.0) == 1.0
        assert rbf_similarity([0, 0], [1, 1], 1.0) == pytest.approx(np.exp(-1))
        assert rbf_similarity([0, 0], [np.sqrt(10), 0], 5.0) == pytest.approx(np.exp(-1))
        with pytest.raises(ValueError):
            rbf_similarity([0], [1], 0.0)

    def test_unsquared(self):
        assert unsquared_distance_similarity([3, 4], [3, 4], 10) == 1.0
        assert unsquared_distance_similarity([0, 0], [6, 8], 10) == pytest.approx(np.exp(-1))
        assert unsquared_distance_similarity([0, 0], [3, 4], 10) == pytest.approx(np.exp(-0.5))
        with pytest.raises(ValueError):
            unsquared_distance_similarity([0], [1], -1.0)

    def test_turn_count(self):
        straight = FakeTraj([0], [3, 3, 3])
        one_a, one_b = FakeTraj([0], [3, 3, 0]), FakeTraj([0], [0, 3, 3])
        three = FakeTraj([0], [3, 0, 3, 0])
        assert turn_count(three) == 3
        assert turn_count_similarity(straight, FakeTraj([0], [1, 1])) == 1.0
        assert turn_count_similarity(one_a, one_b) == 1.0
        assert turn_count_similarity(one_a, three) == pytest.approx(np.exp(-2))
        with pytest.raises(ValueError):
            turn_count(FakeTraj([0]))

    @pytest.mark.parametrize("kind,params", [("rbf", {"sigma": 0.1}), ("unsquared", {"scale": 0.5}), ("turn_count", {})])
    def test_matrix_properties(self, rng, kind, params):
        mdp = random_mdp(rng, n_states=4, n_actions=3)
        trajs = [
            Trajectory.from_states(mdp, rng.integers(4, size=6), rng.integers(3, size=5))
            for _ in range(6)
        ]
        S = similarity_matrix(trajs, kind, **params)
        np.testing.assert_array_equal(S, S.T)
        np.testing.assert_array_equal(np.diag(S), 1.0)
        assert np.all((S > 0) & (S <= 1))

    def test_matrix_matches_pairwise_kernel(self, rng):
        mdp = random_mdp(rng, n_states=4)
        trajs = [Trajectory.from_states(mdp, rng.integers(4, size=5)) for _ in range(4)]
        S = similarity_matrix(trajs, "rbf", sigma=0.01)
        assert S[0, 2] == pytest.approx(rbf_similarity(trajs[0].feature_count, trajs[2].feature_count, 0.01))
        C = similarity_matrix(trajs, lambda a, b: 0.5)
        assert np.all(C == 0.5)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            similarity_matrix([], "cosine")


class TestTrainingSet:
    def test_expert_mean(self, rng):
        mdp = chain_mdp()
        ex = [Trajectory.from_states(mdp, [0, 1, 0]), Trajectory.from_states(mdp, [0, 0, 1])]
        un = [Trajectory.from_states(mdp, [1, 1])]
        ts = TrainingSet.build(ex, un, "unsquared", scale=10)
        np.testing.assert_allclose(ts.expert_mean_fc, (ex[0].feature_count + ex[1].feature_count) / 2, atol=1e-12)
        assert len(ts) == 3 and ts.n_expert == 2
        assert ts.feature_counts.shape == (3, 2)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            make_set([[0.0], [1.0]], [[1.0, 0.2], [0.3, 1.0]])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            make_set([[0.0], [1.0]], [[1.0, 1.5], [1.5, 1.0]])

    def test_needs_expert(self):
        with pytest.raises(ValueError):
            TrainingSet.build([], [])
