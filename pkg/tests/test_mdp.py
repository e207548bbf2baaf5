import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from messi_irl.mdp import (
    InvalidMdpError,
    InvalidTrajectoryError,
    MdpModel,
    Trajectory,
    feature_count,
    load_mdp,
    mdp_from_dict,
    mdp_to_dict,
    normalize_features,
    sample_trajectory,
    save_mdp,
    trajectory_reward,
)
from messi_irl.soft_dp import SoftPolicy

from .conftest import chain_mdp, random_mdp, self_loop_mdp


def three_state(discount=0.9, raw=((1, 0), (0, 1), (1, 0))):
    P = np.zeros((3, 1, 3))
    P[0, 0, 1] = P[1, 0, 2] = P[2, 0, 2] = 1.0
    return MdpModel(P, raw, [1, 0, 0], discount)


class TestValidation:
    def test_rows_must_sum_to_one(self):
        P = np.full((2, 1, 2), 0.6)
        with pytest.raises(InvalidMdpError):
            MdpModel(P, np.zeros((2, 1)), [0.5, 0.5], 0.9)

    def test_negative_probability(self):
        P = np.array([[[1.5, -0.5]], [[0.0, 1.0]]])
        with pytest.raises(InvalidMdpError):
            MdpModel(P, np.zeros((2, 1)), [0.5, 0.5], 0.9)

    def test_initial_dist(self):
        with pytest.raises(InvalidMdpError):
            MdpModel(np.ones((1, 1, 1)), [[0.0]], [0.9], 0.9)

    @pytest.mark.parametrize("gamma", [0.0, 1.0, -0.1])
    def test_discount_range(self, gamma):
        with pytest.raises(InvalidMdpError):
            MdpModel(np.ones((1, 1, 1)), [[0.0]], [1.0], gamma)

    def test_terminal_must_be_absorbing(self):
        P = np.zeros((2, 1, 2))
        P[:, 0, 0] = 1.0
        with pytest.raises(InvalidMdpError):
            MdpModel(P, np.zeros((2, 1)), [1, 0], 0.9, terminal_states={1})

    def test_arrays_are_read_only(self):
        mdp = self_loop_mdp()
        with pytest.raises(ValueError):
            mdp.features[0, 0] = 3.0


class TestNormalize:
    def test_binary_features(self):
        mdp = normalize_features(three_state())
        np.testing.assert_allclose(np.unique(mdp.features), [0.0, 0.1])

    def test_constant_dimension_maps_to_zero(self):
        mdp = normalize_features(three_state(raw=((5, 1), (5, 0), (5, 1))))
        assert np.all(mdp.features[:, 0] == 0)

    def test_min_max_then_discount(self):
        mdp = normalize_features(three_state(discount=0.5, raw=((2,), (4,), (6,))))
        np.testing.assert_allclose(mdp.features[:, 0], [0.0, 0.25, 0.5])

    def test_applied_once(self):
        once = normalize_features(three_state())
        assert normalize_features(once) is once
        assert once.normalized

    def test_non_finite(self):
        with pytest.raises(InvalidMdpError):
            three_state(raw=((np.nan, 0), (0, 1), (1, 0)))

    def test_terminal_features_zeroed(self):
        P = np.zeros((2, 1, 2))
        P[:, 0, 1] = 1.0
        mdp = normalize_features(MdpModel(P, [[1.0], [7.0]], [1, 0], 0.9, terminal_states={1}))
        assert mdp.features[1, 0] == 0.0


class TestFeatureCount:
    def test_zero_features(self):
        mdp = three_state(raw=((0, 0), (0, 0), (0, 0)))
        np.testing.assert_array_equal(feature_count([0, 1, 2], mdp), [0, 0])

    def test_hand_example(self):
        mdp = normalize_features(three_state())
        np.testing.assert_allclose(feature_count([0, 1, 2], mdp), [0.181, 0.09], atol=1e-12)

    @pytest.mark.parametrize("T", [1, 5, 50, 400])
    def test_geometric_truncation(self, T):
        P = np.zeros((2, 1, 2))
        P[:, 0, 0] = 1.0
        mdp = normalize_features(MdpModel(P, [[1.0], [0.0]], [1, 0], 0.9))
        assert feature_count([0] * T, mdp)[0] == pytest.approx(1 - 0.9**T, abs=1e-12)

    def test_out_of_range(self):
        with pytest.raises(InvalidTrajectoryError):
            feature_count([0, 3], three_state())

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.integers(0, 2), min_size=2, max_size=30),
        st.data(),
    )
    def test_discounted_splice(self, states, data):
        mdp = normalize_features(three_state())
        k = data.draw(st.integers(1, len(states) - 1))
        whole = feature_count(states, mdp)
        spliced = feature_count(states[:k], mdp) + mdp.discount**k * feature_count(states[k:], mdp)
        np.testing.assert_allclose(whole, spliced, atol=1e-12)
        assert np.max(np.abs(whole)) <= 1.0


class TestTrajectoryReward:
    def test_zero_theta(self):
        assert trajectory_reward([0, 0], [0.3, 0.9]) == 0

    def test_basis(self):
        assert trajectory_reward([0, 1], [0.3, 0.9]) == 0.9

    def test_dot(self):
        assert trajectory_reward([2, -1], [0.5, 0.3]) == pytest.approx(0.7)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            trajectory_reward([1, 2, 3], [1, 2])


class TestTrajectory:
    def test_action_length(self):
        mdp = chain_mdp()
        with pytest.raises(InvalidTrajectoryError):
            Trajectory.from_states(mdp, [0, 1, 0], [0])

    def test_empty(self):
        with pytest.raises(InvalidTrajectoryError):
            Trajectory.from_states(chain_mdp(), [])

    def test_cached_feature_count(self, rng):
        mdp = random_mdp(rng, n_states=4)
        states = rng.integers(4, size=12)
        z = Trajectory.from_states(mdp, states)
        np.testing.assert_allclose(z.feature_count, feature_count(states, mdp), atol=1e-12)


class TestSampling:
    def test_self_loop(self):
        mdp = self_loop_mdp()
        pol = SoftPolicy(np.ones((1, 1)), np.zeros(1), np.zeros(1))
        z = sample_trajectory(mdp, pol, 5, 0)
        assert z.states.tolist() == [0] * 5

    def test_deterministic_chain(self):
        mdp = chain_mdp()
        pol = SoftPolicy(np.array([[1.0, 0.0], [1.0, 0.0]]), np.zeros(2), np.zeros(2))
        z = sample_trajectory(mdp, pol, 5, 3)
        assert z.states.tolist() == [0, 1, 0, 1, 0]
        assert z.actions.tolist() == [0, 0, 0, 0]

    def test_seed_reproducible(self, rng):
        mdp = random_mdp(rng, n_states=4, n_actions=3)
        pol = SoftPolicy(np.full((4, 3), 1 / 3), np.zeros(4), np.zeros(2))
        a = sample_trajectory(mdp, pol, 30, 99)
        b = sample_trajectory(mdp, pol, 30, 99)
        np.testing.assert_array_equal(a.states, b.states)
        np.testing.assert_array_equal(a.actions, b.actions)
        assert a.feature_count.tobytes() == b.feature_count.tobytes()

    def test_stops_at_terminal(self):
        P = np.zeros((2, 1, 2))
        P[:, 0, 1] = 1.0
        mdp = MdpModel(P, np.zeros((2, 1)), [1, 0], 0.9, terminal_states={1})
        pol = SoftPolicy(np.ones((2, 1)), np.zeros(2), np.zeros(1))
        assert sample_trajectory(mdp, pol, 10, 0).states.tolist() == [0, 1]

    def test_bad_horizon(self):
        with pytest.raises(ValueError):
            sample_trajectory(self_loop_mdp(), SoftPolicy(np.ones((1, 1)), np.zeros(1), np.zeros(1)), 0, 0)


class TestSerialization:
    def test_roundtrip(self, rng, tmp_path):
        mdp = random_mdp(rng, n_states=4, n_actions=3)
        path = tmp_path / "mdp.json"
        save_mdp(mdp, path)
        back = load_mdp(path)
        np.testing.assert_array_equal(back.transition, mdp.transition)
        np.testing.assert_array_equal(back.features, mdp.features)
        assert back.discount == mdp.discount and back.normalized
        doc = json.loads(path.read_text())
        assert {"n_states", "n_actions", "transition", "features", "initial_dist", "discount", "terminal_states"} <= set(doc)

    def test_loader_validates(self, rng):
        doc = mdp_to_dict(random_mdp(rng))
        doc["transition"][0][0][0] += 0.5
        with pytest.raises(InvalidMdpError):
            mdp_from_dict(doc)

    def test_missing_field(self, rng):
        doc = mdp_to_dict(random_mdp(rng))
        del doc["initial_dist"]
        with pytest.raises(InvalidMdpError):
            mdp_from_dict(doc)
