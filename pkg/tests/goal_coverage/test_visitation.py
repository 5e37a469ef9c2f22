# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Tests of the visitation estimator, custom rewards and the goal buffer"""
import allure
import numpy as np
import pytest

from goal_coverage.exact import truncated_d
from goal_coverage.exceptions import ConfigError, EmptyBatchError, InvalidMdpError
from goal_coverage.models.batch import TrajectoryBatch
from goal_coverage.models.mdp import PolicyMixture, TabularPolicy
from goal_coverage.sampling import sample_batch
from goal_coverage.visitation import (
    VISITED_STATE,
    Discretizer,
    GoalBuffer,
    VisitationEstimate,
    cell_reward,
    custom_reward,
    estimate_d,
    goal_buffer_update,
    relabel,
)

from .common import attach_array


def _batch(states, rewards=None, seed: int = 0, source: str = "test") -> TrajectoryBatch:
    """Batch from explicit state paths, one action, rewards default to zero"""
    states = np.asarray(states, dtype=int if np.asarray(states).ndim == 2 else float)
    n_episodes, horizon = states.shape[0], states.shape[1] - 1
    actions = np.zeros((n_episodes, horizon, *states.shape[2:]), dtype=states.dtype)
    rewards = np.zeros((n_episodes, horizon)) if rewards is None else np.asarray(rewards, dtype=float)
    return TrajectoryBatch(
        states=states,
        actions=actions,
        rewards=rewards,
        extrinsic_rewards=rewards.copy(),
        components=np.zeros(n_episodes, dtype=int),
        horizon=horizon,
        seed=seed,
        source=source,
    )


def test_estimate_two_step_example():
    """Next states (A, B) at gamma 0.5 give (2/3, 1/3)"""
    estimate = estimate_d(_batch([[0, 0, 1]]), gamma=0.5, num_states=2)
    np.testing.assert_allclose(estimate.d_hat, [2 / 3, 1 / 3], atol=1e-12)
    assert estimate.as_distribution().kind == "empirical"


def test_estimate_single_state():
    """A single absorbing state gets all the mass"""
    estimate = estimate_d(_batch([[0] * 11] * 4), gamma=0.9, num_states=1)
    np.testing.assert_allclose(estimate.d_hat, [1.0])


def test_trajectory_count_cancels():
    """Repeating every episode leaves the estimate unchanged"""
    single = estimate_d(_batch([[0, 1, 2, 2]]), gamma=0.8, num_states=3)
    repeated = estimate_d(_batch([[0, 1, 2, 2]] * 7), gamma=0.8, num_states=3)
    np.testing.assert_allclose(single.d_hat, repeated.d_hat, atol=1e-12)
    assert repeated.num_trajectories == 7


def test_estimate_conventions():
    """next_state counts s'_1..s'_H, visited_state counts s_0..s_{H-1}"""
    batch = _batch([[0, 1, 2]])
    np.testing.assert_allclose(estimate_d(batch, 0.5, num_states=3).d_hat, [0, 2 / 3, 1 / 3], atol=1e-12)
    visited = estimate_d(batch, 0.5, VISITED_STATE, num_states=3)
    np.testing.assert_allclose(visited.d_hat, [2 / 3, 1 / 3, 0], atol=1e-12)
    with pytest.raises(ConfigError):
        estimate_d(batch, 0.5, "every_visit")


def test_estimate_rejects_empty_batch():
    """No episodes, no estimate"""
    empty = _batch(np.zeros((0, 4), dtype=int))
    with pytest.raises(EmptyBatchError):
        estimate_d(empty, 0.9)


def test_estimate_validation():
    """Estimates must be distributions"""
    with pytest.raises(InvalidMdpError):
        VisitationEstimate(d_hat=np.array([0.5, 0.4]), horizon=2, num_trajectories=1, gamma=0.5)


@pytest.mark.parametrize(
    "goal_mask, expected",
    [
        pytest.param([False, True, True], [0.0, 0.7, 1.0], id="visited-and-unvisited-goals"),
        pytest.param([False, False, False], [0.0, 0.0, 0.0], id="no-goals"),
    ],
)
def test_custom_reward(goal_mask, expected):
    """1 - d_hat on goals, 0 elsewhere"""
    estimate = VisitationEstimate(d_hat=np.array([0.7, 0.3, 0.0]), horizon=1, num_trajectories=1, gamma=0.5)
    np.testing.assert_allclose(custom_reward(estimate, np.array(goal_mask)), expected, atol=1e-12)


def test_relabel_keeps_extrinsic(branching):
    """Rewards become r(s'), extrinsic rewards stay"""
    batch = sample_batch(branching, PolicyMixture.single(TabularPolicy.uniform(7, 2)), 20, 5, seed=4)
    reward = np.linspace(0.0, 0.6, 7)
    relabelled = relabel(batch, reward)
    np.testing.assert_array_equal(relabelled.rewards, reward[batch.next_states])
    np.testing.assert_array_equal(relabelled.extrinsic_rewards, batch.extrinsic_rewards)
    np.testing.assert_array_equal(relabelled.states, batch.states)


def test_goal_buffer(branching):
    """Goal-reaching episodes only, no duplicates, FIFO eviction"""
    solo = PolicyMixture.single(TabularPolicy.deterministic([0] * 7, 2))
    dead_end = PolicyMixture.single(TabularPolicy.deterministic([1] * 7, 2))

    with allure.step("Episodes without extrinsic reward are ignored"):
        buffer = goal_buffer_update(GoalBuffer(), sample_batch(branching, dead_end, 5, 4, seed=0))
        assert len(buffer) == 0
        assert buffer.transitions() is None

    with allure.step("A goal-reaching episode adds H transitions"):
        batch = sample_batch(branching, solo, 1, 4, seed=1, source="iteration-1")
        goal_buffer_update(buffer, batch)
        stored = buffer.transitions()
        assert len(stored) == 4
        np.testing.assert_array_equal(stored.next_states, [1, 2, 2, 2])
        np.testing.assert_array_equal(stored.rewards, [0, 1, 1, 1])

    with allure.step("Re-adding the same batch stores nothing new"):
        assert buffer.add(batch) == 0
        assert len(buffer) == 1 and buffer.insertions == 1

    with allure.step("Rewards are relabelled on read"):
        reward = np.arange(7) / 10
        np.testing.assert_allclose(buffer.transitions(reward).rewards, [0.1, 0.2, 0.2, 0.2])

    with allure.step("Capacity keeps the newest episodes"):
        capped = GoalBuffer(capacity=2)
        capped.add(sample_batch(branching, solo, 3, 4, seed=9, source="explore"))
        assert capped.episode_ids == [("explore", 9, 1), ("explore", 9, 2)]
        assert capped.num_transitions == 8

    with pytest.raises(ConfigError):
        GoalBuffer(capacity=0)


def test_discretizer():
    """Rounded cells per coordinate"""
    discretizer = Discretizer(100)
    np.testing.assert_array_equal(discretizer.cells(np.array([[0.5, 0.5], [0.154, 0.806]])), [[50, 50], [15, 81]])
    assert discretizer.cell(np.array([0.0, 1.0])) == (0, 100)
    with pytest.raises(ConfigError):
        Discretizer(0)


def test_cell_estimate():
    """Continuous batches are counted per cell"""
    batch = _batch([[[0.5, 0.5], [0.52, 0.5], [0.61, 0.5]]])
    with pytest.raises(ConfigError):
        estimate_d(batch, 0.5)

    estimate = estimate_d(batch, 0.5, discretizer=Discretizer(10))
    assert estimate.is_cellwise
    assert estimate.cells == ((5, 5), (6, 5))
    assert estimate.of_cell((5, 5)) == pytest.approx(2 / 3)
    assert estimate.of_cell((9, 9)) == 0.0
    with pytest.raises(InvalidMdpError):
        estimate.as_distribution()

    reward = cell_reward(estimate, Discretizer(10), lambda states: states[..., 0] > 0.55)
    np.testing.assert_allclose(reward(np.array([[0.5, 0.5], [0.6, 0.5], [0.9, 0.9]])), [0.0, 2 / 3, 1.0])


@pytest.mark.slow
def test_estimator_concentration(random_mdps):
    """Hoeffding at delta 0.1 with N_T 500 holds for at least 87% of (replication, state) pairs"""
    mdp = random_mdps[7].with_gamma(0.95)
    policy = TabularPolicy.uniform(mdp.num_states, mdp.num_actions)
    horizon, n_trajectories, replications = 90, 500, 200
    target = truncated_d(mdp, policy, horizon) / (1.0 - mdp.gamma**horizon)
    bound = np.sqrt(np.log(2 / 0.1) / (2 * n_trajectories))

    estimates = np.stack(
        [
            estimate_d(
                sample_batch(mdp, PolicyMixture.single(policy), n_trajectories, horizon, seed=seed),
                mdp.gamma,
                VISITED_STATE,
                num_states=mdp.num_states,
            ).d_hat
            for seed in range(replications)
        ]
    )
    deviation = np.abs(estimates - target)
    attach_array(deviation.max(axis=1), "Max deviation per replication")
    assert (deviation > bound).mean() <= 0.13
    with allure.step("Estimator is unbiased for the truncated distribution"):
        np.testing.assert_allclose(estimates.mean(axis=0), target, atol=0.01)
