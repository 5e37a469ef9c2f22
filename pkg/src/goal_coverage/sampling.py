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
"""Seeded trajectory sampling and the mixture update rule.

Every episode owns a random stream derived from ``(seed, episode index)`` and
consumes its uniforms in a fixed layout: one for the mixture component, one for
the start state, then an (action, next state) pair per step. Episodes can
therefore be stepped together as arrays and still equal their one-by-one
counterparts.
"""
from fractions import Fraction
from typing import List, Sequence, Tuple

import numpy as np

from goal_coverage.exceptions import InvalidMdpError
from goal_coverage.models.batch import TrajectoryBatch, Transition
from goal_coverage.models.mdp import DiscreteMdp, MixtureComponent, PolicyMixture, TabularPolicy, check_policy_shape

COMPONENT_SLOT = 0
START_SLOT = 1


def episode_stream(seed: int, index: int) -> np.random.Generator:
    """Random stream of one episode"""
    return np.random.default_rng([seed, index])


def derive_seed(seed: int, *keys: int) -> int:
    """Child seed for a named sub-stream of a run.

    >>> derive_seed(7, 1, 2) == derive_seed(7, 1, 2)
    True
    >>> derive_seed(7, 1, 2) == derive_seed(7, 2, 1)
    False
    """
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def episode_uniforms(seed: int, n_trajectories: int, horizon: int) -> np.ndarray:
    """(N_T, 2H + 2) uniforms laid out per episode"""
    return np.stack([episode_stream(seed, index).random(2 * horizon + 2) for index in range(n_trajectories)])


def inverse_cdf(probs: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Draw one index per row of ``probs`` (last axis) from matching uniforms.

    >>> inverse_cdf(np.array([[0.5, 0.5], [0.0, 1.0]]), np.array([0.7, 0.0])).tolist()
    [1, 1]
    """
    cumulative = np.cumsum(probs, axis=-1)
    index = (cumulative <= uniforms[..., None]).sum(axis=-1)
    return np.minimum(index, probs.shape[-1] - 1)


def step_size(k: int) -> Fraction:
    """Frank-Wolfe step 2 / (k + 1), exact.

    >>> step_size(1), step_size(2), step_size(3)
    (Fraction(1, 1), Fraction(2, 3), Fraction(1, 2))
    """
    if k < 1:
        raise InvalidMdpError(f"Iteration index starts at 1, got {k}")
    return Fraction(2, k + 1)


def _rollout(
    mdp: DiscreteMdp, tables: np.ndarray, components: np.ndarray, uniforms: np.ndarray, horizon: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    n_trajectories = uniforms.shape[0]
    states = np.empty((n_trajectories, horizon + 1), dtype=int)
    actions = np.empty((n_trajectories, horizon), dtype=int)
    states[:, 0] = inverse_cdf(np.broadcast_to(mdp.rho0, (n_trajectories, mdp.num_states)), uniforms[:, START_SLOT])
    for t in range(1, horizon + 1):
        current = states[:, t - 1]
        action_probs = tables[components, current]
        actions[:, t - 1] = inverse_cdf(action_probs, uniforms[:, 2 * t])
        next_probs = mdp.transition[current, actions[:, t - 1]]
        states[:, t] = inverse_cdf(next_probs, uniforms[:, 2 * t + 1])
    rewards = mdp.reward[states[:, 1:]]
    return states, actions, rewards


def sample_episode(
    mdp: DiscreteMdp, policy: TabularPolicy, horizon: int, seed: int, index: int = 0
) -> List[Transition]:
    """Roll one H-step episode out of ``policy``; the reward of a step is R(s')"""
    if horizon < 1:
        raise InvalidMdpError(f"Horizon must be positive, got {horizon}")
    check_policy_shape(mdp, policy)
    uniforms = episode_stream(seed, index).random(2 * horizon + 2)[None, :]
    states, actions, rewards = _rollout(mdp, policy.probs[None], np.zeros(1, dtype=int), uniforms, horizon)
    return [
        Transition(int(states[0, t - 1]), int(actions[0, t - 1]), float(rewards[0, t - 1]), int(states[0, t]), t)
        for t in range(1, horizon + 1)
    ]


def sample_batch(
    mdp: DiscreteMdp,
    mixture: PolicyMixture[TabularPolicy],
    n_trajectories: int,
    horizon: int,
    seed: int,
    source: str = "mixture",
) -> TrajectoryBatch:
    """N_T episodes, each following one component drawn i.i.d. by weight"""
    if n_trajectories < 1:
        raise InvalidMdpError(f"Number of trajectories must be positive, got {n_trajectories}")
    if horizon < 1:
        raise InvalidMdpError(f"Horizon must be positive, got {horizon}")
    for position, policy in enumerate(mixture.policies):
        check_policy_shape(mdp, policy, name=f"component {position}")
    uniforms = episode_uniforms(seed, n_trajectories, horizon)
    weights = np.broadcast_to(mixture.weights, (n_trajectories, len(mixture)))
    components = inverse_cdf(weights, uniforms[:, COMPONENT_SLOT])
    tables = np.stack([policy.probs for policy in mixture.policies])
    states, actions, rewards = _rollout(mdp, tables, components, uniforms, horizon)
    return TrajectoryBatch(
        states=states,
        actions=actions,
        rewards=rewards,
        extrinsic_rewards=rewards.copy(),
        components=components,
        horizon=horizon,
        seed=seed,
        source=source,
    )


def mixture_update(old: PolicyMixture, new_policy, k: int) -> PolicyMixture:
    """pi_k = (1 - lambda_k) pi_{k-1} + lambda_k mu_k with lambda_k = 2 / (k + 1).

    Components whose weight drops to exactly zero are removed.
    """
    lam = step_size(k)
    kept = tuple(
        MixtureComponent(c.policy, c.weight * (1 - lam)) for c in old.components if c.weight * (1 - lam) != 0
    )
    return PolicyMixture(kept + (MixtureComponent(new_policy, lam),))


def mixture_weight(k: int, mixture_size: int) -> Fraction:
    """Weight of the iteration-k policy after ``mixture_size`` updates.

    >>> mixture_weight(1, 3), mixture_weight(2, 3), mixture_weight(3, 3)
    (Fraction(1, 6), Fraction(1, 3), Fraction(1, 2))
    """
    return Fraction(2 * k, mixture_size * (mixture_size + 1))


def component_counts(batch: TrajectoryBatch, mixture: Sequence) -> np.ndarray:
    """How many episodes each component generated"""
    return np.bincount(batch.components, minlength=len(mixture))
