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
"""Offline RL on fixed batches: tabular FQI and a linear Fitted Actor Critic.

Rewards sit on the entered state, so every backup target is r + gamma * max Q(s').
Unseen state-action pairs keep their initial value 0.
"""
import logging
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from goal_coverage.exceptions import CoverageWarning, EmptyBatchError, InvalidMdpError, SingularRegressionError
from goal_coverage.models.batch import TrajectoryBatch, TransitionSet
from goal_coverage.models.mdp import TabularPolicy

logger = logging.getLogger(__name__)

DEFAULT_RIDGE = 1e-6
BatchLike = Union[TrajectoryBatch, TransitionSet]


def _as_transitions(batch: BatchLike) -> TransitionSet:
    transitions = batch.transitions() if isinstance(batch, TrajectoryBatch) else batch
    if transitions is None or not len(transitions):
        raise EmptyBatchError("Batch RL needs at least one transition")
    return transitions


@dataclass(frozen=True, eq=False)
class QTable:
    """Action values Q[s, a] inside [0, V_max]"""

    values: np.ndarray
    v_max: float

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise InvalidMdpError(f"Q table must have shape (S, A), got {values.shape}")
        if (values < 0).any() or (values > self.v_max).any():
            raise InvalidMdpError(f"Q values must lie in [0, {self.v_max}]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def state_values(self) -> np.ndarray:
        """max_a Q(s, a)"""
        return self.values.max(axis=1)


@dataclass(frozen=True, eq=False)
class EmpiricalModel:
    """Per-(s, a) sample counts, mean reward and next-state frequencies"""

    counts: np.ndarray
    mean_reward: np.ndarray
    next_state_probs: np.ndarray

    @property
    def covered(self) -> np.ndarray:
        """Pairs seen at least once"""
        return self.counts > 0


def empirical_model(batch: BatchLike, num_states: int, num_actions: int) -> EmpiricalModel:
    """Tabulate the averages a tabular Bellman backup needs"""
    transitions = _as_transitions(batch)
    s, a, s_next = transitions.states, transitions.actions, transitions.next_states
    counts = np.zeros((num_states, num_actions))
    reward_sum = np.zeros((num_states, num_actions))
    next_counts = np.zeros((num_states, num_actions, num_states))
    np.add.at(counts, (s, a), 1.0)
    np.add.at(reward_sum, (s, a), transitions.rewards)
    np.add.at(next_counts, (s, a, s_next), 1.0)
    safe = np.maximum(counts, 1.0)
    return EmpiricalModel(counts=counts, mean_reward=reward_sum / safe, next_state_probs=next_counts / safe[..., None])


def fqi_tabular(
    batch: BatchLike, mdp_shape: Tuple[int, int], gamma: float, n_fqi: int
) -> Tuple[QTable, TabularPolicy]:
    """N_FQI sweeps of Q(s, a) <- mean over (s, a) samples of [r + gamma max_a' Q(s', a')]"""
    if n_fqi < 1:
        raise InvalidMdpError(f"N_FQI must be positive, got {n_fqi}")
    num_states, num_actions = mdp_shape
    v_max = 1.0 / (1.0 - gamma)
    model = empirical_model(batch, num_states, num_actions)
    values = np.zeros(mdp_shape)
    for _ in range(n_fqi):
        backup = model.mean_reward + gamma * model.next_state_probs @ values.max(axis=1)
        values = np.where(model.covered, np.clip(backup, 0.0, v_max), values)
    logger.debug("FQI: %s sweeps over %s covered pairs", n_fqi, int(model.covered.sum()))
    q = QTable(values, v_max)
    return q, greedy_policy(q)


def greedy_policy(q: Union[QTable, np.ndarray]) -> TabularPolicy:
    """Deterministic argmax policy, lowest action id on ties"""
    values = q.values if isinstance(q, QTable) else np.asarray(q, dtype=float)
    return TabularPolicy.deterministic(values.argmax(axis=1), values.shape[1])


class Features(ABC):
    """Product features phi(s, a) = psi(s) (x) p(a), flattened"""

    @property
    @abstractmethod
    def state_dim(self) -> int:
        """Length of psi(s)"""

    @property
    @abstractmethod
    def action_dim(self) -> int:
        """Length of p(a)"""

    @abstractmethod
    def state_features(self, states: np.ndarray) -> np.ndarray:
        """psi for a batch of states, shape (n, state_dim)"""

    @abstractmethod
    def action_features(self, actions: np.ndarray) -> np.ndarray:
        """p for a batch of actions, shape (n, action_dim)"""

    @property
    def dim(self) -> int:
        """D"""
        return self.state_dim * self.action_dim

    def joint(self, state_feats: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """phi from precomputed state features"""
        action_feats = self.action_features(actions)
        return (state_feats[:, :, None] * action_feats[:, None, :]).reshape(len(state_feats), self.dim)

    def __call__(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return self.joint(self.state_features(states), actions)


@dataclass(frozen=True)
class OneHotFeatures(Features):
    """Indicator of the (s, a) pair; linear regression on it is tabular averaging"""

    num_states: int
    num_actions: int

    @property
    def state_dim(self) -> int:
        return self.num_states

    @property
    def action_dim(self) -> int:
        return self.num_actions

    def state_features(self, states: np.ndarray) -> np.ndarray:
        return np.eye(self.num_states)[np.asarray(states, dtype=int)]

    def action_features(self, actions: np.ndarray) -> np.ndarray:
        return np.eye(self.num_actions)[np.asarray(actions, dtype=int)]


@dataclass(frozen=True)
class RbfFeatures(Features):
    """Gaussian bumps on a grid over [0, 1]^d times a quadratic polynomial in the action"""

    grid_size: int = 7
    width: float = 0.15
    state_coords: int = 2
    action_coords: int = 2

    @property
    def centers(self) -> np.ndarray:
        """Grid centres, shape (grid_size^d, d)"""
        axis = np.linspace(0.0, 1.0, self.grid_size)
        mesh = np.meshgrid(*([axis] * self.state_coords), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def _monomials(self) -> Tuple[Tuple[int, ...], ...]:
        # index tuples of the action coordinates multiplied in each term
        terms = [()] + [(i,) for i in range(self.action_coords)]
        terms += list(combinations_with_replacement(range(self.action_coords), 2))
        return tuple(terms)

    @property
    def state_dim(self) -> int:
        return self.grid_size**self.state_coords

    @property
    def action_dim(self) -> int:
        return len(self._monomials)

    def state_features(self, states: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=float).reshape(-1, self.state_coords)
        sq_dist = ((states[:, None, :] - self.centers[None, :, :]) ** 2).sum(axis=-1)
        return np.exp(-sq_dist / (2.0 * self.width**2))

    def action_features(self, actions: np.ndarray) -> np.ndarray:
        actions = np.asarray(actions, dtype=float).reshape(-1, self.action_coords)
        return np.stack([np.prod(actions[:, list(term)], axis=1) for term in self._monomials], axis=1)

    def action_jacobian(self, actions: np.ndarray) -> np.ndarray:
        """dp/da, shape (n, action_dim, action_coords)"""
        actions = np.asarray(actions, dtype=float).reshape(-1, self.action_coords)
        jacobian = np.zeros((len(actions), self.action_dim, self.action_coords))
        for row, term in enumerate(self._monomials):
            for position, coord in enumerate(term):
                rest = term[:position] + term[position + 1 :]
                jacobian[:, row, coord] += np.prod(actions[:, list(rest)], axis=1)
        return jacobian


@dataclass(frozen=True, eq=False)
class LinearQ:
    """f(s, a) = phi(s, a) . w, evaluated inside [0, V_max]"""

    features: Features
    weights: np.ndarray
    v_max: float

    def raw(self, state_feats: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Unclipped prediction from precomputed state features"""
        return self.features.joint(state_feats, actions) @ self.weights

    def evaluate(self, state_feats: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Clipped prediction from precomputed state features"""
        return np.clip(self.raw(state_feats, actions), 0.0, self.v_max)

    def __call__(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return self.evaluate(self.features.state_features(states), actions)

    def action_gradient(self, state_feats: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """d f / d a of the unclipped critic, shape (n, action_coords)"""
        coefficients = state_feats @ self.weights.reshape(self.features.state_dim, self.features.action_dim)
        return np.einsum("np,npd->nd", coefficients, self.features.action_jacobian(actions))


@dataclass(frozen=True, eq=False)
class ParametricPolicy:
    """a = tanh(psi(s) theta), always inside the open action box (-1, 1)^d"""

    theta: np.ndarray
    features: RbfFeatures

    @classmethod
    def zero(cls, features: RbfFeatures) -> "ParametricPolicy":
        """Policy that always outputs the zero action"""
        return cls(np.zeros((features.state_dim, features.action_coords)), features)

    def from_state_features(self, state_feats: np.ndarray) -> np.ndarray:
        """Actions from precomputed state features"""
        return np.tanh(state_feats @ self.theta)

    def __call__(self, states: np.ndarray) -> np.ndarray:
        return self.from_state_features(self.features.state_features(states))

    def act(self, states: np.ndarray, uniforms: np.ndarray) -> np.ndarray:  # pylint: disable=unused-argument
        """Deterministic; the per-step uniforms are accepted and ignored"""
        return self(states)


@dataclass(frozen=True, eq=False)
class FiniteGreedyPolicy:
    """Exact per-state maximisation of a critic over a finite action set, lowest index on ties"""

    critic: LinearQ
    candidate_actions: np.ndarray

    def from_state_features(self, state_feats: np.ndarray) -> np.ndarray:
        """Best candidate per state"""
        scores = np.stack(
            [
                self.critic.evaluate(state_feats, np.broadcast_to(action, (len(state_feats),) + np.shape(action)))
                for action in self.candidate_actions
            ],
            axis=1,
        )
        return self.candidate_actions[scores.argmax(axis=1)]

    def __call__(self, states: np.ndarray) -> np.ndarray:
        return self.from_state_features(self.critic.features.state_features(states))

    def as_tabular(self, num_states: int) -> TabularPolicy:
        """Deterministic table over integer states and integer candidate actions"""
        actions = self(np.arange(num_states))
        return TabularPolicy.deterministic(actions, len(self.candidate_actions))


def ridge_regression(design: np.ndarray, targets: np.ndarray, ridge: float) -> np.ndarray:
    """argmin_w |design w - targets|^2 + ridge |w|^2 via the normal equations"""
    gram = design.T @ design + ridge * np.eye(design.shape[1])
    with warnings.catch_warnings():
        warnings.simplefilter("error", linalg.LinAlgWarning)
        try:
            return linalg.solve(gram, design.T @ targets, assume_a="pos")
        except (linalg.LinAlgError, linalg.LinAlgWarning) as err:
            raise SingularRegressionError(f"Critic normal equations are singular with ridge {ridge}: {err}") from err


def _improve(
    critic: LinearQ, policy: ParametricPolicy, state_feats: np.ndarray, steps: int, learning_rate: float
) -> ParametricPolicy:
    theta = policy.theta.copy()
    for _ in range(steps):
        actions = np.tanh(state_feats @ theta)
        slope = critic.action_gradient(state_feats, actions) * (1.0 - actions**2)
        gradient = state_feats.T @ slope / len(state_feats)
        norm = np.linalg.norm(gradient)
        if norm < 1e-12:
            break
        theta += learning_rate * gradient / max(1.0, norm)
    return ParametricPolicy(theta, policy.features)


def fitted_actor_critic(
    batch: BatchLike,
    features: Features,
    gamma: float,
    n_fqi: int,
    ridge: float = DEFAULT_RIDGE,
    candidate_actions: Optional[Sequence] = None,
    initial_policy: Optional[ParametricPolicy] = None,
    policy_steps: int = 50,
    learning_rate: float = 0.5,
) -> Tuple[LinearQ, Union[ParametricPolicy, FiniteGreedyPolicy]]:
    """Alternate a ridge critic fit on r + gamma f_{k-1}(s', pi_{k-1}(s')) with policy improvement.

    With ``candidate_actions`` the policy is the exact greedy maximiser over that
    finite set; otherwise a ``ParametricPolicy`` is improved by gradient ascent
    on the mean critic value over the batch states.
    """
    if n_fqi < 1:
        raise InvalidMdpError(f"N_FQI must be positive, got {n_fqi}")
    transitions = _as_transitions(batch)
    if features.dim > len(transitions):
        warnings.warn(CoverageWarning(f"Feature dimension {features.dim} exceeds {len(transitions)} transitions"))
    v_max = 1.0 / (1.0 - gamma)
    state_feats = features.state_features(transitions.states)
    next_feats = features.state_features(transitions.next_states)
    design = features.joint(state_feats, transitions.actions)

    critic = LinearQ(features, np.zeros(features.dim), v_max)
    if candidate_actions is not None:
        policy = FiniteGreedyPolicy(critic, np.asarray(candidate_actions))
    else:
        policy = initial_policy or ParametricPolicy.zero(features)
    for iteration in range(1, n_fqi + 1):
        targets = transitions.rewards + gamma * critic.evaluate(next_feats, policy.from_state_features(next_feats))
        critic = LinearQ(features, ridge_regression(design, targets, ridge), v_max)
        if candidate_actions is not None:
            policy = FiniteGreedyPolicy(critic, policy.candidate_actions)
        else:
            policy = _improve(critic, policy, state_feats, policy_steps, learning_rate)
        logger.debug("Actor critic iteration %s: mean target %.4f", iteration, float(targets.mean()))
    return critic, policy
