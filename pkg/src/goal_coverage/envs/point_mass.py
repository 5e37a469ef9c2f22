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
"""Two-dimensional point mass with absorbing goal discs.

Episodes follow the discrete sampling contract: stream ``(seed, index)`` draws
the component uniform first, then H rows of action uniforms, then H rows of
Gaussian noise.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from goal_coverage.exceptions import ConfigError, EnvironmentLoadError, InvalidMdpError
from goal_coverage.models.batch import TrajectoryBatch
from goal_coverage.models.mdp import PolicyMixture
from goal_coverage.sampling import derive_seed, episode_stream, inverse_cdf

STATE_COORDS = 2
ACTION_COORDS = 2


@dataclass(frozen=True)
class GoalDisc:
    """Goal region {s : |s - center| <= radius}"""

    center: Tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigError(f"Goal disc radius must be positive, got {self.radius}")

    def contains(self, states: np.ndarray) -> np.ndarray:
        """Membership per state"""
        offset = np.asarray(states, dtype=float) - np.asarray(self.center)
        return (offset**2).sum(axis=-1) <= self.radius**2


DEFAULT_DISCS = (
    GoalDisc((0.15, 0.8), 0.12),
    GoalDisc((0.85, 0.8), 0.12),
    GoalDisc((0.5, 0.15), 0.12),
)


@dataclass(frozen=True)
class UniformActionPolicy:
    """Actions uniform on the box [-1, 1]^2"""

    def act(self, states: np.ndarray, uniforms: np.ndarray) -> np.ndarray:  # pylint: disable=unused-argument
        """Map the step uniforms onto the action box"""
        return 2.0 * uniforms - 1.0


@dataclass(frozen=True, eq=False)
class PointMassEnv:
    """s' = clip(s + clip(a, -1, 1) dt + noise, 0, 1); states inside a disc never move"""

    goal_discs: Tuple[GoalDisc, ...] = DEFAULT_DISCS
    dt: float = 0.1
    noise_sigma: float = 0.01
    gamma: float = 0.95
    start: Tuple[float, float] = (0.5, 0.5)
    seed: int = 0
    name: str = "point_mass"

    def __post_init__(self):
        if not self.goal_discs:
            raise EnvironmentLoadError("Point mass needs at least one goal disc")
        if self.dt <= 0 or self.noise_sigma < 0:
            raise EnvironmentLoadError("Point mass needs dt > 0 and noise_sigma >= 0")
        if not 0.0 <= self.gamma < 1.0:
            raise InvalidMdpError(f"Discount must lie in [0, 1), got {self.gamma}")
        object.__setattr__(self, "goal_discs", tuple(self.goal_discs))

    @property
    def state_coords(self) -> int:
        """State dimension"""
        return STATE_COORDS

    @property
    def action_coords(self) -> int:
        """Action dimension"""
        return ACTION_COORDS

    @property
    def v_max(self) -> float:
        """Upper bound of the action-value class"""
        return 1.0 / (1.0 - self.gamma)

    def goal_index(self, states: np.ndarray) -> np.ndarray:
        """Index of the disc containing each state, -1 outside all discs"""
        states = np.asarray(states, dtype=float)
        index = np.full(states.shape[:-1], -1, dtype=int)
        for position in reversed(range(len(self.goal_discs))):
            index[self.goal_discs[position].contains(states)] = position
        return index

    def is_goal(self, states: np.ndarray) -> np.ndarray:
        """Goal test"""
        return self.goal_index(states) >= 0

    def reward(self, states: np.ndarray) -> np.ndarray:
        """Extrinsic reward of the entered state"""
        return self.is_goal(states).astype(float)

    def step(self, states: np.ndarray, actions: np.ndarray, noise: Optional[np.ndarray] = None) -> np.ndarray:
        """One vectorised transition; ``noise`` is standard normal and scaled by ``noise_sigma``"""
        states = np.asarray(states, dtype=float)
        moved = states + np.clip(actions, -1.0, 1.0) * self.dt
        if noise is not None:
            moved = moved + self.noise_sigma * noise
        moved = np.clip(moved, 0.0, 1.0)
        return np.where(self.is_goal(states)[..., None], states, moved)

    def sample_batch(
        self, mixture: PolicyMixture, n_trajectories: int, horizon: int, seed: int, source: str = "mixture"
    ) -> TrajectoryBatch:
        """N_T episodes from the start state, one mixture component per episode"""
        if n_trajectories < 1 or horizon < 1:
            raise InvalidMdpError("Point mass batches need N_T >= 1 and H >= 1")
        base = derive_seed(self.seed, seed)
        component_u = np.empty(n_trajectories)
        action_u = np.empty((n_trajectories, horizon, self.action_coords))
        noise = np.empty((n_trajectories, horizon, self.state_coords))
        for index in range(n_trajectories):
            stream = episode_stream(base, index)
            component_u[index] = stream.random()
            action_u[index] = stream.random((horizon, self.action_coords))
            noise[index] = stream.standard_normal((horizon, self.state_coords))
        components = inverse_cdf(np.broadcast_to(mixture.weights, (n_trajectories, len(mixture))), component_u)

        states = np.empty((n_trajectories, horizon + 1, self.state_coords))
        actions = np.empty((n_trajectories, horizon, self.action_coords))
        states[:, 0] = self.start
        groups = [(np.flatnonzero(components == c), policy) for c, policy in enumerate(mixture.policies)]
        for t in range(horizon):
            for members, policy in groups:
                if members.size:
                    actions[members, t] = policy.act(states[members, t], action_u[members, t])
            states[:, t + 1] = self.step(states[:, t], actions[:, t], noise[:, t])
        rewards = self.reward(states[:, 1:])
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


def make_point_mass_env(
    goal_discs: Sequence[GoalDisc] = DEFAULT_DISCS,
    dt: float = 0.1,
    noise_sigma: float = 0.01,
    seed: int = 0,
    gamma: float = 0.95,
) -> PointMassEnv:
    """Point mass on [0, 1]^2 starting at its centre"""
    return PointMassEnv(goal_discs=tuple(goal_discs), dt=dt, noise_sigma=noise_sigma, gamma=gamma, seed=seed)
