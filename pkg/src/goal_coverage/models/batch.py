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
"""Models for sampled trajectories"""
from dataclasses import dataclass, replace
from typing import Any, Iterator, List, NamedTuple, Optional, Tuple

import numpy as np

from goal_coverage.exceptions import EmptyBatchError, InvalidMdpError


class Transition(NamedTuple):
    """Single step (s, a, r, s', t) with t in 1..H"""

    s: Any
    a: Any
    r: float
    s_next: Any
    t: int


@dataclass(frozen=True, eq=False)
class TransitionSet:
    """Flat (s, a, r, s') arrays, the view batch RL consumes"""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray

    def __len__(self) -> int:
        return len(self.rewards)

    @classmethod
    def concat(cls, *sets: "TransitionSet") -> "TransitionSet":
        """Union of datasets, order preserved"""
        sets = tuple(s for s in sets if s is not None and len(s))
        if not sets:
            raise EmptyBatchError("Nothing to concatenate")
        return cls(
            states=np.concatenate([s.states for s in sets]),
            actions=np.concatenate([s.actions for s in sets]),
            rewards=np.concatenate([s.rewards for s in sets]),
            next_states=np.concatenate([s.next_states for s in sets]),
        )


@dataclass(frozen=True, eq=False)
class TrajectoryBatch:
    """N_T fixed-horizon episodes stored as arrays.

    ``states`` holds s_0..s_H per episode, so the transition at step t (1-based)
    goes from ``states[:, t - 1]`` to ``states[:, t]``. Continuous batches carry a
    trailing coordinate dimension on ``states`` and ``actions``.
    """

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    extrinsic_rewards: np.ndarray
    components: np.ndarray
    horizon: int
    seed: int
    source: str = "mixture"

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidMdpError(f"Horizon must be positive, got {self.horizon}")
        n_episodes = self.states.shape[0]
        if self.states.shape[1] != self.horizon + 1 or self.actions.shape[:2] != (n_episodes, self.horizon):
            raise InvalidMdpError("Batch arrays do not match the horizon")
        if self.rewards.shape != (n_episodes, self.horizon) or self.extrinsic_rewards.shape != self.rewards.shape:
            raise InvalidMdpError("Reward arrays must have shape (N_T, H)")

    @property
    def num_trajectories(self) -> int:
        """N_T"""
        return self.states.shape[0]

    @property
    def is_continuous(self) -> bool:
        """States carry coordinates"""
        return self.states.ndim == 3

    @property
    def start_states(self) -> np.ndarray:
        """s_0 per episode"""
        return self.states[:, 0]

    @property
    def next_states(self) -> np.ndarray:
        """s'_t for t = 1..H"""
        return self.states[:, 1:]

    @property
    def episode_ids(self) -> List[Tuple[str, int, int]]:
        """Identity of every episode, stable across calls"""
        return [(self.source, self.seed, index) for index in range(self.num_trajectories)]

    def _as_scalar(self, value):
        return tuple(value.tolist()) if isinstance(value, np.ndarray) and value.ndim else value.item()

    def episode(self, index: int) -> List[Transition]:
        """Transitions of one episode"""
        return [
            Transition(
                s=self._as_scalar(self.states[index, t - 1]),
                a=self._as_scalar(self.actions[index, t - 1]),
                r=float(self.rewards[index, t - 1]),
                s_next=self._as_scalar(self.states[index, t]),
                t=t,
            )
            for t in range(1, self.horizon + 1)
        ]

    @property
    def episodes(self) -> Iterator[List[Transition]]:
        """All episodes as transition lists"""
        return (self.episode(index) for index in range(self.num_trajectories))

    def transitions(self, rewards: Optional[np.ndarray] = None) -> TransitionSet:
        """Flatten into the (s, a, r, s') view"""
        rewards = self.rewards if rewards is None else rewards
        lead = self.num_trajectories * self.horizon
        tail = self.states.shape[2:]
        return TransitionSet(
            states=self.states[:, :-1].reshape((lead, *tail)),
            actions=self.actions.reshape((lead, *self.actions.shape[2:])),
            rewards=rewards.reshape(lead),
            next_states=self.states[:, 1:].reshape((lead, *tail)),
        )

    def with_rewards(self, rewards: np.ndarray) -> "TrajectoryBatch":
        """Same episodes, new rewards (extrinsic rewards retained)"""
        rewards = np.asarray(rewards, dtype=float)
        if rewards.shape != self.rewards.shape:
            raise InvalidMdpError(f"Rewards must have shape {self.rewards.shape}, got {rewards.shape}")
        return replace(self, rewards=rewards)
