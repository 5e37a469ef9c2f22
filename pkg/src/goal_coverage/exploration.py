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
"""Online Q-learning with a count-based exploration bonus"""
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from goal_coverage.exceptions import ConfigError
from goal_coverage.models.batch import TrajectoryBatch
from goal_coverage.models.mdp import DiscreteMdp, TabularPolicy

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class CountTable:
    """Visit counts N(s); only ever incremented"""

    num_states: int
    counts: np.ndarray = field(init=False)

    def __post_init__(self):
        self.counts = np.zeros(self.num_states, dtype=np.int64)

    def __getitem__(self, state: int) -> int:
        return int(self.counts[state])

    @property
    def total(self) -> int:
        """Sum of all counts"""
        return int(self.counts.sum())

    def update(self, state: int) -> int:
        """Count one visit, return the new count"""
        self.counts[state] += 1
        return int(self.counts[state])

    def bonus(self, state: int, scale: float) -> float:
        """scale / sqrt(max(1, N(s)))"""
        return scale / np.sqrt(max(1, self.counts[state]))


class CountBonusQLearner:
    """Epsilon-greedy learner on r + bonus, with an extrinsic Q learned off-policy from the same steps.

    Episodes restart from rho0 every ``horizon`` steps.
    """

    def __init__(
        self,
        mdp: DiscreteMdp,
        alpha: float = 0.1,
        bonus_scale: float = 1.0,
        horizon: int = 30,
        gamma: Optional[float] = None,
        epsilon_start: float = 1.0,
        epsilon_end: float = 0.05,
        seed: int = 0,
    ):
        if not 0 < alpha <= 1:
            raise ConfigError(f"alpha must lie in (0, 1], got {alpha}")
        if horizon < 1:
            raise ConfigError(f"horizon must be at least 1, got {horizon}")
        if bonus_scale < 0:
            raise ConfigError(f"bonus_scale must be non-negative, got {bonus_scale}")
        self.mdp = mdp
        self.alpha = alpha
        self.bonus_scale = bonus_scale
        self.horizon = horizon
        self.gamma = mdp.gamma if gamma is None else gamma
        self.epsilon_start = epsilon_start
        self.epsilon_end = epsilon_end
        self.rng = np.random.default_rng(seed)
        self.q_behaviour = np.zeros((mdp.num_states, mdp.num_actions))
        self.q_extrinsic = np.zeros((mdp.num_states, mdp.num_actions))
        self.counts = CountTable(mdp.num_states)
        self.steps = 0

    @property
    def policy(self) -> TabularPolicy:
        """Greedy policy of the extrinsic Q, lowest action on ties"""
        return TabularPolicy.deterministic(self.q_extrinsic.argmax(axis=1), self.mdp.num_actions)

    def reset(self) -> int:
        """Draw a start state"""
        return int(self.rng.choice(self.mdp.num_states, p=self.mdp.rho0))

    def step(self, state: int, epsilon: float):
        """Act, observe and update both Q tables; returns (action, reward, next state)"""
        if self.rng.random() < epsilon:
            action = int(self.rng.integers(self.mdp.num_actions))
        else:
            action = int(self.q_behaviour[state].argmax())
        next_state = int(self.rng.choice(self.mdp.num_states, p=self.mdp.transition[state, action]))
        self.counts.update(next_state)
        reward = float(self.mdp.reward[next_state])
        bonus = self.counts.bonus(next_state, self.bonus_scale)
        behaviour_target = reward + bonus + self.gamma * self.q_behaviour[next_state].max()
        extrinsic_target = reward + self.gamma * self.q_extrinsic[next_state].max()
        self.q_behaviour[state, action] += self.alpha * (behaviour_target - self.q_behaviour[state, action])
        self.q_extrinsic[state, action] += self.alpha * (extrinsic_target - self.q_extrinsic[state, action])
        self.steps += 1
        return action, reward, next_state

    def learn(self, steps: int) -> "CountBonusQLearner":
        """Run ``steps`` steps with epsilon annealed linearly from start to end"""
        state = None
        for step in range(steps):
            if step % self.horizon == 0:
                state = self.reset()
            epsilon = self.epsilon_start + (self.epsilon_end - self.epsilon_start) * step / max(1, steps - 1)
            _, _, state = self.step(state, epsilon)
        logger.debug("Count-bonus Q-learning: %s steps, %s states visited", steps, int((self.counts.counts > 0).sum()))
        return self

    def collect(self, n_episodes: int, seed: int, source: str = "exploration") -> TrajectoryBatch:
        """Learn online for ``n_episodes`` episodes at the final epsilon and return them as a batch"""
        states = np.empty((n_episodes, self.horizon + 1), dtype=int)
        actions = np.empty((n_episodes, self.horizon), dtype=int)
        rewards = np.empty((n_episodes, self.horizon))
        for episode in range(n_episodes):
            states[episode, 0] = self.reset()
            for t in range(self.horizon):
                actions[episode, t], rewards[episode, t], states[episode, t + 1] = self.step(
                    int(states[episode, t]), self.epsilon_end
                )
        return TrajectoryBatch(
            states=states,
            actions=actions,
            rewards=rewards,
            extrinsic_rewards=rewards.copy(),
            components=np.zeros(n_episodes, dtype=int),
            horizon=self.horizon,
            seed=seed,
            source=source,
        )
