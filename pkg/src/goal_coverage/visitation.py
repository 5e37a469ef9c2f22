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
"""Empirical visitation, custom rewards and the goal buffer"""
import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from goal_coverage.exact import EMPIRICAL, StateDistribution
from goal_coverage.exceptions import ConfigError, EmptyBatchError, InvalidMdpError
from goal_coverage.models.batch import TrajectoryBatch, TransitionSet

logger = logging.getLogger(__name__)

NEXT_STATE = "next_state"
VISITED_STATE = "visited_state"
CONVENTIONS = (NEXT_STATE, VISITED_STATE)

Cell = Tuple[int, ...]
EpisodeId = Tuple[str, int, int]
RewardFn = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class Discretizer:
    """h_d(s) = round(s * precision), coordinate-wise.

    >>> Discretizer(10).cell([0.14, 0.86])
    (1, 9)
    """

    precision: float

    def __post_init__(self):
        if self.precision <= 0:
            raise ConfigError(f"Discretization precision must be positive, got {self.precision}")

    def cells(self, states: np.ndarray) -> np.ndarray:
        """Integer cell coordinates, trailing axis kept"""
        return np.rint(np.asarray(states, dtype=float) * self.precision).astype(int)

    def cell(self, state) -> Cell:
        """Cell of a single state"""
        return tuple(int(c) for c in self.cells(state))


@dataclass(frozen=True, eq=False)
class VisitationEstimate:
    """Normalised discounted visitation frequencies.

    Discrete estimates index ``d_hat`` by state id; cell estimates align
    ``d_hat`` with the sorted ``cells`` tuple.
    """

    d_hat: np.ndarray
    horizon: int
    num_trajectories: int
    gamma: float
    convention: str = NEXT_STATE
    cells: Optional[Tuple[Cell, ...]] = None

    def __post_init__(self):
        if (self.d_hat < 0).any() or abs(self.d_hat.sum() - 1.0) > 1e-9:
            raise InvalidMdpError("Visitation estimate must be non-negative and sum to 1")
        self.d_hat.setflags(write=False)

    @cached_property
    def _cell_index(self) -> Dict[Cell, int]:
        return {cell: index for index, cell in enumerate(self.cells or ())}

    @property
    def is_cellwise(self) -> bool:
        """Estimate over discretisation cells"""
        return self.cells is not None

    def of_cell(self, cell: Cell) -> float:
        """d_hat of a cell, 0 when never visited"""
        index = self._cell_index.get(tuple(cell))
        return 0.0 if index is None else float(self.d_hat[index])

    def as_distribution(self) -> StateDistribution:
        """Discrete estimate as an empirical StateDistribution"""
        if self.is_cellwise:
            raise InvalidMdpError("Cell estimates have no state indexing")
        return StateDistribution(self.d_hat, EMPIRICAL)


def _visits(batch: TrajectoryBatch, convention: str) -> np.ndarray:
    if convention == NEXT_STATE:
        return batch.states[:, 1:]
    if convention == VISITED_STATE:
        return batch.states[:, :-1]
    raise ConfigError(f"Unknown estimator convention {convention!r}, expected one of {CONVENTIONS}")


def estimate_d(
    batch: TrajectoryBatch,
    gamma: float,
    convention: str = NEXT_STATE,
    num_states: Optional[int] = None,
    discretizer: Optional[Discretizer] = None,
) -> VisitationEstimate:
    """d_hat(s) = (1 - gamma) / (N_T (1 - gamma^H)) sum gamma^(t-1) 1(s'_t = s).

    The ``next_state`` convention counts s'_1..s'_H, ``visited_state``
    counts s_0..s_{H-1} with weight gamma^t. Both normalise to total mass 1.
    Continuous batches need a ``discretizer``.
    """
    if not batch.num_trajectories:
        raise EmptyBatchError("Can not estimate visitation from an empty batch")
    visits = _visits(batch, convention)
    horizon = batch.horizon
    weights = np.broadcast_to(gamma ** np.arange(horizon, dtype=float), visits.shape[:2]).ravel()
    norm = (1.0 - gamma) / (batch.num_trajectories * (1.0 - gamma**horizon))

    cells = None
    if batch.is_continuous:
        if discretizer is None:
            raise ConfigError("Continuous batches need a discretizer")
        flat_cells = discretizer.cells(visits).reshape(-1, visits.shape[-1])
        unique, inverse = np.unique(flat_cells, axis=0, return_inverse=True)
        d_hat = norm * np.bincount(inverse.ravel(), weights=weights, minlength=len(unique))
        cells = tuple(tuple(int(c) for c in row) for row in unique)
    else:
        flat = visits.ravel()
        size = int(flat.max()) + 1 if num_states is None else num_states
        d_hat = norm * np.bincount(flat, weights=weights, minlength=size)
    logger.debug("Estimated visitation over %s entries from %s episodes", d_hat.size, batch.num_trajectories)
    return VisitationEstimate(
        d_hat=d_hat,
        horizon=horizon,
        num_trajectories=batch.num_trajectories,
        gamma=gamma,
        convention=convention,
        cells=cells,
    )


def custom_reward(estimate: VisitationEstimate, goal_mask: np.ndarray) -> np.ndarray:
    """r_hat(s) = 1 - d_hat(s) on goal states, 0 elsewhere"""
    goal_mask = np.asarray(goal_mask, dtype=bool)
    d_hat = np.zeros(goal_mask.size)
    d_hat[: estimate.d_hat.size] = estimate.d_hat[: goal_mask.size]
    return np.where(goal_mask, np.clip(1.0 - d_hat, 0.0, 1.0), 0.0)


def cell_reward(
    estimate: VisitationEstimate, discretizer: Discretizer, goal_test: Callable[[np.ndarray], np.ndarray]
) -> Callable[[np.ndarray], np.ndarray]:
    """Continuous custom reward: 1 - d_hat(h_d(s)) inside goal regions, 0 elsewhere"""

    def reward(states: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=float)
        cells = discretizer.cells(states).reshape(-1, states.shape[-1])
        d_hat = np.array([estimate.of_cell(tuple(row)) for row in cells.tolist()]).reshape(states.shape[:-1])
        return np.where(goal_test(states), np.clip(1.0 - d_hat, 0.0, 1.0), 0.0)

    return reward


def _rewards_for(reward_fn: RewardFn, next_states: np.ndarray) -> np.ndarray:
    if callable(reward_fn):
        return np.asarray(reward_fn(next_states), dtype=float)
    return np.asarray(reward_fn, dtype=float)[next_states]


def relabel(batch: TrajectoryBatch, reward_fn: RewardFn) -> TrajectoryBatch:
    """Replace every transition reward with r(s'); extrinsic rewards are kept"""
    return batch.with_rewards(_rewards_for(reward_fn, batch.next_states))


@dataclass(frozen=True, eq=False)
class _StoredEpisode:
    states: np.ndarray
    actions: np.ndarray
    extrinsic_rewards: np.ndarray


@dataclass(eq=False)
class GoalBuffer:
    """Goal-reaching episodes kept across iterations, FIFO when capped.

    Single writer; stored episodes keep their extrinsic rewards and are
    relabelled on read.
    """

    capacity: Optional[int] = None
    insertions: int = 0
    _episodes: "OrderedDict[EpisodeId, _StoredEpisode]" = field(default_factory=OrderedDict, repr=False)

    def __post_init__(self):
        if self.capacity is not None and self.capacity < 1:
            raise ConfigError(f"Goal buffer capacity must be positive, got {self.capacity}")

    def __len__(self) -> int:
        return len(self._episodes)

    def __contains__(self, episode_id: EpisodeId) -> bool:
        return episode_id in self._episodes

    @property
    def episode_ids(self) -> List[EpisodeId]:
        """Stored ids, oldest first"""
        return list(self._episodes)

    @property
    def num_transitions(self) -> int:
        """Stored transitions"""
        return sum(len(e.extrinsic_rewards) for e in self._episodes.values())

    def add(self, batch: TrajectoryBatch) -> int:
        """Store goal-reaching episodes of ``batch``, return how many were new"""
        added = 0
        reaching = batch.extrinsic_rewards.sum(axis=1) > 0
        for index, episode_id in enumerate(batch.episode_ids):
            if not reaching[index] or episode_id in self._episodes:
                continue
            self._episodes[episode_id] = _StoredEpisode(
                states=batch.states[index],
                actions=batch.actions[index],
                extrinsic_rewards=batch.extrinsic_rewards[index],
            )
            self.insertions += 1
            added += 1
            if self.capacity is not None and len(self._episodes) > self.capacity:
                evicted, _ = self._episodes.popitem(last=False)
                logger.debug("Goal buffer full, evicted episode %s", evicted)
        return added

    def transitions(self, reward_fn: Optional[RewardFn] = None) -> Optional[TransitionSet]:
        """All stored transitions, rewarded by ``reward_fn`` (extrinsic when omitted)"""
        if not self._episodes:
            return None
        episodes = list(self._episodes.values())
        states = np.concatenate([e.states[:-1] for e in episodes])
        next_states = np.concatenate([e.states[1:] for e in episodes])
        actions = np.concatenate([e.actions for e in episodes])
        if reward_fn is None:
            rewards = np.concatenate([e.extrinsic_rewards for e in episodes])
        else:
            rewards = _rewards_for(reward_fn, next_states)
        return TransitionSet(states=states, actions=actions, rewards=rewards, next_states=next_states)


def goal_buffer_update(buffer: GoalBuffer, *batches: TrajectoryBatch) -> GoalBuffer:
    """Add every episode with positive extrinsic return; repeated ids are ignored"""
    for batch in batches:
        added = buffer.add(batch)
        logger.debug("Goal buffer: %s new episodes from %s, %s stored", added, batch.source, len(buffer))
    return buffer
