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
"""Frank-Wolfe over policy mixtures.

Iteration k samples from the current mixture, turns the estimated goal
visitation into the reward 1 - d_hat on goal states, solves that RL problem
offline and folds the new policy in with weight 2 / (k + 1).
"""
import logging
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Tuple

import numpy as np

from goal_coverage.batch_rl import RbfFeatures, fitted_actor_critic, fqi_tabular, greedy_policy
from goal_coverage.envs.point_mass import PointMassEnv, UniformActionPolicy
from goal_coverage.exact import (
    ObjectiveReport,
    OracleResult,
    brute_force_optimal_mixture,
    exact_d,
    exact_d_mixture,
    objective,
    objective_value,
    optimal_q,
)
from goal_coverage.exceptions import ConfigError
from goal_coverage.exploration import CountBonusQLearner
from goal_coverage.models.batch import TrajectoryBatch, TransitionSet
from goal_coverage.models.mdp import DiscreteMdp, PolicyMixture, TabularPolicy
from goal_coverage.sampling import derive_seed, mixture_update, sample_batch
from goal_coverage.visitation import (
    CONVENTIONS,
    NEXT_STATE,
    Cell,
    Discretizer,
    GoalBuffer,
    VisitationEstimate,
    cell_reward,
    custom_reward,
    estimate_d,
    goal_buffer_update,
    relabel,
)

logger = logging.getLogger(__name__)

NO_EXPLORATION = "none"
RANDOM_EXPLORATION = "random"
COUNT_BONUS_EXPLORATION = "count_bonus"
EXPLORATION_STRATEGIES = (NO_EXPLORATION, RANDOM_EXPLORATION, COUNT_BONUS_EXPLORATION)

BATCH_STREAM = 0
EXPLORATION_STREAM = 1

RewardRule = Callable[[DiscreteMdp, VisitationEstimate], np.ndarray]


@dataclass(frozen=True)
class DdgcConfig:
    """Hyper-parameters shared by the DDGC loops and the mixture baselines"""

    mixture_size: int = 8
    n_trajectories: int = 200
    horizon: int = 30
    n_fqi: int = 50
    gamma: Optional[float] = None
    seed: int = 0
    exploration: str = RANDOM_EXPLORATION
    exploration_batch_size: Optional[int] = None
    estimator: str = NEXT_STATE
    discretization_precision: float = 10.0
    goal_buffer_capacity: Optional[int] = None
    bonus_scale: float = 1.0
    ridge: float = 1e-6
    rbf_grid: int = 7
    rbf_width: float = 0.15
    policy_steps: int = 50
    learning_rate: float = 0.5

    def __post_init__(self):
        for name in ("mixture_size", "n_trajectories", "horizon", "n_fqi"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1, got {getattr(self, name)}")
        if self.gamma is not None and not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in [0, 1), got {self.gamma}")
        if self.exploration not in EXPLORATION_STRATEGIES:
            raise ConfigError(f"exploration must be one of {EXPLORATION_STRATEGIES}, got {self.exploration!r}")
        if self.exploration_batch_size is not None and self.exploration_batch_size < 1:
            raise ConfigError(f"exploration_batch_size must be at least 1, got {self.exploration_batch_size}")
        if self.estimator not in CONVENTIONS:
            raise ConfigError(f"estimator must be one of {CONVENTIONS}, got {self.estimator!r}")
        if self.ridge < 0:
            raise ConfigError(f"ridge must be non-negative, got {self.ridge}")

    @property
    def exploration_episodes(self) -> int:
        """|Gamma_X| in episodes, N_T / 4 unless set"""
        if self.exploration_batch_size is not None:
            return self.exploration_batch_size
        return max(1, self.n_trajectories // 4)

    def discount(self, default: float) -> float:
        """Configured gamma, falling back to the environment's"""
        return default if self.gamma is None else self.gamma


@dataclass(frozen=True, eq=False)
class IterationRecord:
    """What one Frank-Wolfe iteration saw and produced"""

    iteration: int
    d_hat: np.ndarray
    reward: Optional[np.ndarray]
    policy_id: int
    weights: Tuple[Fraction, ...]
    report: Optional[ObjectiveReport] = None
    cells: Optional[Tuple[Cell, ...]] = None
    goal_buffer_size: int = 0
    wall_time: float = 0.0

    def __post_init__(self):
        if abs(float(sum(self.weights)) - 1.0) > 1e-10:
            raise ValueError(f"Iteration {self.iteration} weights sum to {float(sum(self.weights))}")


def exploration_batch(
    mdp: DiscreteMdp, config: DdgcConfig, iteration: int, learner: Optional[CountBonusQLearner] = None
) -> Optional[TrajectoryBatch]:
    """Gamma_X of one iteration: uniform-random episodes, or episodes of a persistent count-bonus learner"""
    if config.exploration == NO_EXPLORATION:
        return None
    seed = derive_seed(config.seed, iteration, EXPLORATION_STREAM)
    source = f"exploration-{iteration}"
    if config.exploration == COUNT_BONUS_EXPLORATION:
        if learner is None:
            raise ConfigError("count_bonus exploration needs a CountBonusQLearner")
        return learner.collect(config.exploration_episodes, seed=seed, source=source)
    uniform = PolicyMixture.single(TabularPolicy.uniform(mdp.num_states, mdp.num_actions))
    return sample_batch(mdp, uniform, config.exploration_episodes, config.horizon, seed=seed, source=source)


def exploration_learner(mdp: DiscreteMdp, config: DdgcConfig) -> Optional[CountBonusQLearner]:
    """Learner kept across iterations when exploring with count bonuses"""
    if config.exploration != COUNT_BONUS_EXPLORATION:
        return None
    return CountBonusQLearner(
        mdp,
        bonus_scale=config.bonus_scale,
        horizon=config.horizon,
        seed=derive_seed(config.seed, 0, EXPLORATION_STREAM),
    )


def ddgc_reward(mdp: DiscreteMdp, estimate: VisitationEstimate) -> np.ndarray:
    """r_hat = 1 - d_hat on goal states"""
    return custom_reward(estimate, mdp.goal)


def run_ddgc_discrete(mdp: DiscreteMdp, config: DdgcConfig) -> Tuple[PolicyMixture, List[IterationRecord]]:
    """Sampled DDGC on a discrete MDP, with the exact objective of every iterate recorded"""
    return run_discrete_mixture_loop(mdp, config, ddgc_reward, label="DDGC")


def run_discrete_mixture_loop(
    mdp: DiscreteMdp, config: DdgcConfig, reward_rule: RewardRule, label: str = "DDGC"
) -> Tuple[PolicyMixture, List[IterationRecord]]:
    """Sample, estimate, reward by ``reward_rule``, solve with FQI and average with weight 2 / (k + 1)"""
    mdp = mdp.with_gamma(config.discount(mdp.gamma))
    shape = (mdp.num_states, mdp.num_actions)
    mixture = PolicyMixture.single(TabularPolicy.uniform(*shape))
    learner = exploration_learner(mdp, config)
    records = []
    for k in range(1, config.mixture_size + 1):
        started = time.perf_counter()
        batch = sample_batch(
            mdp,
            mixture,
            config.n_trajectories,
            config.horizon,
            seed=derive_seed(config.seed, k, BATCH_STREAM),
            source=f"iteration-{k}",
        )
        estimate = estimate_d(batch, mdp.gamma, config.estimator, num_states=mdp.num_states)
        reward = reward_rule(mdp, estimate)
        data = relabel(batch, reward).transitions()
        explored = exploration_batch(mdp, config, k, learner)
        if explored is not None:
            data = TransitionSet.concat(data, relabel(explored, reward).transitions())
        _, policy = fqi_tabular(data, shape, mdp.gamma, config.n_fqi)
        mixture = mixture_update(mixture, policy, k)
        report = objective(mdp, exact_d_mixture(mdp, mixture))
        records.append(
            IterationRecord(
                iteration=k,
                d_hat=estimate.d_hat,
                reward=reward,
                policy_id=k,
                weights=tuple(c.weight for c in mixture.components),
                report=report,
                wall_time=time.perf_counter() - started,
            )
        )
        logger.info("%s iteration %s/%s: F = %.6f", label, k, config.mixture_size, report.objective_F)
    return mixture, records


def run_exact_ddgc(
    mdp: DiscreteMdp,
    mixture_size: int,
    oracle: Optional[OracleResult] = None,
    records: Optional[List[IterationRecord]] = None,
) -> Tuple[PolicyMixture, List[float]]:
    """Frank-Wolfe with exact occupancies and exact linear maximisation; returns F* - F per iterate.

    When ``records`` is given, one record per iteration is appended to it with
    the exact occupancy in place of d_hat.
    """
    if mixture_size < 1:
        raise ConfigError(f"mixture_size must be at least 1, got {mixture_size}")
    oracle = oracle or brute_force_optimal_mixture(mdp)
    mixture = PolicyMixture.single(TabularPolicy.uniform(mdp.num_states, mdp.num_actions))
    occupancy = exact_d_mixture(mdp, mixture).probs
    gaps = []
    for k in range(1, mixture_size + 1):
        started = time.perf_counter()
        reward = np.where(mdp.goal, 1.0 - occupancy, 0.0)
        policy = greedy_policy(optimal_q(mdp, reward))
        mixture = mixture_update(mixture, policy, k)
        lam = 2.0 / (k + 1)
        occupancy = (1.0 - lam) * occupancy + lam * exact_d(mdp, policy).probs
        gaps.append(oracle.value - objective_value(occupancy[mdp.goal]))
        if records is not None:
            records.append(
                IterationRecord(
                    iteration=k,
                    d_hat=occupancy.copy(),
                    reward=reward,
                    policy_id=k,
                    weights=tuple(c.weight for c in mixture.components),
                    report=objective(mdp, occupancy),
                    wall_time=time.perf_counter() - started,
                )
            )
        logger.debug("Exact Frank-Wolfe iteration %s: gap %.3e", k, gaps[-1])
    return mixture, gaps


def run_ddgc_continuous(env: PointMassEnv, config: DdgcConfig) -> Tuple[PolicyMixture, List[IterationRecord]]:
    """Continuous DDGC: exploratory batch, goal buffer, cell-wise visitation and Fitted Actor Critic"""
    if config.exploration == COUNT_BONUS_EXPLORATION:
        raise ConfigError("count_bonus exploration is only available on discrete environments")
    gamma = config.discount(env.gamma)
    features = RbfFeatures(grid_size=config.rbf_grid, width=config.rbf_width)
    discretizer = Discretizer(config.discretization_precision)
    explorer = PolicyMixture.single(UniformActionPolicy())
    mixture = explorer
    buffer = GoalBuffer(capacity=config.goal_buffer_capacity)
    records = []
    for k in range(1, config.mixture_size + 1):
        started = time.perf_counter()
        batch = env.sample_batch(
            mixture,
            config.n_trajectories,
            config.horizon,
            seed=derive_seed(config.seed, k, BATCH_STREAM),
            source=f"iteration-{k}",
        )
        explored = None
        if config.exploration == RANDOM_EXPLORATION:
            explored = env.sample_batch(
                explorer,
                config.exploration_episodes,
                config.horizon,
                seed=derive_seed(config.seed, k, EXPLORATION_STREAM),
                source=f"exploration-{k}",
            )
        estimate = estimate_d(batch, gamma, config.estimator, discretizer=discretizer)
        reward_fn = cell_reward(estimate, discretizer, env.is_goal)
        previous_goals = buffer.transitions(reward_fn)
        goal_buffer_update(buffer, *(b for b in (batch, explored) if b is not None))

        parts = [relabel(batch, reward_fn).transitions(), previous_goals]
        if explored is not None:
            parts.append(relabel(explored, reward_fn).transitions())
        data = TransitionSet.concat(*parts)
        _, policy = fitted_actor_critic(
            data,
            features,
            gamma,
            config.n_fqi,
            ridge=config.ridge,
            policy_steps=config.policy_steps,
            learning_rate=config.learning_rate,
        )
        mixture = mixture_update(mixture, policy, k)
        records.append(
            IterationRecord(
                iteration=k,
                d_hat=estimate.d_hat,
                reward=None,
                policy_id=k,
                weights=tuple(c.weight for c in mixture.components),
                cells=estimate.cells,
                goal_buffer_size=len(buffer),
                wall_time=time.perf_counter() - started,
            )
        )
        logger.info(
            "Continuous DDGC iteration %s/%s: %s transitions, %s goal episodes buffered",
            k,
            config.mixture_size,
            len(data),
            len(buffer),
        )
    return mixture, records
