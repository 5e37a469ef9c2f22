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
"""Tabular comparison algorithms: count-bonus Q-learning, the random policy and state marginal matching"""
import logging
from dataclasses import replace
from functools import partial
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import softmax

from goal_coverage.ddgc import DdgcConfig, IterationRecord, run_discrete_mixture_loop
from goal_coverage.exact import ObjectiveReport, exact_d, objective
from goal_coverage.exploration import CountBonusQLearner, CountTable
from goal_coverage.models.mdp import DiscreteMdp, PolicyMixture, TabularPolicy
from goal_coverage.visitation import VisitationEstimate

logger = logging.getLogger(__name__)

SMM_DENSITY_FLOOR = 1e-3

__all__ = [
    "CountBonusQLearner",
    "CountTable",
    "q_learning_count_bonus",
    "random_policy_eval",
    "smm_mixture",
    "smm_reward",
    "smm_target",
]


def q_learning_count_bonus(
    mdp: DiscreteMdp,
    steps: int,
    alpha: float = 0.1,
    bonus_scale: float = 1.0,
    gamma: Optional[float] = None,
    seed: int = 0,
    horizon: int = 30,
) -> TabularPolicy:
    """Greedy policy of the extrinsic Q after ``steps`` steps of count-bonus Q-learning"""
    learner = CountBonusQLearner(mdp, alpha=alpha, bonus_scale=bonus_scale, horizon=horizon, gamma=gamma, seed=seed)
    return learner.learn(steps).policy


def random_policy_eval(mdp: DiscreteMdp) -> Tuple[TabularPolicy, ObjectiveReport]:
    """Uniform policy and its exact objective"""
    policy = TabularPolicy.uniform(mdp.num_states, mdp.num_actions)
    return policy, objective(mdp, exact_d(mdp, policy))


def smm_target(mdp: DiscreteMdp) -> np.ndarray:
    """p*(s) proportional to exp(R(s)), normalised over all states"""
    return softmax(mdp.reward)


def smm_reward(mdp: DiscreteMdp, estimate: VisitationEstimate, floor: float = SMM_DENSITY_FLOOR) -> np.ndarray:
    """log p*(s) - log max(d_hat(s), floor), mapped affinely onto [0, 1]"""
    raw = np.log(smm_target(mdp)) - np.log(np.maximum(estimate.d_hat[: mdp.num_states], floor))
    spread = raw.max() - raw.min()
    if spread <= 0:
        return np.zeros(mdp.num_states)
    return (raw - raw.min()) / spread


def smm_mixture(
    mdp: DiscreteMdp, mixture_size: int, config: DdgcConfig, records: Optional[List[IterationRecord]] = None
) -> PolicyMixture:
    """Frank-Wolfe mixture whose iteration-k reward is the density-matching reward of d_hat_{k-1}"""
    config = replace(config, mixture_size=mixture_size)
    mixture, trace = run_discrete_mixture_loop(mdp, config, partial(smm_reward, floor=SMM_DENSITY_FLOOR), label="SMM")
    if records is not None:
        records.extend(trace)
    return mixture
