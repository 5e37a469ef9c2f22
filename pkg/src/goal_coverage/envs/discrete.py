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
"""Built-in discrete MDPs"""
import logging
from typing import Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from goal_coverage.exceptions import EnvironmentLoadError
from goal_coverage.models.mdp import DiscreteMdp

logger = logging.getLogger(__name__)

MAX_REJECTIONS = 1000


def deterministic_mdp(
    num_states: int,
    num_actions: int,
    edges: Mapping[int, Sequence[int]],
    goals: Sequence[int],
    gamma: float,
    name: str,
    start: int = 0,
) -> DiscreteMdp:
    """``edges[s][a]`` is the successor of s under a; states missing from ``edges`` are absorbing"""
    transition = np.zeros((num_states, num_actions, num_states))
    for state in range(num_states):
        successors = edges.get(state, [state] * num_actions)
        for action, successor in enumerate(successors):
            transition[state, action, successor] = 1.0
    goal = np.zeros(num_states, dtype=bool)
    goal[list(goals)] = True
    rho0 = np.zeros(num_states)
    rho0[start] = 1.0
    return DiscreteMdp(transition, goal, gamma, rho0, name=name)


def make_branching_mdp(gamma: float = 0.95) -> DiscreteMdp:
    """Seven-state tree with a critical branching state.

    0 start: a0 -> 1, a1 -> 6 (dead end)
    1 critical: a0 -> 2 (solo goal), a1 -> 3
    3 fork: a0 -> 4 (goal), a1 -> 5 (goal)
    2, 4, 5, 6 absorbing
    """
    return deterministic_mdp(7, 2, {0: (1, 6), 1: (2, 3), 3: (4, 5)}, goals=(2, 4, 5), gamma=gamma, name="branching")


def make_discounting_conflict_mdp(gamma: float = 0.9) -> DiscreteMdp:
    """Chain with absorbing goals 2, 4, 6 at distances 2, 3, 4 from the start"""
    return deterministic_mdp(
        7,
        2,
        {0: (1, 1), 1: (2, 3), 3: (4, 5), 5: (6, 6)},
        goals=(2, 4, 6),
        gamma=gamma,
        name="discounting_conflict",
    )


def make_dynamics_conflict_mdp(gamma: float = 0.999) -> DiscreteMdp:
    """Start picks a loop: 1 <-> 2 (both goals) or 3 -> 4 -> 5 -> 3 (4 is the only non-goal)"""
    return deterministic_mdp(
        6,
        2,
        {0: (1, 3), 1: (2, 2), 2: (1, 1), 3: (4, 4), 4: (5, 5), 5: (3, 3)},
        goals=(1, 2, 3, 5),
        gamma=gamma,
        name="dynamics_conflict",
    )


def reachable_states(mdp: DiscreteMdp) -> np.ndarray:
    """States reachable with positive probability from the support of rho0"""
    adjacency = (mdp.transition.sum(axis=1) > 0).astype(float)
    reached = set()
    for start in np.flatnonzero(mdp.rho0):
        reached.update(breadth_first_order(csr_matrix(adjacency), int(start), return_predecessors=False).tolist())
    return np.array(sorted(reached), dtype=int)


def make_random_mdp(
    num_states: int, num_actions: int, num_goals: int, branching: int, seed: int, gamma: float = 0.9
) -> DiscreteMdp:
    """Dirichlet transitions over ``branching`` random successors, resampled until every state is reachable"""
    if not 1 <= branching <= num_states:
        raise EnvironmentLoadError(f"Branching must lie in [1, {num_states}], got {branching}")
    if not 0 <= num_goals <= num_states:
        raise EnvironmentLoadError(f"Goal count must lie in [0, {num_states}], got {num_goals}")
    rng = np.random.default_rng(seed)
    rho0 = np.zeros(num_states)
    rho0[0] = 1.0
    for attempt in range(1, MAX_REJECTIONS + 1):
        transition = np.zeros((num_states, num_actions, num_states))
        for state in range(num_states):
            for action in range(num_actions):
                successors = rng.choice(num_states, size=branching, replace=False)
                transition[state, action, successors] = rng.dirichlet(np.ones(branching))
        goal = np.zeros(num_states, dtype=bool)
        goal[rng.choice(num_states, size=num_goals, replace=False)] = True
        mdp = DiscreteMdp(transition, goal, gamma, rho0, name=f"random_{num_states}x{num_actions}_seed{seed}")
        if len(reachable_states(mdp)) == num_states:
            logger.debug("Random MDP accepted after %s attempts", attempt)
            return mdp
    raise EnvironmentLoadError(f"No fully reachable MDP after {MAX_REJECTIONS} attempts, seed {seed}")
