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
"""Closed-form occupancy measures, the coverage objective and its oracles.

The objective of a mixture with discounted marginal state distribution d is

    F = sum over goal states of d(s) - d(s)^2 / 2

i.e. the discounted goal mass J_gamma plus the Gini-style diversity term
I = -1/2 sum d(s)^2. F is concave in the mixture weights, and its directional
derivative toward a mixture mu is sum over goals of d[mu](s) (1 - d[base](s)).
"""
import itertools
import logging
import warnings
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Union

import numpy as np
from scipy import linalg
from scipy.special import entr

from goal_coverage.exceptions import (
    EnumerationTooLargeError,
    InvalidMdpError,
    NumericalConditioningError,
    OracleConvergenceWarning,
)
from goal_coverage.models.mdp import DiscreteMdp, MixtureComponent, PolicyMixture, TabularPolicy, check_policy_shape

logger = logging.getLogger(__name__)

RESIDUAL_TOLERANCE = 1e-8
MAX_ENUMERATION = 10**6
EXACT = "exact"
EMPIRICAL = "empirical"


@dataclass(frozen=True, eq=False)
class StateDistribution:
    """Probability vector over states, exact or estimated"""

    probs: np.ndarray
    kind: str = EXACT

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if (probs < 0).any():
            raise InvalidMdpError("State distribution entries must be non-negative")
        if self.kind == EXACT and abs(probs.sum() - 1.0) > 1e-9:
            raise InvalidMdpError(f"Exact state distribution must sum to 1, got {probs.sum()}")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return self.probs.size


DistributionLike = Union[StateDistribution, np.ndarray]


def _probs(d: DistributionLike) -> np.ndarray:
    return d.probs if isinstance(d, StateDistribution) else np.asarray(d, dtype=float)


@dataclass(frozen=True)
class ObjectiveReport:
    """F split into return and diversity"""

    objective_F: float  # pylint: disable=invalid-name
    return_jgamma: float
    diversity_I: float  # pylint: disable=invalid-name
    per_goal_mass: np.ndarray


@dataclass(frozen=True)
class DiversityMetrics:
    """Evaluation metrics over goal states"""

    partial_entropy: float
    modified_partial_gini: float
    return_jgamma: float


class OracleResult(NamedTuple):
    """Optimal mixture and its objective value"""

    mixture: PolicyMixture
    value: float


def policy_transition(mdp: DiscreteMdp, policy: TabularPolicy) -> np.ndarray:
    """State-to-state kernel P_pi[s, s'] = sum_a pi(a|s) P[s, a, s']"""
    check_policy_shape(mdp, policy)
    return np.einsum("sa,sat->st", policy.probs, mdp.transition)


def exact_d(mdp: DiscreteMdp, policy: TabularPolicy) -> StateDistribution:
    """d = (1 - gamma) (I - gamma P_pi^T)^-1 rho0 by a dense direct solve"""
    system = np.eye(mdp.num_states) - mdp.gamma * policy_transition(mdp, policy).T
    rhs = (1.0 - mdp.gamma) * mdp.rho0
    d = linalg.solve(system, rhs)
    residual = np.abs(system @ d - rhs).max()
    logger.debug("Occupancy solve residual %.3e", residual)
    if residual > RESIDUAL_TOLERANCE:
        raise NumericalConditioningError(f"Occupancy solve residual {residual:.3e} exceeds {RESIDUAL_TOLERANCE}")
    return StateDistribution(np.clip(d, 0.0, None), EXACT)


def exact_d_mixture(mdp: DiscreteMdp, mixture: PolicyMixture[TabularPolicy]) -> StateDistribution:
    """Weighted average of component occupancies"""
    probs = sum(float(c.weight) * exact_d(mdp, c.policy).probs for c in mixture.components)
    return StateDistribution(probs, EXACT)


def truncated_d(mdp: DiscreteMdp, policy: Union[TabularPolicy, PolicyMixture], horizon: int) -> np.ndarray:
    """d_H = (1 - gamma) sum_{t < H} gamma^t Pr[s_t = s], by power iteration"""
    if isinstance(policy, PolicyMixture):
        return sum(float(c.weight) * truncated_d(mdp, c.policy, horizon) for c in policy.components)
    kernel = policy_transition(mdp, policy)
    marginal = mdp.rho0.copy()
    total = np.zeros(mdp.num_states)
    for t in range(horizon):
        total += mdp.gamma**t * marginal
        marginal = marginal @ kernel
    return (1.0 - mdp.gamma) * total


def objective_value(goal_mass: np.ndarray) -> float:
    """F from the goal-restricted masses"""
    return float(np.sum(goal_mass - 0.5 * goal_mass**2))


def objective(mdp: DiscreteMdp, d: DistributionLike) -> ObjectiveReport:
    """F = J_gamma + I over the goal states of ``mdp``"""
    goal_mass = _probs(d)[mdp.goal]
    return_jgamma = float(goal_mass.sum())
    diversity = float(-0.5 * np.sum(goal_mass**2))
    return ObjectiveReport(
        objective_F=return_jgamma + diversity,
        return_jgamma=return_jgamma,
        diversity_I=diversity,
        per_goal_mass=goal_mass,
    )


def mixture_gradient_pairing(mdp: DiscreteMdp, candidate: PolicyMixture, base: PolicyMixture) -> float:
    """<candidate, grad F(base)> = sum over goals of d[candidate](s) (1 - d[base](s))"""
    d_candidate = exact_d_mixture(mdp, candidate).probs[mdp.goal]
    d_base = exact_d_mixture(mdp, base).probs[mdp.goal]
    return float(np.sum(d_candidate * (1.0 - d_base)))


def metrics(d: DistributionLike, goal_mask: np.ndarray) -> DiversityMetrics:
    """Partial entropy (natural log), modified partial Gini and goal mass"""
    goal_mass = _probs(d)[np.asarray(goal_mask, dtype=bool)]
    return DiversityMetrics(
        partial_entropy=float(np.sum(entr(goal_mass))),
        modified_partial_gini=float(-np.sum(goal_mass**2)),
        return_jgamma=float(goal_mass.sum()),
    )


def curvature_witness(mdp: DiscreteMdp, m1: PolicyMixture, m: PolicyMixture, lam: float) -> float:
    """2 / lambda^2 [F(pi1) + <pi2 - pi1, grad F(pi1)> - F(pi2)] with pi2 = pi1 + lambda (pi - pi1)"""
    d1 = exact_d_mixture(mdp, m1).probs[mdp.goal]
    d_target = exact_d_mixture(mdp, m).probs[mdp.goal]
    d2 = d1 + lam * (d_target - d1)
    linear = float(np.sum((d2 - d1) * (1.0 - d1)))
    return 2.0 / lam**2 * (objective_value(d1) + linear - objective_value(d2))


def optimal_q(mdp: DiscreteMdp, reward: np.ndarray) -> np.ndarray:
    """Exact Q*(s, a) = sum_s' P(s'|s,a) (r(s') + gamma V*(s')) by policy iteration"""
    reward = np.asarray(reward, dtype=float)
    states = np.arange(mdp.num_states)
    actions = np.zeros(mdp.num_states, dtype=int)
    while True:
        kernel = mdp.transition[states, actions]
        values = linalg.solve(np.eye(mdp.num_states) - mdp.gamma * kernel, kernel @ reward)
        q = mdp.transition @ (reward + mdp.gamma * values)
        improved = q.argmax(axis=1)
        keep = q[states, actions] >= q[states, improved] - 1e-12
        improved[keep] = actions[keep]
        if np.array_equal(improved, actions):
            return q
        actions = improved


def deterministic_policies(mdp: DiscreteMdp, max_policies: int = MAX_ENUMERATION) -> Iterator[np.ndarray]:
    """All action assignments, lexicographic"""
    count = mdp.num_actions**mdp.num_states
    if count > max_policies:
        raise EnumerationTooLargeError(
            f"{mdp.num_actions}^{mdp.num_states} = {count} deterministic policies exceed the guard of {max_policies}"
        )
    for actions in itertools.product(range(mdp.num_actions), repeat=mdp.num_states):
        yield np.array(actions, dtype=int)


def _vertex_occupancies(mdp: DiscreteMdp, action_tables: np.ndarray, chunk: int = 4096) -> np.ndarray:
    states = np.arange(mdp.num_states)
    identity = np.eye(mdp.num_states)
    rhs = (1.0 - mdp.gamma) * mdp.rho0
    blocks = []
    for start in range(0, len(action_tables), chunk):
        kernels = mdp.transition[states, action_tables[start : start + chunk]]
        systems = identity - mdp.gamma * np.transpose(kernels, (0, 2, 1))
        blocks.append(np.linalg.solve(systems, np.broadcast_to(rhs, (len(kernels), mdp.num_states))[..., None])[..., 0])
    return np.concatenate(blocks)


def brute_force_optimal_mixture(
    mdp: DiscreteMdp,
    tolerance: float = 1e-8,
    max_policies: int = MAX_ENUMERATION,
    max_iterations: int = 200_000,
) -> OracleResult:
    """Maximise F over mixtures of all deterministic policies.

    Vertices with identical goal occupancy are merged, then pairwise Frank-Wolfe
    with exact line search runs on the simplex of vertex weights until the
    Frank-Wolfe duality gap drops below ``tolerance``.
    """
    action_tables = np.stack(list(deterministic_policies(mdp, max_policies)))
    occupancy = _vertex_occupancies(mdp, action_tables)[:, mdp.goal]
    _, keep = np.unique(np.round(occupancy, 12), axis=0, return_index=True)
    keep = np.sort(keep)
    vertices, tables = occupancy[keep], action_tables[keep]
    logger.debug("Oracle: %s deterministic policies, %s distinct goal occupancies", len(action_tables), len(keep))

    weights = np.zeros(len(vertices))
    weights[int(np.argmax([objective_value(v) for v in vertices]))] = 1.0
    gap = np.inf
    for iteration in range(max_iterations):
        goal_mass = weights @ vertices
        scores = vertices @ (1.0 - goal_mass)
        toward = int(np.argmax(scores))
        gap = float(scores[toward] - weights @ scores)
        if gap < tolerance:
            break
        active = np.flatnonzero(weights > 0)
        away = int(active[np.argmin(scores[active])])
        direction = vertices[toward] - vertices[away]
        step = min((scores[toward] - scores[away]) / float(direction @ direction), weights[away])
        weights[toward] += step
        weights[away] -= step
        if weights[away] < 1e-15:
            weights[away] = 0.0
    else:
        warnings.warn(
            OracleConvergenceWarning(f"Oracle stopped after {max_iterations} iterations with gap {gap:.3e}")
        )
        iteration = max_iterations
    logger.debug("Oracle converged in %s iterations, duality gap %.3e", iteration, gap)

    weights /= weights.sum()
    support = np.flatnonzero(weights > 0)
    mixture = PolicyMixture(
        tuple(
            MixtureComponent(TabularPolicy.deterministic(tables[index], mdp.num_actions), float(weights[index]))
            for index in support
        )
    )
    return OracleResult(mixture=mixture, value=objective_value(weights @ vertices))
