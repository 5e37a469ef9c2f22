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
"""Models for MDPs, policies and policy mixtures"""
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real
from typing import Any, Generic, Iterator, Optional, Sequence, Tuple, TypeVar

import numpy as np

from goal_coverage.exceptions import InvalidMdpError

STOCHASTIC_ATOL = 1e-12
MIXTURE_ATOL = 1e-10

PolicyT = TypeVar("PolicyT")


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class DiscreteMdp:
    """Finite MDP with a state-only goal reward R(s) = 1{s in S+}"""

    transition: np.ndarray
    goal: np.ndarray
    gamma: float
    rho0: np.ndarray
    name: str = "mdp"

    def __post_init__(self):
        transition = np.array(self.transition, dtype=float)
        goal = np.array(self.goal, dtype=bool)
        rho0 = np.array(self.rho0, dtype=float)
        if transition.ndim != 3 or transition.shape[0] != transition.shape[2]:
            raise InvalidMdpError(f"Transition tensor must have shape (S, A, S), got {transition.shape}")
        num_states, num_actions, _ = transition.shape
        if not num_states or not num_actions:
            raise InvalidMdpError("MDP needs at least one state and one action")
        if (transition < 0).any():
            raise InvalidMdpError("Transition probabilities must be non-negative")
        row_error = np.abs(transition.sum(axis=2) - 1.0).max()
        if row_error > STOCHASTIC_ATOL:
            raise InvalidMdpError(f"Transition rows must sum to 1, max deviation is {row_error:.3e}")
        if goal.shape != (num_states,):
            raise InvalidMdpError(f"Goal mask must have shape ({num_states},), got {goal.shape}")
        if rho0.shape != (num_states,) or (rho0 < 0).any() or abs(rho0.sum() - 1.0) > STOCHASTIC_ATOL:
            raise InvalidMdpError("Start distribution rho0 must be a probability vector over states")
        if not 0.0 <= self.gamma < 1.0:
            raise InvalidMdpError(f"Discount must lie in [0, 1), got {self.gamma}")
        object.__setattr__(self, "transition", _frozen(transition))
        object.__setattr__(self, "goal", _frozen(goal))
        object.__setattr__(self, "rho0", _frozen(rho0))
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def num_states(self) -> int:
        """|S|"""
        return self.transition.shape[0]

    @property
    def num_actions(self) -> int:
        """|A|"""
        return self.transition.shape[1]

    @property
    def reward(self) -> np.ndarray:
        """Extrinsic state reward R(s)"""
        return self.goal.astype(float)

    @property
    def goal_states(self) -> np.ndarray:
        """Indices of S+"""
        return np.flatnonzero(self.goal)

    @property
    def v_max(self) -> float:
        """Upper bound of the action-value class"""
        return 1.0 / (1.0 - self.gamma)

    def with_gamma(self, gamma: float) -> "DiscreteMdp":
        """Same dynamics under another discount"""
        return DiscreteMdp(self.transition, self.goal, gamma, self.rho0, name=self.name)


@dataclass(frozen=True, eq=False)
class TabularPolicy:
    """Stochastic action table pi(a|s)"""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 2:
            raise InvalidMdpError(f"Policy table must have shape (S, A), got {probs.shape}")
        if (probs < 0).any() or np.abs(probs.sum(axis=1) - 1.0).max() > STOCHASTIC_ATOL:
            raise InvalidMdpError("Every policy row must be a probability vector")
        object.__setattr__(self, "probs", _frozen(probs))

    @classmethod
    def uniform(cls, num_states: int, num_actions: int) -> "TabularPolicy":
        """Uniform-random policy"""
        return cls(np.full((num_states, num_actions), 1.0 / num_actions))

    @classmethod
    def deterministic(cls, actions: Sequence[int], num_actions: int) -> "TabularPolicy":
        """Indicator rows from one action per state"""
        actions = np.asarray(actions, dtype=int)
        probs = np.zeros((actions.size, num_actions))
        probs[np.arange(actions.size), actions] = 1.0
        return cls(probs)

    @property
    def num_states(self) -> int:
        """Rows"""
        return self.probs.shape[0]

    @property
    def num_actions(self) -> int:
        """Columns"""
        return self.probs.shape[1]

    @property
    def is_deterministic(self) -> bool:
        """Every row is an indicator"""
        return bool(np.all(self.probs.max(axis=1) == 1.0))

    @property
    def actions(self) -> np.ndarray:
        """Most probable action per state, lowest id on ties"""
        return self.probs.argmax(axis=1)

    def __eq__(self, other: Any) -> bool:
        return isinstance(other, TabularPolicy) and np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash(self.probs.tobytes())


@dataclass(frozen=True)
class MixtureComponent(Generic[PolicyT]):
    """One policy of a mixture together with its weight"""

    policy: PolicyT
    weight: Real


@dataclass(frozen=True)
class PolicyMixture(Generic[PolicyT]):
    """Finite distribution over policies, followed one policy per episode"""

    components: Tuple[MixtureComponent, ...] = field(default_factory=tuple)

    def __post_init__(self):
        components = tuple(self.components)
        if not components:
            raise InvalidMdpError("Mixture needs at least one component")
        weights = np.array([float(c.weight) for c in components])
        if (weights < 0).any() or abs(weights.sum() - 1.0) > MIXTURE_ATOL:
            raise InvalidMdpError(f"Mixture weights must be non-negative and sum to 1, got {weights.tolist()}")
        object.__setattr__(self, "components", components)

    @classmethod
    def single(cls, policy: PolicyT) -> "PolicyMixture[PolicyT]":
        """Point-mass mixture"""
        return cls((MixtureComponent(policy, Fraction(1)),))

    @classmethod
    def from_pairs(cls, pairs: Sequence[Tuple[PolicyT, Real]]) -> "PolicyMixture[PolicyT]":
        """Build from (policy, weight) pairs"""
        return cls(tuple(MixtureComponent(policy, weight) for policy, weight in pairs))

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self) -> Iterator[MixtureComponent]:
        return iter(self.components)

    @property
    def policies(self) -> Tuple[PolicyT, ...]:
        """Component policies in insertion order"""
        return tuple(c.policy for c in self.components)

    @property
    def weights(self) -> np.ndarray:
        """Component weights as floats"""
        return np.array([float(c.weight) for c in self.components])

    def blend(self, other: "PolicyMixture[PolicyT]", alpha: Real) -> "PolicyMixture[PolicyT]":
        """alpha * self + (1 - alpha) * other, components concatenated"""
        if not 0 <= alpha <= 1:
            raise InvalidMdpError(f"Blend coefficient must lie in [0, 1], got {alpha}")
        return PolicyMixture(
            tuple(MixtureComponent(c.policy, c.weight * alpha) for c in self.components)
            + tuple(MixtureComponent(c.policy, c.weight * (1 - alpha)) for c in other.components)
        )


def check_policy_shape(mdp: DiscreteMdp, policy: TabularPolicy, name: Optional[str] = None) -> None:
    """Policy table must match the MDP"""
    if policy.probs.shape != (mdp.num_states, mdp.num_actions):
        label = name or "policy"
        raise InvalidMdpError(
            f"{label} has shape {policy.probs.shape}, MDP expects ({mdp.num_states}, {mdp.num_actions})"
        )
