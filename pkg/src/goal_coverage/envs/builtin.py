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
"""Environment factories behind the built-in names"""
from typing import Any, Callable, Dict, Mapping, Optional

from goal_coverage.envs.discrete import (
    make_branching_mdp,
    make_discounting_conflict_mdp,
    make_dynamics_conflict_mdp,
    make_random_mdp,
)
from goal_coverage.envs.point_mass import DEFAULT_DISCS, GoalDisc, PointMassEnv, make_point_mass_env
from goal_coverage.exceptions import EnvironmentLoadError
from goal_coverage.models.mdp import DiscreteMdp


def _check_options(name: str, options: Mapping[str, Any], allowed: set) -> None:
    unknown = set(options) - allowed
    if unknown:
        raise EnvironmentLoadError(f"Unknown [environment] options for {name}: {sorted(unknown)}")


def _fixed(name: str, build: Callable[..., DiscreteMdp]) -> Callable[[Mapping[str, Any], Optional[float]], DiscreteMdp]:
    def factory(options: Mapping[str, Any], gamma: Optional[float]) -> DiscreteMdp:
        _check_options(name, options, set())
        return build() if gamma is None else build(gamma=gamma)

    return factory


def random_factory(options: Mapping[str, Any], gamma: Optional[float]) -> DiscreteMdp:
    """``random`` with num_states, num_actions, num_goals, branching and seed"""
    _check_options("random", options, {"num_states", "num_actions", "num_goals", "branching", "seed"})
    try:
        return make_random_mdp(
            num_states=int(options.get("num_states", 10)),
            num_actions=int(options.get("num_actions", 2)),
            num_goals=int(options.get("num_goals", 3)),
            branching=int(options.get("branching", 2)),
            seed=int(options.get("seed", 0)),
            gamma=0.9 if gamma is None else gamma,
        )
    except (TypeError, ValueError) as err:
        raise EnvironmentLoadError(f"Invalid random MDP options: {err}") from err


def point_mass_factory(options: Mapping[str, Any], gamma: Optional[float]) -> PointMassEnv:
    """``point_mass`` with goal_discs (tables of center and radius), dt, noise_sigma and seed"""
    _check_options("point_mass", options, {"goal_discs", "dt", "noise_sigma", "seed"})
    try:
        discs = DEFAULT_DISCS
        if "goal_discs" in options:
            discs = tuple(GoalDisc(tuple(d["center"]), float(d["radius"])) for d in options["goal_discs"])
        return make_point_mass_env(
            goal_discs=discs,
            dt=float(options.get("dt", 0.1)),
            noise_sigma=float(options.get("noise_sigma", 0.01)),
            seed=int(options.get("seed", 0)),
            gamma=0.95 if gamma is None else gamma,
        )
    except (KeyError, TypeError, ValueError) as err:
        raise EnvironmentLoadError(f"Invalid point mass options: {err}") from err


BUILTIN_ENVIRONMENTS: Dict[str, Callable[[Mapping[str, Any], Optional[float]], Any]] = {
    "branching": _fixed("branching", make_branching_mdp),
    "discounting_conflict": _fixed("discounting_conflict", make_discounting_conflict_mdp),
    "dynamics_conflict": _fixed("dynamics_conflict", make_dynamics_conflict_mdp),
    "random": random_factory,
    "point_mass": point_mass_factory,
}
