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
"""Models for experiment descriptions and their results"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from goal_coverage.config_provider import ConfigProvider
from goal_coverage.exceptions import ConfigError


def check_gamma(gamma: Any, key: str = "environment.gamma") -> Optional[float]:
    """Discount override in [0, 1), None passes through"""
    if gamma is not None and (isinstance(gamma, bool) or not isinstance(gamma, (int, float)) or not 0 <= gamma < 1):
        raise ConfigError(f"{key} must lie in [0, 1), got {gamma!r}")
    return gamma


@dataclass(frozen=True)
class EnvironmentSpec:
    """Built-in environment name or MDP definition file, plus builder options"""

    name: Optional[str] = None
    path: Optional[Path] = None
    gamma: Optional[float] = None
    options: Dict[str, Any] = field(default_factory=dict)

    @property
    def label(self) -> str:
        """Name used in result tables"""
        return self.name if self.name else self.path.stem

    @classmethod
    def from_provider(cls, provider: ConfigProvider) -> "EnvironmentSpec":
        """Read the [environment] table"""
        environment = provider.section("environment")
        name, path = environment.pop("name", None), environment.pop("path", None)
        gamma = environment.pop("gamma", None)
        if (name is None) == (path is None):
            raise ConfigError("[environment] needs exactly one of name or path")
        if path is not None:
            path = provider.resolve(path)
            if not path.exists():
                raise ConfigError(f"environment.path {path} does not exist")
        return cls(name=name, path=path, gamma=check_gamma(gamma), options=environment)


def _positive_int(value: Any, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"{key} must be a positive integer, got {value!r}")
    return value


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description"""

    environment: EnvironmentSpec
    algorithm: str
    options: Dict[str, Any]
    seeds: Tuple[int, ...]
    output_dir: Path
    workers: int = 1
    eval_trajectories: int = 100
    eval_horizon: int = 50
    document: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_provider(
        cls,
        provider: ConfigProvider,
        seeds: Optional[Sequence[int]] = None,
        output_dir: Optional[Path] = None,
        workers: Optional[int] = None,
    ) -> "ExperimentConfig":
        """Build from a parsed file; explicit arguments override file values"""
        environment = EnvironmentSpec.from_provider(provider)
        options = provider.section("algorithm")
        algorithm = options.pop("name", None)
        if not isinstance(algorithm, str) or not algorithm:
            raise ConfigError("algorithm.name is required")

        seeds = list(seeds) if seeds is not None else provider.get("run.seeds")
        if not isinstance(seeds, list) or not seeds:
            raise ConfigError(f"run.seeds must be a non-empty list, got {seeds!r}")
        if not all(isinstance(seed, int) and not isinstance(seed, bool) and seed >= 0 for seed in seeds):
            raise ConfigError(f"run.seeds must hold non-negative integers, got {seeds!r}")

        output_dir = provider.resolve(output_dir or provider.get("run.output_dir", "results"))
        return cls(
            environment=environment,
            algorithm=algorithm,
            options=options,
            seeds=tuple(seeds),
            output_dir=output_dir,
            workers=_positive_int(workers if workers is not None else provider.get("run.workers", 1), "run.workers"),
            eval_trajectories=_positive_int(
                provider.get("evaluation.n_trajectories", 100), "evaluation.n_trajectories"
            ),
            eval_horizon=_positive_int(provider.get("evaluation.horizon", 50), "evaluation.horizon"),
            document=dict(provider.document),
        )


@dataclass(frozen=True)
class IterationMetrics:
    """Scalar metrics of one mixture"""

    iteration: int
    objective_F: float  # pylint: disable=invalid-name
    return_jgamma: float
    partial_entropy: float
    modified_partial_gini: float
    wall_time: float = 0.0


@dataclass(frozen=True, eq=False)
class MetricsRecord:
    """Everything one seed of one experiment produced"""

    environment: str
    algorithm: str
    seed: int
    iterations: Tuple[IterationMetrics, ...]
    final: IterationMetrics
    evaluation: str
    state_labels: Tuple[str, ...]
    goal: np.ndarray
    exact_d: Optional[np.ndarray]
    empirical_d: np.ndarray
    mean_return: float
    goals_reached: int
    wall_time: float = 0.0
