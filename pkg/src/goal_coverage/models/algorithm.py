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
"""Abstract algorithm"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field, fields
from typing import Any, ClassVar, FrozenSet, List, Mapping

from goal_coverage.ddgc import DdgcConfig, IterationRecord
from goal_coverage.exceptions import ConfigError
from goal_coverage.models.mdp import PolicyMixture

DISCRETE = "discrete"
CONTINUOUS = "continuous"

DDGC_OPTIONS = frozenset(f.name for f in fields(DdgcConfig)) - {"seed", "gamma"}


@dataclass(frozen=True, eq=False)
class AlgorithmResult:
    """Final mixture and, for iterative algorithms, one record per iteration"""

    mixture: PolicyMixture
    records: List[IterationRecord] = field(default_factory=list)


class Algorithm(ABC):
    """
    Abstract algorithm
    """

    name: ClassVar[str]
    kind: ClassVar[str] = DISCRETE
    options: ClassVar[FrozenSet[str]] = frozenset()

    def __init__(self, options: Mapping[str, Any]):
        unknown = set(options) - self.options
        if unknown:
            raise ConfigError(f"Unknown [algorithm] options for {self.name}: {sorted(unknown)}")
        self.config = dict(options)
        self.setup_config()

    @abstractmethod
    def setup_config(self):
        """
        Each algorithm reads its own options.
        Called once from the constructor to validate them and assign attributes

        Raises:
            ConfigError: if config validation fails
        """

    @abstractmethod
    def run(self, env, seed: int) -> AlgorithmResult:
        """
        The main method. Learns on ``env`` with the given seed and returns the final mixture
        """

    def ddgc_config(self, seed: int = 0) -> DdgcConfig:
        """DdgcConfig from the DDGC-shaped options"""
        try:
            return DdgcConfig(seed=seed, **{k: v for k, v in self.config.items() if k in DDGC_OPTIONS})
        except TypeError as err:
            raise ConfigError(f"Invalid [algorithm] options for {self.name}: {err}") from err
