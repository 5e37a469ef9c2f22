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

"""Algorithm and environment registry"""
import logging
import sys
from functools import lru_cache
from typing import Any, Dict, MutableMapping, Type

from pluggy import PluginManager

from goal_coverage import hooks
from goal_coverage.algorithms import (
    ContinuousDdgcAlgorithm,
    CountBonusAlgorithm,
    DdgcAlgorithm,
    ExactDdgcAlgorithm,
    RandomAlgorithm,
    SmmAlgorithm,
)
from goal_coverage.envs.builtin import BUILTIN_ENVIRONMENTS
from goal_coverage.envs.mdp_file import load_mdp
from goal_coverage.exceptions import ConfigError, EnvironmentLoadError
from goal_coverage.hooks import EnvironmentFactory, hookimpl
from goal_coverage.models.algorithm import Algorithm
from goal_coverage.models.experiment import EnvironmentSpec

logger = logging.getLogger(__name__)

AlgorithmsMapping = MutableMapping[str, Type[Algorithm]]
EnvironmentsMapping = MutableMapping[str, EnvironmentFactory]


@hookimpl
def goal_coverage_register_algorithms(algorithms: AlgorithmsMapping) -> None:
    """Register built-in algorithms"""
    for algorithm in (
        DdgcAlgorithm,
        ExactDdgcAlgorithm,
        ContinuousDdgcAlgorithm,
        CountBonusAlgorithm,
        RandomAlgorithm,
        SmmAlgorithm,
    ):
        algorithms[algorithm.name] = algorithm


@hookimpl
def goal_coverage_register_environments(environments: EnvironmentsMapping) -> None:
    """Register built-in environments"""
    environments.update(BUILTIN_ENVIRONMENTS)


@lru_cache(maxsize=None)
def plugin_manager() -> PluginManager:
    """Plugin manager with the built-ins and every installed ``goal_coverage`` entry point"""
    manager = PluginManager(hooks.PROJECT_NAME)
    manager.add_hookspecs(hooks)
    manager.register(sys.modules[__name__], name="builtin")
    loaded = manager.load_setuptools_entrypoints(hooks.PROJECT_NAME)
    if loaded:
        logger.debug("Loaded %s external goal_coverage plugins", loaded)
    return manager


def registered_algorithms(manager: PluginManager = None) -> Dict[str, Type[Algorithm]]:
    """Name -> algorithm class"""
    algorithms: AlgorithmsMapping = {}
    (manager or plugin_manager()).hook.goal_coverage_register_algorithms(algorithms=algorithms)
    return dict(algorithms)


def registered_environments(manager: PluginManager = None) -> Dict[str, EnvironmentFactory]:
    """Name -> environment factory"""
    environments: EnvironmentsMapping = {}
    (manager or plugin_manager()).hook.goal_coverage_register_environments(environments=environments)
    return dict(environments)


def create_algorithm(name: str, options: Dict[str, Any], manager: PluginManager = None) -> Algorithm:
    """Instantiate a registered algorithm, validating its options"""
    algorithms = registered_algorithms(manager)
    if name not in algorithms:
        raise ConfigError(f"Unexpected algorithm {name!r}, registered ones: {sorted(algorithms)}")
    return algorithms[name](options)


def build_environment(spec: EnvironmentSpec, manager: PluginManager = None) -> Any:
    """Environment from a built-in name or an MDP definition file"""
    if spec.path is not None:
        if spec.options:
            raise EnvironmentLoadError(f"MDP files take no builder options, got {sorted(spec.options)}")
        mdp = load_mdp(spec.path)
        return mdp if spec.gamma is None else mdp.with_gamma(spec.gamma)
    environments = registered_environments(manager)
    if spec.name not in environments:
        raise EnvironmentLoadError(f"Unexpected environment {spec.name!r}, registered ones: {sorted(environments)}")
    return environments[spec.name](spec.options, spec.gamma)
