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

"""Plugin hooks"""

from typing import Any, Callable, Mapping, MutableMapping, Optional, Type

import pluggy

from goal_coverage.models.algorithm import Algorithm

PROJECT_NAME = "goal_coverage"

hookspec = pluggy.HookspecMarker(PROJECT_NAME)
hookimpl = pluggy.HookimplMarker(PROJECT_NAME)

EnvironmentFactory = Callable[[Mapping[str, Any], Optional[float]], Any]


@hookspec
def goal_coverage_register_algorithms(algorithms: MutableMapping[str, Type[Algorithm]]) -> None:
    """Register available algorithms by name"""


@hookspec
def goal_coverage_register_environments(environments: MutableMapping[str, EnvironmentFactory]) -> None:
    """Register environment factories by name; a factory gets builder options and an optional gamma override"""
