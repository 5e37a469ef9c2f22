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
"""Errors and warnings raised by the toolkit"""


class GoalCoverageError(Exception):
    """Base class of all toolkit errors"""


class ConfigError(GoalCoverageError, ValueError):
    """Experiment config or command line values are invalid"""


class EnvironmentLoadError(GoalCoverageError):
    """Environment can not be built or loaded"""


class InvalidMdpError(GoalCoverageError, ValueError):
    """MDP, policy or mixture violates its invariants"""


class EnumerationTooLargeError(GoalCoverageError):
    """Too many deterministic policies to enumerate"""


class NumericalConditioningError(GoalCoverageError, ArithmeticError):
    """Linear solve residual is above the accepted threshold"""


class EmptyBatchError(GoalCoverageError, ValueError):
    """Operation needs at least one transition"""


class SingularRegressionError(GoalCoverageError, ArithmeticError):
    """Normal equations of the critic regression are singular"""


class OracleConvergenceWarning(UserWarning):
    """Brute-force oracle stopped before reaching its duality gap tolerance"""


class CoverageWarning(UserWarning):
    """Batch does not cover state-action pairs the caller relies on"""
