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
"""Algorithms for the point-mass environment"""
from goal_coverage.ddgc import run_ddgc_continuous
from goal_coverage.envs.point_mass import PointMassEnv
from goal_coverage.models.algorithm import CONTINUOUS, DDGC_OPTIONS, Algorithm, AlgorithmResult


class ContinuousDdgcAlgorithm(Algorithm):
    """Continuous DDGC with the linear Fitted Actor Critic"""

    name = "ddgc_continuous"
    kind = CONTINUOUS
    options = DDGC_OPTIONS

    def setup_config(self):
        self.ddgc_config()

    def run(self, env: PointMassEnv, seed: int) -> AlgorithmResult:
        mixture, records = run_ddgc_continuous(env, self.ddgc_config(seed))
        return AlgorithmResult(mixture, records)
