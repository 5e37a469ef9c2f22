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
"""Algorithms for discrete MDPs"""
from goal_coverage.baselines import q_learning_count_bonus, random_policy_eval, smm_mixture
from goal_coverage.ddgc import run_ddgc_discrete, run_exact_ddgc
from goal_coverage.exceptions import ConfigError
from goal_coverage.models.algorithm import DDGC_OPTIONS, Algorithm, AlgorithmResult
from goal_coverage.models.mdp import DiscreteMdp, PolicyMixture


class DdgcAlgorithm(Algorithm):
    """Sampled DDGC with FQI and the visitation estimator"""

    name = "ddgc"
    options = DDGC_OPTIONS

    def setup_config(self):
        self.ddgc_config()

    def run(self, env: DiscreteMdp, seed: int) -> AlgorithmResult:
        mixture, records = run_ddgc_discrete(env, self.ddgc_config(seed))
        return AlgorithmResult(mixture, records)


class ExactDdgcAlgorithm(Algorithm):
    """Frank-Wolfe with exact occupancies and exact policy optimisation; seed independent"""

    name = "ddgc_exact"
    options = frozenset({"mixture_size"})

    def setup_config(self):
        self.mixture_size = self.config.get("mixture_size", 8)
        if isinstance(self.mixture_size, bool) or not isinstance(self.mixture_size, int) or self.mixture_size < 1:
            raise ConfigError(f"mixture_size must be a positive integer, got {self.mixture_size!r}")

    def run(self, env: DiscreteMdp, seed: int) -> AlgorithmResult:
        records = []
        mixture, _ = run_exact_ddgc(env, self.mixture_size, records=records)
        return AlgorithmResult(mixture, records)


class CountBonusAlgorithm(Algorithm):
    """Online Q-learning with count bonuses; the final extrinsic greedy policy"""

    name = "q_count"
    options = frozenset({"steps", "alpha", "bonus_scale", "horizon"})

    def setup_config(self):
        self.steps = self.config.get("steps", 20_000)
        self.alpha = self.config.get("alpha", 0.1)
        self.bonus_scale = self.config.get("bonus_scale", 1.0)
        self.horizon = self.config.get("horizon", 30)
        if not isinstance(self.steps, int) or self.steps < 0:
            raise ConfigError(f"steps must be a non-negative integer, got {self.steps!r}")

    def run(self, env: DiscreteMdp, seed: int) -> AlgorithmResult:
        policy = q_learning_count_bonus(
            env, self.steps, alpha=self.alpha, bonus_scale=self.bonus_scale, seed=seed, horizon=self.horizon
        )
        return AlgorithmResult(PolicyMixture.single(policy))


class RandomAlgorithm(Algorithm):
    """Uniform-random policy"""

    name = "random"

    def setup_config(self):
        """Nothing to configure"""

    def run(self, env: DiscreteMdp, seed: int) -> AlgorithmResult:
        policy, _ = random_policy_eval(env)
        return AlgorithmResult(PolicyMixture.single(policy))


class SmmAlgorithm(Algorithm):
    """Tabular state marginal matching toward exp(R) with the DDGC sampling and averaging"""

    name = "smm"
    options = DDGC_OPTIONS

    def setup_config(self):
        self.ddgc_config()

    def run(self, env: DiscreteMdp, seed: int) -> AlgorithmResult:
        config = self.ddgc_config(seed)
        records = []
        mixture = smm_mixture(env, config.mixture_size, config, records=records)
        return AlgorithmResult(mixture, records)
