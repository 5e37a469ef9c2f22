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

"""Common helpers for goal_coverage tests"""
from pathlib import Path
from textwrap import dedent
from typing import Sequence

import allure
import numpy as np

from goal_coverage.cli import main
from goal_coverage.models.mdp import DiscreteMdp, PolicyMixture, TabularPolicy


def random_policy(mdp: DiscreteMdp, rng: np.random.Generator) -> TabularPolicy:
    """Stochastic policy with Dirichlet rows"""
    return TabularPolicy(rng.dirichlet(np.ones(mdp.num_actions), size=mdp.num_states))


def random_mixture(mdp: DiscreteMdp, rng: np.random.Generator, size: int = 3) -> PolicyMixture:
    """Mixture of random stochastic policies with Dirichlet weights"""
    weights = rng.dirichlet(np.ones(size))
    return PolicyMixture.from_pairs([(random_policy(mdp, rng), w) for w in weights])


def write_experiment(directory: Path, text: str, name: str = "experiment.toml") -> Path:
    """Write an experiment file and return its path"""
    path = directory / name
    path.write_text(dedent(text), encoding="utf-8")
    return path


def run_cli(args: Sequence[str], expected_code: int = 0) -> int:
    """
    Run the command line in-process
    :param args: arguments after the program name
    :param expected_code: exit code the call must return
    """
    with allure.step(f"Run goal-coverage {' '.join(map(str, args))}"):
        code = main([str(arg) for arg in args])
        allure.attach(str(code), name="Exit code", attachment_type=allure.attachment_type.TEXT)
        assert code == expected_code, f"Expected exit code {expected_code}, got {code}"
        return code


def attach_array(values: np.ndarray, name: str) -> None:
    """Attach an array to the report"""
    text = np.array2string(np.asarray(values), precision=6)
    allure.attach(text, name=name, attachment_type=allure.attachment_type.TEXT)
