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

"""Shared fixtures"""
from pathlib import Path

import numpy as np
import pytest

from goal_coverage.envs import make_branching_mdp, make_random_mdp
from goal_coverage.envs.discrete import deterministic_mdp
from goal_coverage.models.mdp import DiscreteMdp

EXAMPLES_DIR = Path(__file__).parent / "tests" / "examples"


@pytest.fixture()
def examples_dir() -> Path:
    """Directory with example experiment and MDP files"""
    return EXAMPLES_DIR


@pytest.fixture()
def branching() -> DiscreteMdp:
    """Canonical seven-state MDP at gamma 0.95"""
    return make_branching_mdp()


@pytest.fixture()
def chain() -> DiscreteMdp:
    """s0 -> s1, s1 absorbing goal, one action, gamma 0.5"""
    return deterministic_mdp(2, 1, {0: (1,), 1: (1,)}, goals=(1,), gamma=0.5, name="chain")


@pytest.fixture(scope="session")
def random_mdps():
    """Twenty fully reachable 10-state MDPs with three goals"""
    return [make_random_mdp(10, 2, 3, 2, seed=seed) for seed in range(20)]


@pytest.fixture()
def rng() -> np.random.Generator:
    """Seeded generator for property tests"""
    return np.random.default_rng(2024)
