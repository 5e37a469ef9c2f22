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
"""All built-in environments"""
from .discrete import (
    make_branching_mdp,
    make_discounting_conflict_mdp,
    make_dynamics_conflict_mdp,
    make_random_mdp,
)
from .mdp_file import dump_mdp, load_mdp
from .point_mass import GoalDisc, PointMassEnv, make_point_mass_env

__all__ = [
    "GoalDisc",
    "PointMassEnv",
    "dump_mdp",
    "load_mdp",
    "make_branching_mdp",
    "make_discounting_conflict_mdp",
    "make_dynamics_conflict_mdp",
    "make_point_mass_env",
    "make_random_mdp",
]
