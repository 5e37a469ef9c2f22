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
"""MDP definition files.

A file is TOML with top-level ``name``, ``states``, ``actions``, ``gamma``,
``goals`` (state ids) and ``rho0`` (one probability per state), plus one
``[[transitions]]`` table per non-zero entry holding ``s``, ``a``, ``next``
and ``p``::

    name = "chain"
    states = 2
    actions = 1
    gamma = 0.5
    goals = [1]
    rho0 = [1.0, 0.0]

    [[transitions]]
    s = 0
    a = 0
    next = 1
    p = 1.0
"""
import logging
from pathlib import Path
from typing import Any, Mapping, Union

import numpy as np
import toml

from goal_coverage.exceptions import EnvironmentLoadError, InvalidMdpError
from goal_coverage.models.mdp import DiscreteMdp

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def mdp_from_document(document: Mapping[str, Any], name: str = "mdp") -> DiscreteMdp:
    """Build and validate an MDP from a parsed definition"""
    try:
        num_states = int(document["states"])
        num_actions = int(document["actions"])
        transition = np.zeros((num_states, num_actions, num_states))
        for entry in document.get("transitions", []):
            transition[int(entry["s"]), int(entry["a"]), int(entry["next"])] += float(entry["p"])
        goal = np.zeros(num_states, dtype=bool)
        goal[[int(s) for s in document.get("goals", [])]] = True
        return DiscreteMdp(
            transition=transition,
            goal=goal,
            gamma=float(document["gamma"]),
            rho0=np.array(document["rho0"], dtype=float),
            name=str(document.get("name", name)),
        )
    except KeyError as err:
        raise EnvironmentLoadError(f"MDP definition misses field {err}") from err
    except (IndexError, TypeError, ValueError) as err:
        if isinstance(err, InvalidMdpError):
            raise EnvironmentLoadError(f"MDP definition is invalid: {err}") from err
        raise EnvironmentLoadError(f"MDP definition is malformed: {err}") from err


def load_mdp(path: PathLike) -> DiscreteMdp:
    """Read an MDP definition file"""
    path = Path(path)
    try:
        document = toml.load(path)
    except (OSError, toml.TomlDecodeError) as err:
        raise EnvironmentLoadError(f"Can not read MDP file {path}: {err}") from err
    logger.debug("Loaded MDP definition %s", path)
    return mdp_from_document(document, name=path.stem)


def mdp_to_document(mdp: DiscreteMdp) -> dict:
    """Serialisable definition with one table per non-zero transition"""
    entries = np.argwhere(mdp.transition > 0)
    return {
        "name": mdp.name,
        "states": mdp.num_states,
        "actions": mdp.num_actions,
        "gamma": mdp.gamma,
        "goals": [int(s) for s in mdp.goal_states],
        "rho0": [float(p) for p in mdp.rho0],
        "transitions": [
            {"s": int(s), "a": int(a), "next": int(n), "p": float(mdp.transition[s, a, n])} for s, a, n in entries
        ],
    }


def dump_mdp(mdp: DiscreteMdp, path: PathLike) -> Path:
    """Write ``mdp`` as a definition file"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as file:
        toml.dump(mdp_to_document(mdp), file)
    return path
