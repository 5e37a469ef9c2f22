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
"""Tests of the built-in environments and MDP files"""
from fractions import Fraction

import numpy as np
import pytest

from goal_coverage.envs import (
    GoalDisc,
    PointMassEnv,
    dump_mdp,
    load_mdp,
    make_discounting_conflict_mdp,
    make_dynamics_conflict_mdp,
    make_point_mass_env,
    make_random_mdp,
)
from goal_coverage.envs.builtin import BUILTIN_ENVIRONMENTS
from goal_coverage.envs.discrete import reachable_states
from goal_coverage.envs.mdp_file import mdp_from_document, mdp_to_document
from goal_coverage.envs.point_mass import UniformActionPolicy
from goal_coverage.exact import brute_force_optimal_mixture, exact_d, exact_d_mixture, objective, optimal_q
from goal_coverage.exceptions import ConfigError, EnvironmentLoadError, InvalidMdpError
from goal_coverage.models.mdp import PolicyMixture, TabularPolicy
from goal_coverage.visitation import Discretizer

ONE_STATE = {"states": 1, "actions": 1, "gamma": 0.5, "rho0": [1.0]}
# one deterministic policy per goal of the discounting-conflict chain, nearest first
GOAL_ACTIONS = ([0] * 7, [0, 1, 0, 0, 0, 0, 0], [0, 1, 0, 1, 0, 0, 0])


def _absorbing(mdp, state: int) -> bool:
    return bool(np.all(mdp.transition[state, :, state] == 1.0))


def test_branching_structure(branching):
    """Seven states, three absorbing goals, start at 0"""
    assert (branching.num_states, branching.num_actions, branching.gamma) == (7, 2, 0.95)
    assert branching.goal_states.tolist() == [2, 4, 5]
    assert all(_absorbing(branching, s) for s in (2, 4, 5, 6))
    assert branching.rho0.tolist() == [1.0, 0, 0, 0, 0, 0, 0]
    assert reachable_states(branching).tolist() == list(range(7))


@pytest.mark.parametrize(
    "actions, goal, distance",
    [
        pytest.param([0] * 7, 2, 2, id="near-goal"),
        pytest.param([0, 1, 0, 0, 0, 0, 0], 4, 3, id="middle-goal"),
        pytest.param([0, 1, 0, 1, 0, 0, 0], 6, 4, id="far-goal"),
    ],
)
def test_discounting_conflict(actions, goal, distance):
    """Goals sit at distances 2, 3 and 4 from the start"""
    mdp = make_discounting_conflict_mdp()
    assert mdp.goal_states.tolist() == [2, 4, 6]
    d = exact_d(mdp, TabularPolicy.deterministic(actions, 2))
    assert d.probs[goal] == pytest.approx(mdp.gamma**distance)


def test_discounting_conflict_return_max_below_optimum():
    """Maximising the goal return settles on the nearest goal and misses F*"""
    mdp = make_discounting_conflict_mdp(gamma=0.9)
    q = optimal_q(mdp, mdp.goal.astype(float))
    greedy = TabularPolicy.deterministic(q.argmax(axis=1), mdp.num_actions)
    report = objective(mdp, exact_d(mdp, greedy))
    assert report.per_goal_mass.tolist() == pytest.approx([0.81, 0.0, 0.0], abs=1e-9)

    optimum = brute_force_optimal_mixture(mdp)
    assert report.objective_F < optimum.value - 0.1


def test_discounting_conflict_uniform_goals_near_optimum():
    """Close to gamma = 1 the mixture reaching each goal equally often is optimal"""
    mdp = make_discounting_conflict_mdp(gamma=0.9999)
    uniform_goals = PolicyMixture.from_pairs(
        [(TabularPolicy.deterministic(actions, 2), Fraction(1, 3)) for actions in GOAL_ACTIONS]
    )
    value = objective(mdp, exact_d_mixture(mdp, uniform_goals)).objective_F
    optimum = brute_force_optimal_mixture(mdp).value
    assert value <= optimum + 1e-9
    assert value == pytest.approx(optimum, abs=1e-3)
    assert optimum == pytest.approx(5 / 6, abs=1e-3)


def test_dynamics_conflict_structure():
    """Two forced loops behind the start state"""
    mdp = make_dynamics_conflict_mdp()
    assert mdp.gamma == 0.999
    assert mdp.goal_states.tolist() == [1, 2, 3, 5]
    assert mdp.transition[1, :, 2].tolist() == [1.0, 1.0]
    assert mdp.transition[4, :, 5].tolist() == [1.0, 1.0]
    assert not mdp.goal[4]


def test_random_mdp(random_mdps):
    """Seeded, fully reachable, with the requested goals and branching"""
    for mdp in random_mdps:
        assert len(reachable_states(mdp)) == 10
        assert mdp.goal.sum() == 3
        assert ((mdp.transition > 0).sum(axis=2) <= 2).all()
    again = make_random_mdp(10, 2, 3, 2, seed=0)
    assert again.transition.tobytes() == random_mdps[0].transition.tobytes()
    assert again.goal.tobytes() == random_mdps[0].goal.tobytes()


@pytest.mark.parametrize(
    "kwargs",
    [
        pytest.param({"branching": 0}, id="no-successors"),
        pytest.param({"branching": 11}, id="too-many-successors"),
        pytest.param({"num_goals": 11}, id="too-many-goals"),
    ],
)
def test_random_mdp_rejects_options(kwargs):
    """Branching and goal counts must fit the state count"""
    options = {"num_states": 10, "num_actions": 2, "num_goals": 3, "branching": 2, "seed": 0, **kwargs}
    with pytest.raises(EnvironmentLoadError):
        make_random_mdp(**options)


def test_point_mass_dynamics():
    """Clipped actions and positions, absorbing discs"""
    env = make_point_mass_env()
    start = np.array([[0.5, 0.5]])
    np.testing.assert_allclose(env.step(start, np.zeros((1, 2))), start)
    np.testing.assert_allclose(env.step(start, np.array([[3.0, -3.0]])), [[0.6, 0.4]])
    np.testing.assert_allclose(env.step(np.array([[0.98, 0.02]]), np.array([[1.0, -1.0]])), [[1.0, 0.0]])
    inside = np.array([[0.15, 0.8]])
    np.testing.assert_allclose(env.step(inside, np.ones((1, 2)), np.ones((1, 2))), inside)
    assert env.goal_index(np.array([[0.15, 0.8], [0.85, 0.8], [0.5, 0.15], [0.5, 0.5]])).tolist() == [0, 1, 2, -1]
    assert env.reward(np.array([[0.5, 0.2], [0.5, 0.5]])).tolist() == [1.0, 0.0]


def test_point_mass_disc_cells_are_disjoint():
    """At precision 100 no cell belongs to two discs"""
    env = make_point_mass_env()
    discretizer = Discretizer(100)
    grid = np.stack(np.meshgrid(np.linspace(0, 1, 201), np.linspace(0, 1, 201)), axis=-1).reshape(-1, 2)
    index = env.goal_index(grid)
    cells = [set(map(tuple, discretizer.cells(grid[index == disc]).tolist())) for disc in range(3)]
    assert all(cells)
    assert not (cells[0] & cells[1]) and not (cells[0] & cells[2]) and not (cells[1] & cells[2])


def test_point_mass_batches():
    """Deterministic per seed, start at the centre, absorbed once inside a disc"""
    env = make_point_mass_env(seed=2)
    mixture = PolicyMixture.single(UniformActionPolicy())
    first = env.sample_batch(mixture, 30, 40, seed=7)
    second = env.sample_batch(mixture, 30, 40, seed=7)
    assert first.states.tobytes() == second.states.tobytes()
    np.testing.assert_allclose(first.states[:, 0], np.full((30, 2), 0.5))
    assert ((first.states >= 0) & (first.states <= 1)).all()
    reached = env.is_goal(first.states)
    for episode in range(30):
        hits = np.flatnonzero(reached[episode])
        if hits.size:
            assert reached[episode, hits[0] :].all()
    with pytest.raises(InvalidMdpError):
        env.sample_batch(mixture, 0, 40, seed=7)


@pytest.mark.parametrize(
    "kwargs, error",
    [
        pytest.param({"goal_discs": ()}, EnvironmentLoadError, id="no-discs"),
        pytest.param({"dt": 0.0}, EnvironmentLoadError, id="dt"),
        pytest.param({"noise_sigma": -0.1}, EnvironmentLoadError, id="noise"),
        pytest.param({"gamma": 1.0}, InvalidMdpError, id="gamma"),
    ],
)
def test_point_mass_validation(kwargs, error):
    """Construction checks its parameters"""
    with pytest.raises(error):
        PointMassEnv(**kwargs)


@pytest.mark.parametrize("radius", [0.0, -0.1])
def test_goal_disc_radius(radius):
    """Discs need a positive radius"""
    with pytest.raises(ConfigError):
        GoalDisc((0.5, 0.5), radius)


def test_mdp_file_round_trip(tmp_path, branching):
    """Dump and load keep every array"""
    path = dump_mdp(branching, tmp_path / "nested" / "branching.toml")
    loaded = load_mdp(path)
    assert loaded.name == "branching"
    np.testing.assert_array_equal(loaded.transition, branching.transition)
    np.testing.assert_array_equal(loaded.goal, branching.goal)
    np.testing.assert_array_equal(loaded.rho0, branching.rho0)
    assert loaded.gamma == branching.gamma
    assert len(mdp_to_document(branching)["transitions"]) == 14


def test_mdp_file_example(examples_dir, chain):
    """The bundled chain definition"""
    loaded = load_mdp(examples_dir / "mdp" / "chain.toml")
    np.testing.assert_array_equal(loaded.transition, chain.transition)
    assert loaded.goal_states.tolist() == [1]


@pytest.mark.parametrize(
    "document",
    [
        pytest.param({"actions": 1, "gamma": 0.5, "rho0": [1.0]}, id="missing-states"),
        pytest.param({"states": "two", "actions": 1, "gamma": 0.5, "rho0": [1.0]}, id="malformed"),
        pytest.param(
            {**ONE_STATE, "transitions": [{"s": 0, "a": 0, "next": 0, "p": 0.5}]},
            id="rows-not-stochastic",
        ),
        pytest.param(
            {**ONE_STATE, "transitions": [{"s": 0, "a": 0, "next": 3, "p": 1}]},
            id="state-out-of-range",
        ),
    ],
)
def test_mdp_file_errors(document):
    """Every definition problem is an EnvironmentLoadError"""
    with pytest.raises(EnvironmentLoadError):
        mdp_from_document(document)


def test_mdp_file_unreadable(tmp_path):
    """Missing and non-TOML files"""
    with pytest.raises(EnvironmentLoadError):
        load_mdp(tmp_path / "missing.toml")
    broken = tmp_path / "broken.toml"
    broken.write_text("states = [", encoding="utf-8")
    with pytest.raises(EnvironmentLoadError):
        load_mdp(broken)


def test_builtin_factories():
    """Names map to factories; options and gamma reach the builders"""
    assert set(BUILTIN_ENVIRONMENTS) == {
        "branching",
        "discounting_conflict",
        "dynamics_conflict",
        "random",
        "point_mass",
    }
    assert BUILTIN_ENVIRONMENTS["branching"]({}, None).gamma == 0.95
    assert BUILTIN_ENVIRONMENTS["dynamics_conflict"]({}, 0.9).gamma == 0.9
    random_mdp = BUILTIN_ENVIRONMENTS["random"]({"num_states": 6, "num_goals": 2, "seed": 3}, None)
    assert (random_mdp.num_states, int(random_mdp.goal.sum()), random_mdp.gamma) == (6, 2, 0.9)
    env = BUILTIN_ENVIRONMENTS["point_mass"]({"goal_discs": [{"center": [0.2, 0.2], "radius": 0.1}], "dt": 0.05}, None)
    assert env.goal_discs == (GoalDisc((0.2, 0.2), 0.1),)
    assert env.dt == 0.05


@pytest.mark.parametrize(
    "name, options",
    [
        pytest.param("branching", {"num_states": 3}, id="fixed-with-options"),
        pytest.param("random", {"size": 3}, id="random-unknown"),
        pytest.param("random", {"num_states": "many"}, id="random-malformed"),
        pytest.param("point_mass", {"goal_discs": [{"center": [0.2, 0.2]}]}, id="disc-without-radius"),
        pytest.param("point_mass", {"goal_discs": [{"center": [0.2, 0.2], "radius": 0.0}]}, id="disc-zero-radius"),
    ],
)
def test_builtin_factory_errors(name, options):
    """Bad options are load errors"""
    with pytest.raises(EnvironmentLoadError):
        BUILTIN_ENVIRONMENTS[name](options, None)
