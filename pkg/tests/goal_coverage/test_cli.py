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
"""
Test the goal-coverage command line
"""
import numpy as np
import pandas as pd
import pytest
import toml

from goal_coverage.cli import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_RUNTIME_ERROR
from goal_coverage.envs import load_mdp, make_branching_mdp
from goal_coverage.harness import MANIFEST_FILE, METRICS_FILE, distribution_file

from .common import run_cli, write_experiment


def test_run(examples_dir, tmp_path):
    """run writes the result files; --seed replaces the configured seeds"""
    config = examples_dir / "experiments" / "branching_random.toml"
    run_cli(["run", "--config", config, "--output-dir", tmp_path, "--seed", 7], EXIT_OK)
    assert toml.load(tmp_path / MANIFEST_FILE)["seeds"] == [7]
    assert (tmp_path / distribution_file(7)).exists()
    assert pd.read_csv(tmp_path / METRICS_FILE)["seed"].unique().tolist() == [7]


@pytest.mark.parametrize(
    "text",
    [
        pytest.param(
            """
            [environment]
            name = "branching"
            [algorithm]
            name = "bogus"
            [run]
            seeds = [0]
            """,
            id="unknown-algorithm",
        ),
        pytest.param(
            """
            [environment]
            name = "nowhere"
            [algorithm]
            name = "random"
            [run]
            seeds = [0]
            """,
            id="unknown-environment",
        ),
        pytest.param(
            """
            [environment]
            name = "branching"
            [algorithm]
            name = "random"
            """,
            id="no-seeds",
        ),
        pytest.param("[environment", id="not-toml"),
    ],
)
def test_run_config_errors(tmp_path, text):
    """Config and environment problems exit with 1"""
    path = write_experiment(tmp_path, text)
    run_cli(["run", "--config", path, "--output-dir", tmp_path / "out"], EXIT_CONFIG_ERROR)


def test_run_missing_file(tmp_path):
    """An unreadable experiment file is a config error"""
    run_cli(["run", "--config", tmp_path / "missing.toml"], EXIT_CONFIG_ERROR)


def test_oracle_runtime_error(tmp_path):
    """Failures after a valid config exit with 2"""
    path = write_experiment(
        tmp_path,
        """
        [environment]
        name = "random"
        num_states = 30
        branching = 3

        [algorithm]
        name = "random"

        [run]
        seeds = [0]
        """,
    )
    run_cli(["oracle", "--config", path], EXIT_RUNTIME_ERROR)


def test_compare(examples_dir, tmp_path):
    """compare runs each experiment in its own directory and writes comparison.csv"""
    configs = [examples_dir / "experiments" / f"{name}.toml" for name in ("branching_exact", "branching_random")]
    run_cli(["compare", "--config", configs[0], "--config", configs[1], "--output-dir", tmp_path], EXIT_OK)
    comparison = pd.read_csv(tmp_path / "comparison.csv")
    assert set(comparison["algorithm"]) == {"ddgc_exact", "random"}
    assert (tmp_path / "branching-ddgc_exact" / METRICS_FILE).exists()
    assert (tmp_path / "branching-random" / METRICS_FILE).exists()


def test_dump_mdp(tmp_path):
    """dump-mdp writes a loadable definition with the overridden discount"""
    output = tmp_path / "branching.toml"
    run_cli(["dump-mdp", "--env", "branching", "--gamma", "0.9", "--output", output], EXIT_OK)
    loaded = load_mdp(output)
    np.testing.assert_array_equal(loaded.transition, make_branching_mdp().transition)
    assert loaded.gamma == 0.9


def test_dump_mdp_from_config(examples_dir, tmp_path):
    """The [environment] table of an experiment file works as a source"""
    output = tmp_path / "chain.toml"
    run_cli(["dump-mdp", "--config", examples_dir / "experiments" / "chain_file.toml", "--output", output], EXIT_OK)
    assert load_mdp(output).gamma == 0.8


def test_dump_mdp_rejects_point_mass(tmp_path):
    """Only discrete environments have definition files"""
    run_cli(["dump-mdp", "--env", "point_mass", "--output", tmp_path / "pm.toml"], EXIT_CONFIG_ERROR)


@pytest.mark.parametrize(
    "command,gamma",
    [
        pytest.param("oracle", "1.5", id="oracle-above-one"),
        pytest.param("oracle", "1", id="oracle-one"),
        pytest.param("dump-mdp", "-0.1", id="dump-negative"),
    ],
)
def test_gamma_override_out_of_range(tmp_path, command, gamma):
    """A discount override outside [0, 1) is a config error on both subcommands"""
    run_cli([command, "--env", "branching", "--gamma", gamma, "--output", tmp_path / "out.toml"], EXIT_CONFIG_ERROR)
    assert not (tmp_path / "out.toml").exists()


def test_gamma_override_out_of_range_with_config(examples_dir, tmp_path):
    """The override is checked when the environment comes from an experiment file too"""
    config = examples_dir / "experiments" / "chain_file.toml"
    run_cli(["dump-mdp", "--config", config, "--gamma", "2", "--output", tmp_path / "out.toml"], EXIT_CONFIG_ERROR)


def test_oracle(tmp_path):
    """oracle writes F* and the optimal mixture"""
    output = tmp_path / "oracle.toml"
    run_cli(["oracle", "--env", "dynamics_conflict", "--output", output], EXIT_OK)
    report = toml.load(output)
    assert report["goal_states"] == [1, 2, 3, 5]
    assert report["objective_F"] == pytest.approx(10 / 13, abs=2e-3)


def test_usage_errors():
    """argparse rejects a missing subcommand"""
    with pytest.raises(SystemExit):
        run_cli([])
