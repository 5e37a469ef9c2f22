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
"""goal-coverage command line"""
import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import toml

from goal_coverage.config_provider import ConfigProvider
from goal_coverage.envs.mdp_file import dump_mdp
from goal_coverage.exceptions import ConfigError, EnvironmentLoadError
from goal_coverage.harness import compare_algorithms, oracle_report, run_experiment
from goal_coverage.models.experiment import EnvironmentSpec, ExperimentConfig, check_gamma
from goal_coverage.models.mdp import DiscreteMdp
from goal_coverage.plugin import build_environment

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_RUNTIME_ERROR = 2

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with the run, compare, dump-mdp and oracle subcommands"""
    parser = argparse.ArgumentParser(prog="goal-coverage", description=__doc__)
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run one experiment over its seeds")
    run.add_argument("--config", required=True, type=Path, help="Experiment TOML file")
    run.add_argument("--output-dir", type=Path, help="Override run.output_dir")
    run.add_argument("--seed", type=int, action="append", help="Override run.seeds, may be repeated")
    run.add_argument("--workers", type=int, help="Override run.workers")

    compare = commands.add_parser("compare", help="Run several experiments and normalise their summaries")
    compare.add_argument("--config", required=True, type=Path, action="append", help="Experiment TOML file")
    compare.add_argument("--output-dir", required=True, type=Path, help="Where comparison.csv goes")
    compare.add_argument("--seed", type=int, action="append", help="Override run.seeds of every experiment")
    compare.add_argument("--workers", type=int, help="Override run.workers")

    for name, help_text in (("dump-mdp", "Write an environment as an MDP file"), ("oracle", "Brute-force F*")):
        command = commands.add_parser(name, help=help_text)
        source = command.add_mutually_exclusive_group(required=True)
        source.add_argument("--config", type=Path, help="Take the [environment] table of an experiment file")
        source.add_argument("--env", help="Built-in environment name")
        command.add_argument("--gamma", type=float, help="Discount override")
        command.add_argument("--output", type=Path, required=name == "dump-mdp", help="Output TOML file")
    return parser


def _environment_spec(args: argparse.Namespace) -> EnvironmentSpec:
    check_gamma(args.gamma, "--gamma")
    if args.config is not None:
        spec = EnvironmentSpec.from_provider(ConfigProvider.from_file(args.config))
        return spec if args.gamma is None else EnvironmentSpec(spec.name, spec.path, args.gamma, spec.options)
    return EnvironmentSpec(name=args.env, gamma=args.gamma)


def _discrete_environment(args: argparse.Namespace) -> DiscreteMdp:
    env = build_environment(_environment_spec(args))
    if not isinstance(env, DiscreteMdp):
        raise ConfigError(f"{args.command} needs a discrete environment")
    return env


def _experiment(path: Path, args: argparse.Namespace, output_dir: Optional[Path] = None) -> ExperimentConfig:
    return ExperimentConfig.from_provider(
        ConfigProvider.from_file(path), seeds=args.seed, output_dir=output_dir, workers=args.workers
    )


def run_command(args: argparse.Namespace) -> int:
    """goal-coverage run"""
    config = _experiment(args.config, args, args.output_dir)
    records = run_experiment(config)
    logger.info("%s seeds of %s on %s finished", len(records), config.algorithm, config.environment.label)
    return EXIT_OK


def compare_command(args: argparse.Namespace) -> int:
    """goal-coverage compare; each experiment writes to <output-dir>/<environment>-<algorithm>"""
    configs = []
    for path in args.config:
        config = _experiment(path, args)
        configs.append(replace(config, output_dir=args.output_dir / f"{config.environment.label}-{config.algorithm}"))
    comparison = compare_algorithms(configs, args.output_dir)
    logger.info("Compared %s experiments over %s metrics", len(configs), comparison["metric"].nunique())
    return EXIT_OK


def dump_mdp_command(args: argparse.Namespace) -> int:
    """goal-coverage dump-mdp"""
    path = dump_mdp(_discrete_environment(args), args.output)
    logger.info("MDP written to %s", path)
    return EXIT_OK


def oracle_command(args: argparse.Namespace) -> int:
    """goal-coverage oracle"""
    report = oracle_report(_discrete_environment(args))
    if args.output is None:
        sys.stdout.write(toml.dumps(report))
    else:
        args.output.parent.mkdir(parents=True, exist_ok=True)
        with open(args.output, "w", encoding="utf-8") as file:
            toml.dump(report, file)
    logger.info("F* = %.12g", report["objective_F"])
    return EXIT_OK


COMMANDS = {
    "run": run_command,
    "compare": compare_command,
    "dump-mdp": dump_mdp_command,
    "oracle": oracle_command,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the exit code"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, EnvironmentLoadError) as err:
        logger.error("%s: %s", type(err).__name__, err)
        return EXIT_CONFIG_ERROR
    except Exception as err:  # pylint: disable=broad-except
        logger.exception("%s failed: %s", args.command, err)
        return EXIT_RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
