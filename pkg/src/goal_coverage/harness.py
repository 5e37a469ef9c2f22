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
"""Experiment runner, evaluation and result tables.

A run directory holds ``metrics.csv``, ``summary.csv``, one
``distribution_seed<seed>.csv`` per seed, ``manifest.toml`` and
``timings.csv``. Everything but the timings is a pure function of the
config and the seeds.
"""
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import toml

from goal_coverage.envs.point_mass import PointMassEnv
from goal_coverage.exact import (
    EMPIRICAL,
    EXACT,
    brute_force_optimal_mixture,
    exact_d_mixture,
    metrics,
    objective_value,
)
from goal_coverage.exceptions import ConfigError
from goal_coverage.models.algorithm import CONTINUOUS, DISCRETE, Algorithm, AlgorithmResult
from goal_coverage.models.experiment import ExperimentConfig, IterationMetrics, MetricsRecord
from goal_coverage.models.mdp import DiscreteMdp
from goal_coverage.plugin import build_environment, create_algorithm
from goal_coverage.sampling import derive_seed, sample_batch
from goal_coverage.visitation import NEXT_STATE, Discretizer, estimate_d

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
EVALUATION_STREAM = 2
FLOAT_FORMAT = "%.12g"

METRICS_FILE = "metrics.csv"
SUMMARY_FILE = "summary.csv"
MANIFEST_FILE = "manifest.toml"
TIMINGS_FILE = "timings.csv"
COMPARISON_FILE = "comparison.csv"

ITERATION_STAGE = "iteration"
FINAL_STAGE = "final"

METRICS_COLUMNS = [
    "schema_version",
    "environment",
    "algorithm",
    "seed",
    "stage",
    "iteration",
    "evaluation",
    "objective_F",
    "return_jgamma",
    "partial_entropy",
    "modified_partial_gini",
    "mean_return",
    "goals_reached",
]
SUMMARY_METRICS = [
    "objective_F",
    "return_jgamma",
    "partial_entropy",
    "modified_partial_gini",
    "mean_return",
    "goals_reached",
]
DISTRIBUTION_COLUMNS = ["state", "goal", "exact_d", "empirical_d"]


def distribution_file(seed: int) -> str:
    """Per-seed distribution table name"""
    return f"distribution_seed{seed}.csv"


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")
    return path


def goal_metrics(d: np.ndarray, goal: np.ndarray, iteration: int, wall_time: float = 0.0) -> IterationMetrics:
    """Scalar metrics of a (possibly cell-wise) distribution with its goal flags"""
    diversity = metrics(d, goal)
    goal_mass = np.asarray(d, dtype=float)[np.asarray(goal, dtype=bool)]
    return IterationMetrics(
        iteration=iteration,
        objective_F=objective_value(goal_mass),
        return_jgamma=diversity.return_jgamma,
        partial_entropy=diversity.partial_entropy,
        modified_partial_gini=diversity.modified_partial_gini,
        wall_time=wall_time,
    )


def discounted_returns(rewards: np.ndarray, gamma: float) -> np.ndarray:
    """sum_t gamma^(t-1) r_t per episode"""
    return rewards @ (gamma ** np.arange(rewards.shape[1], dtype=float))


def _cell_goals(env: PointMassEnv, cells: Sequence[Tuple[int, ...]], discretizer: Discretizer) -> np.ndarray:
    return env.is_goal(np.asarray(cells, dtype=float) / discretizer.precision)


def evaluate_discrete(
    mdp: DiscreteMdp, result: AlgorithmResult, config: ExperimentConfig, algorithm: str, seed: int
) -> MetricsRecord:
    """Exact metrics from the occupancy solve, empirical ones from evaluation rollouts"""
    d = exact_d_mixture(mdp, result.mixture).probs
    goals = mdp.goal_states
    iterations = tuple(
        goal_metrics(record.report.per_goal_mass, np.ones(len(goals), dtype=bool), record.iteration, record.wall_time)
        for record in result.records
        if record.report is not None
    )
    batch = sample_batch(
        mdp,
        result.mixture,
        config.eval_trajectories,
        config.eval_horizon,
        seed=derive_seed(seed, 0, EVALUATION_STREAM),
        source="evaluation",
    )
    estimate = estimate_d(batch, mdp.gamma, NEXT_STATE, num_states=mdp.num_states)
    entered = np.unique(batch.next_states)
    return MetricsRecord(
        environment=config.environment.label,
        algorithm=algorithm,
        seed=seed,
        iterations=iterations,
        final=goal_metrics(d, mdp.goal, len(result.records)),
        evaluation=EXACT,
        state_labels=tuple(str(state) for state in range(mdp.num_states)),
        goal=mdp.goal.copy(),
        exact_d=d,
        empirical_d=estimate.d_hat,
        mean_return=float(discounted_returns(batch.extrinsic_rewards, mdp.gamma).mean()),
        goals_reached=int(mdp.goal[entered].sum()),
    )


def evaluate_continuous(
    env: PointMassEnv, result: AlgorithmResult, config: ExperimentConfig, algorithm: Algorithm, seed: int
) -> MetricsRecord:
    """Cell-wise empirical metrics from evaluation rollouts"""
    discretizer = Discretizer(algorithm.ddgc_config(seed).discretization_precision)
    iterations = tuple(
        goal_metrics(record.d_hat, _cell_goals(env, record.cells, discretizer), record.iteration, record.wall_time)
        for record in result.records
        if record.cells is not None
    )
    batch = env.sample_batch(
        result.mixture,
        config.eval_trajectories,
        config.eval_horizon,
        seed=derive_seed(seed, 0, EVALUATION_STREAM),
        source="evaluation",
    )
    estimate = estimate_d(batch, env.gamma, NEXT_STATE, discretizer=discretizer)
    goal = _cell_goals(env, estimate.cells, discretizer)
    discs = np.unique(env.goal_index(batch.next_states))
    return MetricsRecord(
        environment=config.environment.label,
        algorithm=algorithm.name,
        seed=seed,
        iterations=iterations,
        final=goal_metrics(estimate.d_hat, goal, len(result.records)),
        evaluation=EMPIRICAL,
        state_labels=tuple(":".join(str(c) for c in cell) for cell in estimate.cells),
        goal=goal,
        exact_d=None,
        empirical_d=estimate.d_hat,
        mean_return=float(discounted_returns(batch.extrinsic_rewards, env.gamma).mean()),
        goals_reached=int((discs >= 0).sum()),
    )


def run_seed(config: ExperimentConfig, seed: int) -> MetricsRecord:
    """Build, learn and evaluate one seed; safe to call in a worker process"""
    algorithm = create_algorithm(config.algorithm, config.options)
    env = build_environment(config.environment)
    if algorithm.kind == DISCRETE and not isinstance(env, DiscreteMdp):
        raise ConfigError(f"Algorithm {algorithm.name} needs a discrete environment, got {config.environment.label}")
    if algorithm.kind == CONTINUOUS and not isinstance(env, PointMassEnv):
        raise ConfigError(f"Algorithm {algorithm.name} needs a continuous environment, got {config.environment.label}")

    logger.info("Running %s on %s with seed %s", algorithm.name, config.environment.label, seed)
    started = time.perf_counter()
    try:
        result = algorithm.run(env, seed)
    except Exception:
        logger.error("%s failed on %s with seed %s", algorithm.name, config.environment.label, seed)
        raise
    if algorithm.kind == CONTINUOUS:
        record = evaluate_continuous(env, result, config, algorithm, seed)
    else:
        record = evaluate_discrete(env, result, config, algorithm.name, seed)
    record = replace(record, wall_time=time.perf_counter() - started)
    logger.info("Seed %s done: F = %.6f, %s goals reached", seed, record.final.objective_F, record.goals_reached)
    return record


def _metric_row(record: MetricsRecord, stage: str, metric: IterationMetrics, evaluation: str) -> Dict[str, Any]:
    final = stage == FINAL_STAGE
    return {
        "schema_version": SCHEMA_VERSION,
        "environment": record.environment,
        "algorithm": record.algorithm,
        "seed": record.seed,
        "stage": stage,
        "iteration": metric.iteration,
        "evaluation": evaluation,
        "objective_F": metric.objective_F,
        "return_jgamma": metric.return_jgamma,
        "partial_entropy": metric.partial_entropy,
        "modified_partial_gini": metric.modified_partial_gini,
        "mean_return": record.mean_return if final else np.nan,
        "goals_reached": record.goals_reached if final else np.nan,
    }


def metrics_frame(records: Sequence[MetricsRecord]) -> pd.DataFrame:
    """One row per seed and iteration plus one final row per seed"""
    rows = []
    for record in records:
        rows.extend(_metric_row(record, ITERATION_STAGE, m, record.evaluation) for m in record.iterations)
        rows.append(_metric_row(record, FINAL_STAGE, record.final, record.evaluation))
    return pd.DataFrame(rows, columns=METRICS_COLUMNS)


def summary_frame(metrics_df: pd.DataFrame) -> pd.DataFrame:
    """Mean and population std over seeds of every final metric"""
    final = metrics_df[metrics_df["stage"] == FINAL_STAGE]
    long = final.melt(id_vars=["environment", "algorithm"], value_vars=SUMMARY_METRICS, var_name="metric")
    long["value"] = long["value"].astype(float)
    grouped = long.groupby(["environment", "algorithm", "metric"], sort=False)["value"]
    summary = grouped.agg(mean="mean", std=lambda values: float(np.std(values, ddof=0))).reset_index()
    return summary[["environment", "algorithm", "metric", "mean", "std"]]


def emit_distribution_table(record: MetricsRecord, path: Optional[Path] = None) -> pd.DataFrame:
    """Per-state rows (state, goal flag, exact d, empirical d_hat), ready to plot as bars"""
    frame = pd.DataFrame(
        {
            "state": list(record.state_labels),
            "goal": np.asarray(record.goal, dtype=int),
            "exact_d": np.full(len(record.state_labels), np.nan) if record.exact_d is None else record.exact_d,
            "empirical_d": record.empirical_d,
        },
        columns=DISTRIBUTION_COLUMNS,
    )
    if path is not None:
        _write_csv(frame, Path(path))
    return frame


def timings_frame(records: Sequence[MetricsRecord]) -> pd.DataFrame:
    """Wall times; iteration 0 is the whole seed"""
    rows = []
    for record in records:
        rows.extend(
            {"seed": record.seed, "iteration": m.iteration, "wall_time": m.wall_time} for m in record.iterations
        )
        rows.append({"seed": record.seed, "iteration": 0, "wall_time": record.wall_time})
    return pd.DataFrame(rows, columns=["seed", "iteration", "wall_time"])


def write_results(config: ExperimentConfig, records: Sequence[MetricsRecord]) -> List[Path]:
    """Write every output file of a run, manifest last"""
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    metrics_df = metrics_frame(records)
    written = [
        _write_csv(metrics_df, output_dir / METRICS_FILE),
        _write_csv(summary_frame(metrics_df), output_dir / SUMMARY_FILE),
    ]
    for r in records:
        distribution_path = output_dir / distribution_file(r.seed)
        emit_distribution_table(r, distribution_path)
        written.append(distribution_path)
    written.append(_write_csv(timings_frame(records), output_dir / TIMINGS_FILE))

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "environment": config.environment.label,
        "algorithm": config.algorithm,
        "seeds": list(config.seeds),
        "outputs": [path.name for path in written],
        "config": config.document,
    }
    manifest_path = output_dir / MANIFEST_FILE
    with open(manifest_path, "w", encoding="utf-8") as file:
        toml.dump(manifest, file)
    written.append(manifest_path)
    logger.info("Results written to %s", output_dir)
    return written


def run_experiment(config: ExperimentConfig, write: bool = True) -> List[MetricsRecord]:
    """Run every seed, in worker processes when ``workers > 1``, and write the results in seed order"""
    seeds = list(config.seeds)
    if config.workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(config.workers, len(seeds))) as executor:
            records = list(executor.map(run_seed, [config] * len(seeds), seeds))
    else:
        records = [run_seed(config, seed) for seed in seeds]
    if write:
        write_results(config, records)
    return records


def normalise_summary(summary: pd.DataFrame) -> pd.DataFrame:
    """Add ``normalized``: per environment and metric the best mean maps to 1.0.

    Positive best values divide, negative best values (the Gini criterion) use best / value.
    """

    def normalised(group: pd.DataFrame) -> pd.Series:
        best = group["mean"].max()
        values = group["mean"].to_numpy(dtype=float)
        if best > 0:
            scaled = values / best
        elif best < 0:
            scaled = best / values
        else:
            scaled = np.where(values == best, 1.0, 0.0)
        return pd.Series(np.where(values == best, 1.0, scaled), index=group.index)

    result = summary.copy()
    parts = [normalised(group) for _, group in summary.groupby(["environment", "metric"], sort=False)]
    result["normalized"] = pd.concat(parts).sort_index() if parts else pd.Series(dtype=float)
    return result


def compare_algorithms(configs: Sequence[ExperimentConfig], output_dir: Optional[Path] = None) -> pd.DataFrame:
    """Run every config and normalise their summaries per environment; one row per (algorithm, metric)"""
    if not configs:
        raise ConfigError("Nothing to compare")
    summaries = []
    for config in configs:
        records = run_experiment(config)
        summaries.append(summary_frame(metrics_frame(records)))
    comparison = normalise_summary(pd.concat(summaries, ignore_index=True))
    if output_dir is not None:
        Path(output_dir).mkdir(parents=True, exist_ok=True)
        _write_csv(comparison, Path(output_dir) / COMPARISON_FILE)
    return comparison


def oracle_report(mdp: DiscreteMdp) -> Dict[str, Any]:
    """Brute-force F* with the support of the optimal mixture"""
    result = brute_force_optimal_mixture(mdp)
    d = exact_d_mixture(mdp, result.mixture).probs
    return {
        "environment": mdp.name,
        "objective_F": result.value,
        "goal_states": mdp.goal_states.tolist(),
        "goal_mass": d[mdp.goal].tolist(),
        "mixture": [
            {"actions": component.policy.actions.tolist(), "weight": float(component.weight)}
            for component in result.mixture
        ],
    }
