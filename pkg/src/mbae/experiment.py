"""Seeded multi-variant experiments: per-run curves, cross-seed aggregates, plots and a summary."""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np
import pandas as pd
from pandas import DataFrame

from mbae.config import (
    ABLATION_VARIANTS,
    ExperimentConfig,
    load_experiment_config,
    overridden_switches,
    variant_config,
)
from mbae.diagnostics import field_diagnostics, write_field_csv
from mbae.plotting import plot_curves
from mbae.tools import (
    CheckpointError,
    ConfigurationError,
    CurveParseError,
    ExperimentComponent,
    NumericError,
    OutputFormatter,
    RunAborted,
    RunRecord,
    get_logger,
)
from mbae.trainer import Trainer, load_checkpoint, save_checkpoint

if TYPE_CHECKING:
    from collections.abc import Sequence

    from mbae.config import EnvConfig, TrainConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORTED = 3

BASELINE_VARIANT = "cacla"
FINAL_WINDOW = 0.4
THRESHOLD_FRACTION = 0.8
AGGREGATE_COLUMNS = ["episode", "env_steps", "mean_return", "std_return", "seeds"]


@dataclass(frozen=True)
class RunJob:
    """Everything one worker needs to run a (variant, seed) pair."""

    env: EnvConfig
    train: TrainConfig
    variant: str
    seed: int
    out_dir: str

    @property
    def run_id(self) -> str:
        return f"{self.variant}_seed{self.seed}"


def run_job(job: RunJob) -> tuple[RunJob, list[RunRecord]]:
    """Train one run, write its curve CSV and final checkpoint; importable by worker processes."""
    logger = get_logger()
    trainer = Trainer(job.env, job.train, logger, run_id=job.run_id)
    if job.train.pretrain_dynamics_steps:
        trainer.pretrain_dynamics(job.train.pretrain_dynamics_steps)
    records = trainer.train()

    out_dir = Path(job.out_dir)
    write_curve_csv(records, out_dir / f"{job.run_id}.csv")
    checkpoints = out_dir / "checkpoints"
    checkpoints.mkdir(parents=True, exist_ok=True)
    save_checkpoint(trainer, checkpoints / f"{job.run_id}.mbae")
    logger.info("Finished %s: %d rows written to %s", job.run_id, len(records), out_dir)
    return job, records


def records_frame(records: Sequence[RunRecord]) -> DataFrame:
    return DataFrame([r.as_row() for r in records], columns=RunRecord.columns())


def write_curve_csv(records: Sequence[RunRecord], path: Path) -> None:
    """One row per evaluation, columns in RunRecord field order, "\\n" line endings."""
    records_frame(records).to_csv(path, index=False, lineterminator="\n")


def aggregate_curves(curves: Sequence[DataFrame], how: str = "mean") -> DataFrame:
    """Per-episode mean (or median) and std of the evaluation return across seeds.

    Episodes missing from some runs are aggregated over the runs that have them.

    Raises:
        ConfigurationError: If no curves are given.
    """
    if not curves:
        msg = "cannot aggregate an empty set of curves"
        raise ConfigurationError(msg)
    stacked = pd.concat(curves, ignore_index=True)
    grouped = stacked.groupby("episode", sort=True)
    center = grouped["mean_return"].median() if how == "median" else grouped["mean_return"].mean()
    frame = DataFrame({
        "episode": center.index.astype(int),
        "env_steps": grouped["env_steps"].mean().to_numpy(),
        "mean_return": center.to_numpy(),
        "std_return": grouped["mean_return"].std(ddof=0).to_numpy(),
        "seeds": grouped["mean_return"].count().to_numpy(),
    })
    return frame[AGGREGATE_COLUMNS]


def final_return(curve: DataFrame, window: float = FINAL_WINDOW) -> float:
    """Mean return over the last `window` fraction of evaluation rows."""
    if curve.empty:
        return float("nan")
    tail = max(1, int(np.ceil(len(curve) * window)))
    return float(curve["mean_return"].iloc[-tail:].mean())


def episodes_to_reach(curve: DataFrame, threshold: float) -> int | None:
    """First evaluation episode whose return is at least `threshold`, or None."""
    reached = curve.loc[curve["mean_return"] >= threshold, "episode"]
    return int(reached.iloc[0]) if not reached.empty else None


@dataclass
class ExperimentRunner(ExperimentComponent):
    """Runs every (variant, seed) pair of an experiment and writes the result files."""

    config: ExperimentConfig
    out_dir: Path

    def jobs(self) -> list[RunJob]:
        explicit = self.config.explicit_train_keys
        for variant in self.config.variants:
            for key in overridden_switches(self.config.train, variant, explicit):
                self.logger.info("Variant %s fixes train.%s; the configured value is not used.", variant, key)
        return [
            RunJob(
                self.config.env,
                variant_config(self.config.train, variant, seed, explicit),
                variant,
                seed,
                str(self.out_dir),
            )
            for variant in self.config.variants
            for seed in self.config.seeds
        ]

    def run_all(self) -> dict[str, list[list[RunRecord]]]:
        """Train every job, in a process pool when `parallel` > 1; results keep seed order."""
        jobs = self.jobs()
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.logger.info(
            "Running %d runs (%d variants x %d seeds) into %s",
            len(jobs),
            len(self.config.variants),
            len(self.config.seeds),
            self.out_dir,
        )
        finished: dict[str, list[RunRecord]] = {}
        if self.config.parallel == 1:
            for job in jobs:
                finished[job.run_id] = run_job(job)[1]
        else:
            with ProcessPoolExecutor(max_workers=self.config.parallel) as pool:
                futures = {pool.submit(run_job, job): job for job in jobs}
                for future in as_completed(futures):
                    job, records = future.result()
                    finished[job.run_id] = records

        return {
            variant: [finished[job.run_id] for job in jobs if job.variant == variant]
            for variant in self.config.variants
        }

    def write_aggregates(self, results: dict[str, list[list[RunRecord]]]) -> dict[str, DataFrame]:
        aggregates = {}
        for variant, runs in results.items():
            frame = aggregate_curves([records_frame(records) for records in runs], self.config.aggregate)
            path = self.out_dir / f"{variant}_aggregate.csv"
            frame.to_csv(path, index=False, lineterminator="\n")
            self.logger.info("Aggregate for %s written to %s", variant, path)
            aggregates[variant] = frame
        return aggregates

    def summarize(self, aggregates: dict[str, DataFrame]) -> DataFrame:
        """Final return per variant and episodes needed to reach 80% of the baseline's final return."""
        baseline = BASELINE_VARIANT if BASELINE_VARIANT in aggregates else next(iter(aggregates))
        threshold = THRESHOLD_FRACTION * final_return(aggregates[baseline])
        rows = []
        for variant, frame in aggregates.items():
            reached = episodes_to_reach(frame, threshold)
            rows.append({
                "variant": variant,
                "final_return": final_return(frame),
                "episodes_to_threshold": reached if reached is not None else -1,
            })
        summary = DataFrame(rows, columns=["variant", "final_return", "episodes_to_threshold"])
        summary.to_csv(self.out_dir / "summary.csv", index=False, lineterminator="\n")

        self.out.print_header(f"{self.config.name}: final returns (threshold {threshold:.4f} from {baseline})")
        table = []
        for row in rows:
            reached = row["episodes_to_threshold"]
            table.append([row["variant"], row["final_return"], reached if reached >= 0 else "-"])
        self.out.print_table(["Variant", "Final return", "Episodes to threshold"], table)
        return summary

    def run(self) -> None:
        results = self.run_all()
        aggregates = self.write_aggregates(results)
        svg_path = self.out_dir / "learning_curves.svg"
        plot_curves([self.out_dir / f"{variant}_aggregate.csv" for variant in aggregates], svg_path)
        self.logger.info("Learning curves plotted to %s", svg_path)
        self.summarize(aggregates)


def _apply_cli_choices(
    config: ExperimentConfig,
    *,
    seeds: list[int] | None,
    variants: list[str] | None,
    parallel: int | None,
    median: bool,
    pretrain_dynamics: int | None,
) -> ExperimentConfig:
    changes: dict[str, Any] = {}
    if seeds:
        changes["seeds"] = list(seeds)
    if variants:
        changes["variants"] = list(variants)
    if parallel is not None:
        changes["parallel"] = parallel
    if median:
        changes["aggregate"] = "median"
    if pretrain_dynamics is not None:
        changes["train"] = dataclasses.replace(config.train, pretrain_dynamics_steps=pretrain_dynamics)
    return dataclasses.replace(config, **changes) if changes else config


def run_experiment(
    config_path: str | Path,
    overrides: list[str] | None = None,
    *,
    seeds: list[int] | None = None,
    out: str | Path | None = None,
    parallel: int | None = None,
    median: bool = False,
    pretrain_dynamics: int | None = None,
    variants: list[str] | None = None,
) -> int:
    """Load a config, run every (variant, seed), and write curves, aggregates, plot and summary.

    Returns 0 on success, 2 for configuration or input problems, 3 when a run aborts.
    """
    logger = get_logger()
    try:
        config = load_experiment_config(config_path, overrides)
        config = _apply_cli_choices(
            config,
            seeds=seeds,
            variants=variants,
            parallel=parallel,
            median=median,
            pretrain_dynamics=pretrain_dynamics,
        )
        runner = ExperimentRunner(
            out=OutputFormatter(logger),
            logger=logger,
            config=config,
            out_dir=Path(out if out is not None else config.output_dir),
        )
        runner.run()
    except FileNotFoundError as e:
        logger.error("Error: File '%s' not found.", e.filename or config_path)
        return EXIT_CONFIG
    except (ConfigurationError, CurveParseError) as e:
        logger.error("Invalid experiment: %s", e)
        return EXIT_CONFIG
    except RunAborted as e:
        logger.error("Run %s aborted at episode %d: %s", e.run_id, e.episode, e)
        return EXIT_ABORTED
    return EXIT_OK


def ablation_matrix(config_path: str | Path, overrides: list[str] | None = None, **options: Any) -> int:
    """run_experiment over every named variant, whatever the config lists."""
    return run_experiment(config_path, overrides, variants=list(ABLATION_VARIANTS), **options)


def plot_files(csv_paths: list[str], out_svg: str | Path) -> int:
    """Plot existing curve CSVs; returns 0, or 2 when an input is missing or malformed."""
    logger = get_logger()
    try:
        plot_curves(csv_paths, out_svg)
    except FileNotFoundError as e:
        logger.error("Error: File '%s' not found.", e.filename)
        return EXIT_CONFIG
    except CurveParseError as e:
        logger.error("Cannot plot: %s", e)
        return EXIT_CONFIG
    logger.info("Learning curves plotted to %s", out_svg)
    return EXIT_OK


def evaluate_checkpoint(
    checkpoint: str | Path,
    *,
    out: str | Path | None = None,
    episodes: int | None = None,
    eval_policy: str | None = None,
) -> int:
    """Greedy evaluation of a saved run; for 2D runs also writes fields.csv into `out`.

    Returns 0 on success, 2 when the checkpoint is missing or unreadable.
    """
    logger = get_logger()
    try:
        trainer = load_checkpoint(checkpoint, logger)
        changes: dict[str, Any] = {}
        if episodes is not None:
            changes["eval_episodes"] = episodes
        if eval_policy is not None:
            changes["eval_policy"] = eval_policy
        if changes:
            trainer.config = dataclasses.replace(trainer.config, **changes)
        mean_return, std_return = trainer.evaluate()

        out_formatter = OutputFormatter(logger)
        out_formatter.print_header(f"Checkpoint {checkpoint}")
        out_formatter.print_table(
            ["Run", "Episode", "Policy", "Episodes", "Mean return", "Std return"],
            [
                [
                    trainer.run_id,
                    trainer.episode,
                    trainer.config.eval_policy,
                    trainer.config.eval_episodes,
                    mean_return,
                    std_return,
                ]
            ],
        )

        if out is not None and trainer.env.dim == 2:
            out_dir = Path(out)
            out_dir.mkdir(parents=True, exist_ok=True)
            frame = field_diagnostics(trainer, np.random.default_rng(trainer.config.seed))
            write_field_csv(frame, out_dir / "fields.csv")
            logger.info("Field diagnostics written to %s", out_dir / "fields.csv")
    except FileNotFoundError as e:
        logger.error("Error: File '%s' not found.", e.filename or checkpoint)
        return EXIT_CONFIG
    except (CheckpointError, ConfigurationError) as e:
        logger.error("Cannot evaluate checkpoint: %s", e)
        return EXIT_CONFIG
    except NumericError as e:
        logger.error("Evaluation of %s hit a numeric error: %s", checkpoint, e)
        return EXIT_ABORTED
    return EXIT_OK
