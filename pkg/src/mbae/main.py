"""Run, ablate, plot and evaluate model-based action exploration experiments."""

from __future__ import annotations

import sys
from pathlib import Path
from typing import TYPE_CHECKING

from polykit.cli import PolyArgs
from polykit.text import print_color

from mbae.config import EVAL_POLICIES
from mbae.experiment import EXIT_CONFIG, ablation_matrix, evaluate_checkpoint, plot_files, run_experiment
from mbae.tools import ConfigurationError, get_logger

if TYPE_CHECKING:
    import argparse
    from collections.abc import Sequence

COMMANDS = ["run", "ablate", "plot", "eval-checkpoint"]


def parse_arguments(argv: Sequence[str] | None = None) -> argparse.Namespace:
    """Parse command-line arguments."""
    parser = PolyArgs(
        description="Train CACLA agents with model-based action exploration and compare learning curves.",
        arg_width=40,
    )

    # Positional argument for the subcommand
    parser.add_argument("command", choices=COMMANDS, help="what to do: " + ", ".join(COMMANDS))

    # Training runs from a YAML experiment file
    experiment_group = parser.add_argument_group(
        "EXPERIMENTS",
        "For run and ablate (requires a YAML experiment config)",
    )
    experiment_group.add_argument("--config", type=str, help="experiment config file", metavar="PATH")
    experiment_group.add_argument(
        "--seed",
        type=int,
        action="append",
        dest="seeds",
        help="seed to run, repeatable (replaces the config's seed list)",
        metavar="N",
    )
    experiment_group.add_argument(
        "--set",
        type=str,
        action="append",
        dest="overrides",
        default=[],
        help="override a config value by dotted key, repeatable",
        metavar="KEY=VALUE",
    )
    experiment_group.add_argument("--parallel", type=int, help="worker processes for independent runs", metavar="N")
    experiment_group.add_argument(
        "--median",
        action="store_true",
        help="aggregate seeds by median instead of mean",
    )
    experiment_group.add_argument(
        "--pretrain-dynamics",
        type=int,
        help="train the dynamics model on random actions for N steps before the first episode",
        metavar="N",
    )

    # Plotting existing curves
    plot_group = parser.add_argument_group("PLOTTING", "For plot")
    plot_group.add_argument(
        "--csv",
        type=str,
        action="append",
        dest="csvs",
        default=[],
        help="learning-curve CSV to overlay, repeatable",
        metavar="PATH",
    )

    # Evaluating a saved run
    checkpoint_group = parser.add_argument_group("CHECKPOINTS", "For eval-checkpoint")
    checkpoint_group.add_argument("--checkpoint", type=str, help="checkpoint file to evaluate", metavar="PATH")
    checkpoint_group.add_argument("--episodes", type=int, help="greedy evaluation episodes", metavar="N")
    checkpoint_group.add_argument(
        "--eval-policy",
        choices=list(EVAL_POLICIES),
        help="act with the policy mean or the optimized action",
    )

    output_group = parser.add_argument_group("OUTPUT")
    output_group.add_argument("--out", type=str, help="output directory", metavar="DIR")

    args = parser.parse_args(argv)

    if args.command in {"run", "ablate"} and not args.config:
        parser.error(f"{args.command} requires --config")
    if args.command == "plot" and (not args.csvs or not args.out):
        parser.error("plot requires at least one --csv and --out")
    if args.command == "eval-checkpoint" and not args.checkpoint:
        parser.error("eval-checkpoint requires --checkpoint")
    if args.parallel is not None and args.parallel < 1:
        parser.error("--parallel must be at least 1")
    if args.episodes is not None and args.episodes < 1:
        parser.error("--episodes must be at least 1")

    return args


def main(argv: Sequence[str] | None = None) -> int:
    """Dispatch the selected command; returns the process exit status."""
    args = parse_arguments(argv)
    try:
        get_logger()
    except ConfigurationError as e:
        print_color(str(e), "red")
        return EXIT_CONFIG

    if args.command == "plot":
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        return plot_files(args.csvs, out_dir / "learning_curves.svg")

    if args.command == "eval-checkpoint":
        return evaluate_checkpoint(args.checkpoint, out=args.out, episodes=args.episodes, eval_policy=args.eval_policy)

    runner = ablation_matrix if args.command == "ablate" else run_experiment
    return runner(
        args.config,
        args.overrides,
        seeds=args.seeds,
        out=args.out,
        parallel=args.parallel,
        median=args.median,
        pretrain_dynamics=args.pretrain_dynamics,
    )


if __name__ == "__main__":
    sys.exit(main())
