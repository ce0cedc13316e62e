"""Command-line interface: run experiments, list registries, replay stored runs."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from sleeping_bandits.harness import (
    ConfigError,
    ExperimentConfig,
    registry_listing,
    replay,
    run_experiment,
)


def _cmd_run(args: argparse.Namespace) -> int:
    config = ExperimentConfig.from_json_file(args.config)
    if args.runs is not None:
        config.runs = args.runs
    if args.seed is not None:
        config.base_seed = args.seed
    if args.workers is not None:
        config.workers = args.workers
    results = run_experiment(config, args.out)
    print(f"wrote {len(results)} runs to {args.out}")
    return 0


def _cmd_list(args: argparse.Namespace) -> int:
    listing = registry_listing()
    for env in listing["environments"]:
        print(f"environment {env}")
    for learner in listing["mab_learners"]:
        print(f"mab_learner {learner}")
    for learner in listing["dueling_learners"]:
        print(f"dueling_learner {learner}")
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    path = replay(args.out)
    print(f"rebuilt {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sleeping-bandits",
        description="Benchmark harness for sleeping multi-armed and dueling bandits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("--config", required=True, type=Path, help="JSON config file")
    p_run.add_argument("--out", required=True, type=Path, help="output directory")
    p_run.add_argument("--runs", type=int, default=None, help="override run count")
    p_run.add_argument("--seed", type=int, default=None, help="override base seed")
    p_run.add_argument("--workers", type=int, default=None, help="parallel workers")
    p_run.set_defaults(func=_cmd_run)

    p_list = sub.add_parser("list", help="enumerate environments and learners")
    p_list.set_defaults(func=_cmd_list)

    p_replay = sub.add_parser("replay", help="re-emit aggregate.csv from stored runs")
    p_replay.add_argument("--out", required=True, type=Path, help="experiment directory")
    p_replay.set_defaults(func=_cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError, KeyError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
