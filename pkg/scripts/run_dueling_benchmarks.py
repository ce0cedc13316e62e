#!/usr/bin/env python3
"""Run the sleeping dueling-bandit benchmarks for both sparring learners."""

import argparse
from pathlib import Path

from sleeping_bandits.harness import ExperimentConfig, run_experiment

ENVIRONMENTS = ["duel_utility", "duel_categories"]
LEARNERS = ["sp_si_exp3", "sp_ucb"]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--horizon", type=int, default=10_000)
    parser.add_argument("--runs", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=2)
    parser.add_argument("--out", type=Path, default=Path("out/dueling"))
    args = parser.parse_args()

    for env in ENVIRONMENTS:
        for learner in LEARNERS:
            cfg = ExperimentConfig(
                environment=env,
                learner=learner,
                horizon=args.horizon,
                runs=args.runs,
                base_seed=args.seed,
                workers=args.workers,
            )
            out_dir = args.out / env / learner
            run_experiment(cfg, out_dir)
            print(f"{env}/{learner}: wrote {out_dir}/aggregate.csv")


if __name__ == "__main__":
    main()
