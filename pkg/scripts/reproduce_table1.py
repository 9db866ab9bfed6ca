"""Executed-policy ERM on MDP-4 for ERM-BI, ERM-MCTS and Acc-MCTS (about 4 minutes on one core).

    python scripts/reproduce_table1.py --out results/table1
    python scripts/reproduce_table1.py --raw-costs --seeds 30   # costs in [0, 20] instead of [0, 1]
"""

import argparse
import dataclasses
from pathlib import Path

from entropic_mcts.experiments import ExperimentConfig, run_table1


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--raw-costs", action="store_true")
    p.add_argument("--out", type=Path, default=Path("results/table1"))
    args = p.parse_args()

    config = ExperimentConfig(seeds=args.seeds, iterations=args.iterations, workers=args.workers)
    if args.raw_costs:
        config = dataclasses.replace(config, cost_scale=1.0)
    result = run_table1(config)
    print(f"{'algorithm':<10} {'beta':>5} {'ERM':>8}  95% CI")
    for algorithm, beta, _, point, lo, hi in result.summary:
        print(f"{algorithm:<10} {beta:>5} {point:>8.4f}  [{lo:.4f}, {hi:.4f}]")
    paths = result.write(args.out)
    print("wrote", ", ".join(map(str, paths.values())))


if __name__ == "__main__":
    main()
