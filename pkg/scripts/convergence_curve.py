"""Executed-policy ERM against the search budget on MDP-4 at beta = 0.5 (ERM-BI as the reference line)."""

import argparse
from pathlib import Path

from entropic_mcts.experiments import ExperimentConfig, run_convergence_curve


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--seeds", type=int, default=30)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--grid", type=int, nargs="+", default=[30, 100, 300, 1000])
    p.add_argument("--out", type=Path, default=Path("results/curve"))
    args = p.parse_args()

    config = ExperimentConfig(betas=(args.beta,), seeds=args.seeds, iteration_grid=tuple(args.grid))
    result = run_convergence_curve(config)
    for algorithm, beta, n, point, lo, hi in result.summary:
        print(f"{algorithm:<10} n={n:>6} {point:.4f} [{lo:.4f}, {hi:.4f}]")
    result.write(args.out, "curve")


if __name__ == "__main__":
    main()
