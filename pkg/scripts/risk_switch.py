"""Root action of MDP-4 (H=10) across beta: the exact DP argmin next to majority votes of the tree search."""

import argparse

import numpy as np

from entropic_mcts.dp import erm_backward_induction, root_action_threshold
from entropic_mcts.experiments import NORMALIZED_COST_SCALE, majority_action, root_action_votes
from entropic_mcts.mdp import mdp4_factory

NAMES = {0: "risky", 1: "safe"}


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--iterations", type=int, default=10_000)
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--cost-scale", type=float, default=NORMALIZED_COST_SCALE)
    p.add_argument("--betas", type=float, nargs="+", default=[0.01, 0.1, 0.3, 0.5, 1.0, 2.0])
    args = p.parse_args()

    m = mdp4_factory(0.1, horizon=10, cost_scale=args.cost_scale)
    print(f"DP switch point: beta = {root_action_threshold(m, 1e-3, 5.0):.4f}")
    print(f"{'beta':>6} {'DP':>6} {'search':>7}  votes (risky, safe)")
    for beta in args.betas:
        dp = int(erm_backward_induction(m, beta)[1](0, 0))
        votes = root_action_votes(m, beta, args.iterations, args.seeds)
        mark = "" if majority_action(votes) == dp else "  <- disagrees"
        print(f"{beta:>6g} {NAMES[dp]:>6} {NAMES[majority_action(votes)]:>7}  {np.asarray(votes).tolist()}{mark}")


if __name__ == "__main__":
    main()
