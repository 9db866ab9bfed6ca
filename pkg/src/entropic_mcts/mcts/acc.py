"""Accumulated-utility UCT baseline.

Standard UCT on the problem whose only payoff is u(C) = exp(beta C) of the
total discounted cost C of the whole rollout (accrued plus future cost). Each
(node, action) keeps the mean of u normalised into [0, 1] by the analytic
range [exp(-beta R0), exp(beta R0)], and selection minimises
mean - c sqrt(ln N(s) / N(s, a)). With ``utility="linear"`` the same search
normalises C itself, which is plain risk-neutral UCT.
"""

from __future__ import annotations

import math

import numpy as np

from ..erm import ErmAccumulator, pooled_erm
from ..mdp import TabularMdp, next_state_from_uniform
from .tree import SearchResult, recommend, recommend_most_visited

RECOMMENDATIONS = ("visits", "value")

UTILITIES = ("exp", "linear")


def normalized_utility(cost: float, beta: float, bound: float, linear: bool) -> float:
    """Map a total cost in [-bound, bound] to [0, 1] through u(C) = exp(beta C) or C."""
    if linear:
        return (cost + bound) / (2.0 * bound)
    if 2.0 * beta * bound > 1.0:
        tail = math.exp(-2.0 * beta * bound)
        return (math.exp(beta * (cost - bound)) - tail) / (1.0 - tail)
    # small beta * bound: expm1 form avoids cancellation
    return math.exp(-2.0 * beta * bound) * math.expm1(beta * (cost + bound)) / -math.expm1(-2.0 * beta * bound)


class UtilityNode:
    __slots__ = ("state", "visits", "action_visits", "utility_sums", "children")

    def __init__(self, state: int, num_actions: int):
        self.state = state
        self.visits = 0
        self.action_visits = [0] * num_actions
        self.utility_sums = [0.0] * num_actions
        self.children: dict[tuple[int, int], UtilityNode] = {}


def uct_select(node: UtilityNode, c: float) -> int:
    for a, n_a in enumerate(node.action_visits):
        if n_a == 0:
            return a
    log_n = math.log(node.visits)
    best, best_score = -1, math.inf
    for a, n_a in enumerate(node.action_visits):
        score = node.utility_sums[a] / n_a - c * math.sqrt(log_n / n_a)
        if score < best_score:
            best, best_score = a, score
    return best


def acc_search_python(mdp: TabularMdp, beta: float, n: int, exploration_c: float, rng,
                      root_state: int, horizon: int, utility: str = "exp",
                      recommendation: str = "visits") -> SearchResult:
    linear = utility == "linear"
    A, gamma, H = mdp.num_actions, mdp.gamma, horizon
    bound = mdp.horizon_cost_bound(H)
    root = UtilityNode(root_state, A)
    root_accs = [ErmAccumulator(beta) for _ in range(A)]
    root_cost_sums = [0.0] * A
    trace = np.empty(n, dtype=np.int64)
    for i in range(n):
        path: list[tuple[UtilityNode, int]] = []
        node, s = root, root_state
        total, discount = 0.0, 1.0
        for h in range(H):
            a = uct_select(node, exploration_c)
            total += discount * float(mdp.stage_cost[s, a])
            discount *= gamma
            s2 = next_state_from_uniform(mdp, s, a, rng.random())
            path.append((node, a))
            if h < H - 1:
                child = node.children.get((a, s2))
                if child is None:
                    child = node.children[(a, s2)] = UtilityNode(s2, A)
                node = child
            s = s2
        total += discount * float(mdp.terminal_cost[s])
        u = normalized_utility(total, beta, bound, linear)
        for node, a in path:
            node.visits += 1
            node.action_visits[a] += 1
            node.utility_sums[a] += u
        a0 = path[0][1]
        root_accs[a0].update(total)
        root_cost_sums[a0] += total
        trace[i] = a0
    return _acc_result(root_accs, root_cost_sums, root.action_visits, root.utility_sums, n, trace, linear,
                       recommendation)


def _acc_result(root_accs, root_cost_sums, visits, utility_sums, n, trace, linear,
                recommendation="visits") -> SearchResult:
    visits = tuple(int(v) for v in visits)
    if linear:
        # risk-neutral: report plain means of the rollout costs
        values = tuple(c / v if v else math.nan for c, v in zip(root_cost_sums, visits))
        root_value = sum(root_cost_sums) / n
    else:
        values = tuple(acc.value() if acc.count else math.nan for acc in root_accs)
        root_value = pooled_erm(root_accs)
    # mean normalised utility is monotone in the per-action value
    mean_u = tuple(s / v if v else math.nan for s, v in zip(utility_sums, visits))
    pick = recommend_most_visited if recommendation == "visits" else recommend
    return SearchResult(
        root_value=root_value,
        recommended_action=pick(mean_u, visits),
        iterations=n,
        action_visits=visits,
        action_values=values,
        root_actions=trace,
        algorithm="uct" if linear else "acc-mcts",
    )
