"""Reference (pure Python) implementation of the risk-aware tree search.

Decision nodes alternate implicitly with chance nodes: children are keyed by
``(action, next_state)``. Every simulation descends to depth H, then the
discounted cost-to-go x_h = c(s_h, a_h) + gamma x_{h+1} is pushed into the
ERM accumulator of each visited (node, action) pair at beta_h = beta gamma^h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..bandit import bonus
from ..erm import ErmAccumulator, depth_adjusted_beta, pooled_erm
from ..mdp import TabularMdp, next_state_from_uniform
from .schedule import ParameterSchedule


class DecisionNode:
    __slots__ = ("state", "depth", "beta", "visits", "action_visits", "accs", "children")

    def __init__(self, state: int, depth: int, beta: float, num_actions: int):
        self.state = state
        self.depth = depth
        self.beta = beta
        self.visits = 0
        self.action_visits = [0] * num_actions
        self.accs = [ErmAccumulator(beta) for _ in range(num_actions)]
        self.children: dict[tuple[int, int], DecisionNode] = {}

    def action_value(self, a: int) -> float:
        return self.accs[a].value()

    def iter_nodes(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(node.children.values())

    def __repr__(self) -> str:
        return f"DecisionNode(state={self.state}, depth={self.depth}, visits={self.visits})"


@dataclass(frozen=True)
class SearchResult:
    root_value: float
    recommended_action: int
    iterations: int
    action_visits: tuple[int, ...]
    action_values: tuple[float, ...]
    root_actions: np.ndarray
    algorithm: str = "erm-mcts"

    def as_record(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "iterations": self.iterations,
            "root_value": self.root_value,
            "recommended_action": self.recommended_action,
            "action_visits": list(self.action_visits),
            "action_values": list(self.action_values),
        }


def recommend(values, visits) -> int:
    """Lowest value among visited actions; ties go to the most visited, then lowest index."""
    best = None
    for a, (v, n) in enumerate(zip(values, visits)):
        if n == 0:
            continue
        key = (v, -n, a)
        if best is None or key < best:
            best = key
    if best is None:
        raise ValueError("no visited action to recommend")
    return best[2]


def recommend_most_visited(values, visits) -> int:
    """Most visited action; ties go to the lower value, then the lower index."""
    best = None
    for a, (v, n) in enumerate(zip(values, visits)):
        if n == 0:
            continue
        key = (-n, v, a)
        if best is None or key < best:
            best = key
    if best is None:
        raise ValueError("no visited action to recommend")
    return best[2]


def select_action(node: DecisionNode, schedule: ParameterSchedule) -> int:
    """Unvisited actions first (lowest index), then argmin of value minus bonus."""
    for a, n_a in enumerate(node.action_visits):
        if n_a == 0:
            return a
    p = schedule.params_at(node.depth + 1)
    best, best_score = -1, math.inf
    for a, n_a in enumerate(node.action_visits):
        score = node.accs[a].value() - bonus(node.visits, n_a, p)
        if score < best_score:
            best, best_score = a, score
    return best


def _simulate(root: DecisionNode, mdp: TabularMdp, schedule: ParameterSchedule,
              rng: np.random.Generator, H: int) -> tuple[float, int]:
    A, gamma = mdp.num_actions, mdp.gamma
    path: list[tuple[DecisionNode, int]] = []
    node = root
    s = root.state
    for h in range(H):
        a = select_action(node, schedule)
        s2 = next_state_from_uniform(mdp, s, a, rng.random())
        path.append((node, a))
        if h < H - 1:
            child = node.children.get((a, s2))
            if child is None:
                child = DecisionNode(s2, h + 1, depth_adjusted_beta(root.beta, gamma, h + 1), A)
                node.children[(a, s2)] = child
            node = child
        s = s2
    x = float(mdp.terminal_cost[s])
    for node, a in reversed(path):
        x = float(mdp.stage_cost[node.state, a]) + gamma * x
        node.accs[a].update(x)
        node.action_visits[a] += 1
        node.visits += 1
    return x, path[0][1]


def simulate_once(root: DecisionNode, mdp: TabularMdp, schedule: ParameterSchedule,
                  rng: np.random.Generator, horizon: int | None = None) -> float:
    """One descent to depth H plus backpropagation. Returns the root sample x_0.

    Consumes exactly ``horizon`` uniforms from ``rng``, one per transition.
    """
    H = mdp.horizon if horizon is None else horizon
    return _simulate(root, mdp, schedule, rng, H)[0]


def search_python(mdp: TabularMdp, beta: float, schedule: ParameterSchedule, n: int, rng,
                  root_state: int, horizon: int) -> tuple[SearchResult, DecisionNode]:
    root = DecisionNode(root_state, 0, beta, mdp.num_actions)
    trace = np.empty(n, dtype=np.int64)
    for i in range(n):
        trace[i] = _simulate(root, mdp, schedule, rng, horizon)[1]
    values = tuple(acc.value() if acc.count else math.nan for acc in root.accs)
    result = SearchResult(
        root_value=pooled_erm(root.accs),
        recommended_action=recommend(values, root.action_visits),
        iterations=n,
        action_visits=tuple(root.action_visits),
        action_values=values,
        root_actions=trace,
    )
    return result, root
