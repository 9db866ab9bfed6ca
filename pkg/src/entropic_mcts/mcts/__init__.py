"""Risk-aware Monte Carlo tree search and the accumulated-utility baseline.

``search`` and ``acc_mcts_search`` run on a compiled backend by default;
``backend="python"`` selects the reference implementation, which builds
inspectable :class:`DecisionNode` trees and produces identical results.
"""

from __future__ import annotations

import math

import numpy as np

from ..bandit import ConfigurationError
from ..erm import ErmAccumulator, check_beta, depth_adjusted_beta, pooled_erm
from ..mdp import TabularMdp, ensure_valid
from .acc import RECOMMENDATIONS, _acc_result, acc_search_python, normalized_utility, uct_select
from .schedule import (InfeasibleSchedule, ParameterSchedule, min_terminal_xi, practical_schedule,
                       schedule_parameters)
from .tree import (DecisionNode, SearchResult, recommend, recommend_most_visited, search_python, select_action,
                   simulate_once)

__all__ = [
    "DecisionNode", "InfeasibleSchedule", "ParameterSchedule", "SearchResult",
    "acc_mcts_search", "make_schedule", "min_terminal_xi", "normalized_utility", "practical_schedule",
    "recommend", "recommend_most_visited", "uct_select",
    "schedule_parameters", "search", "select_action", "simulate_once", "uct_search",
]

BACKENDS = ("compiled", "python")


def make_schedule(horizon: int, mode: str = "practical", eta: float = 0.5,
                  xi_terminal: float | None = None) -> ParameterSchedule:
    if mode == "practical":
        return practical_schedule(horizon, eta)
    if mode == "theoretical":
        if xi_terminal is None:
            raise ConfigurationError("theoretical mode needs xi_terminal")
        return schedule_parameters(horizon, eta, xi_terminal)
    raise ConfigurationError(f"unknown schedule mode {mode!r}")


def _prepare(mdp, n, root_state, horizon):
    ensure_valid(mdp)
    s0 = mdp.initial_state if root_state is None else int(root_state)
    H = mdp.horizon if horizon is None else int(horizon)
    if not 0 <= s0 < mdp.num_states:
        raise ConfigurationError(f"root state {s0} out of range")
    if H < 1:
        raise ConfigurationError("search horizon must be at least 1")
    if n < mdp.num_actions:
        raise ConfigurationError(f"n={n} iterations cannot visit all {mdp.num_actions} root actions")
    return s0, H


def search(mdp: TabularMdp, beta: float, schedule: ParameterSchedule | None = None, n: int = 1000,
           rng_seed=None, *, root_state: int | None = None, horizon: int | None = None,
           backend: str = "compiled") -> SearchResult:
    """Run ``n`` simulations of the risk-aware tree search from ``root_state``.

    ``root_value`` pools the root samples of all actions at beta; the
    recommendation is the action with the lowest root estimate (no bonus).
    ``rng_seed`` may be anything :func:`numpy.random.default_rng` accepts.
    """
    beta = check_beta(beta)
    s0, H = _prepare(mdp, n, root_state, horizon)
    schedule = practical_schedule(H) if schedule is None else schedule
    if schedule.horizon < H:
        raise ConfigurationError(f"schedule covers {schedule.horizon} depths, search needs {H}")
    rng = np.random.default_rng(rng_seed)
    if backend == "python":
        return search_python(mdp, beta, schedule, n, rng, s0, H)[0]
    if backend != "compiled":
        raise ConfigurationError(f"unknown backend {backend!r}")

    from ._kernels import erm_search_kernel

    uniforms = rng.random((n, H))
    coef, texp, sexp = (arr[:H] for arr in schedule.bonus_arrays())
    betas = np.array([depth_adjusted_beta(beta, mdp.gamma, h) for h in range(H)])
    A = mdp.num_actions
    trace = np.empty(n, np.int64)
    visits, shift, scaled = np.zeros(A, np.int64), np.zeros(A), np.zeros(A)
    erm_search_kernel(mdp.transition_cdf, mdp.stage_cost, mdp.terminal_cost, mdp.gamma, betas,
                      coef, texp, sexp, s0, uniforms, trace, visits, shift, scaled)
    accs = []
    for a in range(A):
        acc = ErmAccumulator(beta)
        if visits[a]:
            acc.count, acc._shift, acc._scaled = int(visits[a]), float(shift[a]), float(scaled[a])
        accs.append(acc)
    values = tuple(acc.value() if acc.count else math.nan for acc in accs)
    counts = tuple(int(v) for v in visits)
    return SearchResult(pooled_erm(accs), recommend(values, counts), n, counts, values, trace)


def acc_mcts_search(mdp: TabularMdp, beta: float, n: int = 1000, exploration_c: float = math.sqrt(2.0),
                    rng_seed=None, *, root_state: int | None = None, horizon: int | None = None,
                    backend: str = "compiled", utility: str = "exp", recommendation: str = "visits") -> SearchResult:
    """UCT on normalised exp(beta * total cost) utilities; ``root_value`` is (1/beta) ln(mean utility).

    ``recommendation="visits"`` returns the most visited root action (the usual
    UCT choice); ``"value"`` returns the lowest mean utility instead.
    """
    beta = check_beta(beta)
    s0, H = _prepare(mdp, n, root_state, horizon)
    if utility not in ("exp", "linear"):
        raise ConfigurationError(f"unknown utility {utility!r}")
    if recommendation not in RECOMMENDATIONS:
        raise ConfigurationError(f"unknown recommendation {recommendation!r}")
    rng = np.random.default_rng(rng_seed)
    if backend == "python":
        return acc_search_python(mdp, beta, n, exploration_c, rng, s0, H, utility, recommendation)
    if backend != "compiled":
        raise ConfigurationError(f"unknown backend {backend!r}")

    from ._kernels import acc_search_kernel

    linear = utility == "linear"
    uniforms = rng.random((n, H))
    A = mdp.num_actions
    trace = np.empty(n, np.int64)
    visits, usum, costs = np.zeros(A, np.int64), np.zeros(A), np.empty(n)
    acc_search_kernel(mdp.transition_cdf, mdp.stage_cost, mdp.terminal_cost, mdp.gamma, beta,
                      mdp.horizon_cost_bound(H), linear, float(exploration_c), s0, uniforms,
                      trace, visits, usum, costs)
    accs, cost_sums = [ErmAccumulator(beta) for _ in range(A)], [0.0] * A
    for a in range(A):
        mask = trace == a
        accs[a].extend(costs[mask])
        cost_sums[a] = sum(costs[mask].tolist())  # same order as the reference
    return _acc_result(accs, cost_sums, visits, usum, n, trace, linear, recommendation)


def uct_search(mdp: TabularMdp, n: int = 1000, exploration_c: float = math.sqrt(2.0), rng_seed=None,
               **kwargs) -> SearchResult:
    """Risk-neutral UCT with min-max normalised costs; ``root_value`` is the mean root cost."""
    return acc_mcts_search(mdp, 1.0, n, exploration_c, rng_seed, utility="linear", **kwargs)
