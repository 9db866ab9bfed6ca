"""Exact ground truth for risk-aware planning.

``erm_backward_induction`` solves the ERM Bellman optimality equations

    V_H(s) = c_H(s)
    V_h(s) = min_a ERM_{beta gamma^h}( c(s, a) + gamma V_{h+1}(S') ),  S' ~ P^a(s, .)

and the brute-force evaluators enumerate whole trajectories so the two can
be checked against each other on small instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .erm import DiscreteDistribution, check_beta, depth_adjusted_beta, erm_exact, log_mean_exp
from .mdp import TabularMdp, ensure_valid

DEFAULT_TERM_BUDGET = 10**6
DEFAULT_POLICY_BUDGET = 10**5


class EnumerationTooLarge(RuntimeError):
    """Brute-force enumeration would exceed its configured budget."""


@dataclass(frozen=True)
class ValueFunction:
    """``values[h, s]`` for h in 0..H and ``q_values[h, s, a]`` for h in 0..H-1."""

    values: np.ndarray
    q_values: np.ndarray

    def root(self, mdp: TabularMdp) -> float:
        return float(self.values[0, mdp.initial_state])


@dataclass(frozen=True)
class Policy:
    """Markovian deterministic policy, ``actions[h, s]`` for h in 0..H-1."""

    actions: np.ndarray

    def __call__(self, h: int, s: int) -> int:
        return int(self.actions[h, s])


def _lowest_argmin(q: np.ndarray) -> np.ndarray:
    # np.argmin already returns the first minimiser
    return np.argmin(q, axis=-1)


def erm_backward_induction(mdp: TabularMdp, beta: float) -> tuple[ValueFunction, Policy]:
    """Optimal ERM values and policy by backward induction, O(H S^2 A)."""
    beta = check_beta(beta)
    ensure_valid(mdp)
    H, S, A = mdp.horizon, mdp.num_states, mdp.num_actions
    P = mdp.transition.transpose(1, 0, 2)  # (S, A, S')
    V = np.empty((H + 1, S))
    Q = np.empty((H, S, A))
    pi = np.empty((H, S), dtype=np.int64)
    V[H] = mdp.terminal_cost
    for h in range(H - 1, -1, -1):
        b = depth_adjusted_beta(beta, mdp.gamma, h)
        outcomes = mdp.stage_cost[:, :, None] + mdp.gamma * V[h + 1][None, None, :]
        Q[h] = log_mean_exp(b * outcomes, P, axis=-1) / b
        pi[h] = _lowest_argmin(Q[h])
        V[h] = Q[h][np.arange(S), pi[h]]
    return ValueFunction(V, Q), Policy(pi)


def expected_backward_induction(mdp: TabularMdp) -> tuple[ValueFunction, Policy]:
    """Risk-neutral counterpart: minimise expected discounted cost."""
    ensure_valid(mdp)
    H, S, A = mdp.horizon, mdp.num_states, mdp.num_actions
    V = np.empty((H + 1, S))
    Q = np.empty((H, S, A))
    pi = np.empty((H, S), dtype=np.int64)
    V[H] = mdp.terminal_cost
    for h in range(H - 1, -1, -1):
        Q[h] = mdp.stage_cost + mdp.gamma * np.einsum("ast,t->sa", mdp.transition, V[h + 1])
        pi[h] = _lowest_argmin(Q[h])
        V[h] = Q[h][np.arange(S), pi[h]]
    return ValueFunction(V, Q), Policy(pi)


def evaluate_policy_expected(mdp: TabularMdp, policy: Policy) -> float:
    """Expected discounted cost of ``policy`` from s0 by standard policy evaluation."""
    S = mdp.num_states
    v = np.array(mdp.terminal_cost, dtype=float)
    for h in range(mdp.horizon - 1, -1, -1):
        acts = policy.actions[h]
        rows = mdp.transition[acts, np.arange(S)]
        v = mdp.stage_cost[np.arange(S), acts] + mdp.gamma * rows @ v
    return float(v[mdp.initial_state])


def trajectory_distribution(mdp: TabularMdp, policy: Policy,
                            budget: int = DEFAULT_TERM_BUDGET) -> DiscreteDistribution:
    """Every trajectory from s0 under ``policy`` with its probability and total discounted cost."""
    outcomes: list[tuple[float, float]] = []
    H, gamma = mdp.horizon, mdp.gamma
    stack = [(0, mdp.initial_state, 1.0, 0.0)]
    while stack:
        h, s, prob, cost = stack.pop()
        if h == H:
            if len(outcomes) >= budget:
                raise EnumerationTooLarge(f"more than {budget} trajectory terms")
            outcomes.append((cost + gamma**H * mdp.terminal_cost[s], prob))
            continue
        a = policy(h, s)
        step_cost = cost + gamma**h * mdp.stage_cost[s, a]
        row = mdp.transition[a, s]
        for s2 in np.flatnonzero(row > 0):
            stack.append((h + 1, int(s2), prob * row[s2], step_cost))
    # rounding in long products can drift the total by a few ulps
    total = math.fsum(p for _, p in outcomes)
    return DiscreteDistribution((v, p / total) for v, p in outcomes)


def brute_force_policy_erm(mdp: TabularMdp, policy: Policy, beta: float,
                           budget: int = DEFAULT_TERM_BUDGET) -> float:
    """ERM_beta of the total discounted cost of ``policy``, by full enumeration."""
    beta = check_beta(beta)
    return erm_exact(trajectory_distribution(mdp, policy, budget), beta)


def brute_force_optimal_erm(mdp: TabularMdp, beta: float,
                            policy_budget: int = DEFAULT_POLICY_BUDGET,
                            term_budget: int = DEFAULT_TERM_BUDGET) -> float:
    """Minimum over all Markovian deterministic policies of the exact policy ERM."""
    beta = check_beta(beta)
    H, S, A = mdp.horizon, mdp.num_states, mdp.num_actions
    n_policies = A ** (S * H)
    if n_policies > policy_budget:
        raise EnumerationTooLarge(f"{n_policies} policies exceed the budget of {policy_budget}")
    best = math.inf
    for flat in itertools.product(range(A), repeat=S * H):
        policy = Policy(np.array(flat, dtype=np.int64).reshape(H, S))
        best = min(best, brute_force_policy_erm(mdp, policy, beta, term_budget))
    return best


def root_action_threshold(mdp: TabularMdp, beta_lo: float, beta_hi: float,
                          tol: float = 1e-6) -> float:
    """Bisect for the beta at which the optimal root action changes.

    Requires the optimal action at ``beta_lo`` and ``beta_hi`` to differ.
    """
    def root_action(b):
        _, pi = erm_backward_induction(mdp, b)
        return pi(0, mdp.initial_state)

    a_lo, a_hi = root_action(beta_lo), root_action(beta_hi)
    if a_lo == a_hi:
        raise ValueError(f"root action is {a_lo} at both ends of [{beta_lo}, {beta_hi}]")
    lo, hi = beta_lo, beta_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if root_action(mid) == a_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
