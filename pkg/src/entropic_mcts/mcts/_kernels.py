"""Compiled versions of the two tree searches.

They replay the reference implementations operation for operation, reading
the transition uniforms from a pre-drawn ``(n, H)`` array in the same order
the reference draws them, so both backends give identical trees.

Nodes live in flat arrays. Children of (node, action) form a singly linked
list through ``child_head``/``sibling``; lists are short (at most |S|).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _find_or_add_child(node, a, s2, node_state, child_head, sibling, n_nodes):
    c = child_head[node, a]
    while c >= 0:
        if node_state[c] == s2:
            return c, n_nodes
        c = sibling[c]
    c = n_nodes
    node_state[c] = s2
    sibling[c] = child_head[node, a]
    child_head[node, a] = c
    return c, n_nodes + 1


@njit(cache=True, nogil=True)
def _draw(cdf, a, s, u):
    s2 = 0
    while cdf[a, s, s2] <= u:
        s2 += 1
    return s2


@njit(cache=True, nogil=True)
def erm_search_kernel(cdf, stage_cost, terminal_cost, gamma, betas, coef, texp, sexp,
                      root_state, uniforms, trace, root_visits, root_shift, root_scaled):
    n, H = uniforms.shape
    A = stage_cost.shape[1]
    max_nodes = 1 + n * max(H - 1, 0)
    node_state = np.empty(max_nodes, np.int64)
    node_visits = np.zeros(max_nodes, np.int64)
    sa_visits = np.zeros((max_nodes, A), np.int64)
    sa_shift = np.zeros((max_nodes, A))
    sa_scaled = np.zeros((max_nodes, A))
    child_head = np.full((max_nodes, A), -1, np.int64)
    sibling = np.full(max_nodes, -1, np.int64)
    path_node = np.empty(H, np.int64)
    path_action = np.empty(H, np.int64)
    path_state = np.empty(H, np.int64)

    node_state[0] = root_state
    n_nodes = 1
    for i in range(n):
        node = 0
        s = root_state
        for h in range(H):
            a = -1
            for b in range(A):
                if sa_visits[node, b] == 0:
                    a = b
                    break
            if a < 0:
                N = node_visits[node]
                best = math.inf
                for b in range(A):
                    nb = sa_visits[node, b]
                    value = (sa_shift[node, b] + math.log(sa_scaled[node, b]) - math.log(nb)) / betas[h]
                    score = value - coef[h] * N ** texp[h] / nb ** sexp[h]
                    if score < best:
                        best = score
                        a = b
            s2 = _draw(cdf, a, s, uniforms[i, h])
            path_node[h] = node
            path_action[h] = a
            path_state[h] = s
            if h < H - 1:
                node, n_nodes = _find_or_add_child(node, a, s2, node_state, child_head, sibling, n_nodes)
            s = s2
        trace[i] = path_action[0]
        x = terminal_cost[s]
        for h in range(H - 1, -1, -1):
            node = path_node[h]
            a = path_action[h]
            x = stage_cost[path_state[h], a] + gamma * x
            y = betas[h] * x
            if sa_visits[node, a] == 0:
                sa_shift[node, a] = y
                sa_scaled[node, a] = 1.0
            elif y > sa_shift[node, a]:
                sa_scaled[node, a] = sa_scaled[node, a] * math.exp(sa_shift[node, a] - y) + 1.0
                sa_shift[node, a] = y
            else:
                sa_scaled[node, a] += math.exp(y - sa_shift[node, a])
            sa_visits[node, a] += 1
            node_visits[node] += 1
    for b in range(A):
        root_visits[b] = sa_visits[0, b]
        root_shift[b] = sa_shift[0, b]
        root_scaled[b] = sa_scaled[0, b]
    return n_nodes


@njit(cache=True, nogil=True)
def _normalized_utility(cost, beta, bound, linear):
    if linear:
        return (cost + bound) / (2.0 * bound)
    if 2.0 * beta * bound > 1.0:
        tail = math.exp(-2.0 * beta * bound)
        return (math.exp(beta * (cost - bound)) - tail) / (1.0 - tail)
    return math.exp(-2.0 * beta * bound) * math.expm1(beta * (cost + bound)) / -math.expm1(-2.0 * beta * bound)


@njit(cache=True, nogil=True)
def acc_search_kernel(cdf, stage_cost, terminal_cost, gamma, beta, bound, linear, c_explore,
                      root_state, uniforms, trace, root_visits, root_usum, root_costs):
    """Fills per-action root statistics; ``root_costs[i]`` is the rollout cost of iteration i."""
    n, H = uniforms.shape
    A = stage_cost.shape[1]
    max_nodes = 1 + n * max(H - 1, 0)
    node_state = np.empty(max_nodes, np.int64)
    node_visits = np.zeros(max_nodes, np.int64)
    sa_visits = np.zeros((max_nodes, A), np.int64)
    sa_usum = np.zeros((max_nodes, A))
    child_head = np.full((max_nodes, A), -1, np.int64)
    sibling = np.full(max_nodes, -1, np.int64)
    path_node = np.empty(H, np.int64)
    path_action = np.empty(H, np.int64)

    node_state[0] = root_state
    n_nodes = 1
    for i in range(n):
        node = 0
        s = root_state
        total = 0.0
        discount = 1.0
        for h in range(H):
            a = -1
            for b in range(A):
                if sa_visits[node, b] == 0:
                    a = b
                    break
            if a < 0:
                log_n = math.log(node_visits[node])
                best = math.inf
                for b in range(A):
                    nb = sa_visits[node, b]
                    score = sa_usum[node, b] / nb - c_explore * math.sqrt(log_n / nb)
                    if score < best:
                        best = score
                        a = b
            total += discount * stage_cost[s, a]
            discount *= gamma
            s2 = _draw(cdf, a, s, uniforms[i, h])
            path_node[h] = node
            path_action[h] = a
            if h < H - 1:
                node, n_nodes = _find_or_add_child(node, a, s2, node_state, child_head, sibling, n_nodes)
            s = s2
        total += discount * terminal_cost[s]
        u = _normalized_utility(total, beta, bound, linear)
        for h in range(H):
            node = path_node[h]
            a = path_action[h]
            node_visits[node] += 1
            sa_visits[node, a] += 1
            sa_usum[node, a] += u
        trace[i] = path_action[0]
        root_costs[i] = total
    for b in range(A):
        root_visits[b] = sa_visits[0, b]
        root_usum[b] = sa_usum[0, b]
    return n_nodes
