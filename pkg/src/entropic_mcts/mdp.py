"""Tabular discounted finite-horizon MDPs with a generative-sample interface.

File format (``.mdp``), one record per line, ``#`` starts a comment::

    mdp 1
    states 4
    actions 2
    gamma 0.9
    horizon 100
    initial_state 0
    cost_bound 20.0
    transitions
    <action> <state> <next_state> <probability>
    ...
    costs
    <state> <action> <cost>
    ...
    terminal_costs
    <state> <cost>
    ...
    end

Transition entries that are omitted are zero. Every (state, action) stage
cost and every terminal cost must be listed. Floats are written with
``repr`` so a save/load round trip is exact. The ``end`` line is mandatory;
a file without it is treated as truncated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np

ROW_TOL = 1e-9
FORMAT_VERSION = 1

# MDP-4 state and action names
S0, S1, S2, S3 = 0, 1, 2, 3
RISKY, SAFE = 0, 1
MDP4_STATE_COSTS = (0.0, 5.0, 1.0, 20.0)


class MdpParseError(ValueError):
    """Malformed MDP file. Carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class MdpValidationError(ValueError):
    """An MDP violates one or more structural invariants."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid MDP:\n  " + "\n  ".join(self.errors))


class Transition(NamedTuple):
    next_state: int
    cost: float


@dataclass(frozen=True, eq=False)
class TabularMdp:
    """Finite-horizon discounted MDP.

    ``transition[a, s, s2]`` is P^a(s, s2), ``stage_cost[s, a]`` is applied at
    every depth h < horizon and ``terminal_cost[s]`` at depth ``horizon``.
    Arrays are made read-only on construction.
    """

    transition: np.ndarray
    stage_cost: np.ndarray
    terminal_cost: np.ndarray
    gamma: float
    horizon: int
    initial_state: int
    cost_bound: float

    def __post_init__(self):
        for name in ("transition", "stage_cost", "terminal_cost"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "initial_state", int(self.initial_state))
        object.__setattr__(self, "cost_bound", float(self.cost_bound))

    @property
    def num_states(self) -> int:
        return self.transition.shape[1]

    @property
    def num_actions(self) -> int:
        return self.transition.shape[0]

    @cached_property
    def transition_cdf(self) -> np.ndarray:
        """Inverse-CDF table for sampling: the first index with cdf > u is drawn.

        Entries from the last positive-probability state onwards are set to 2
        so rounding in the cumulative sum can never select a zero-probability
        tail state.
        """
        cdf = np.cumsum(self.transition, axis=-1)
        positive = self.transition > 0
        last = self.num_states - 1 - np.argmax(positive[..., ::-1], axis=-1)
        idx = np.arange(self.num_states)
        cdf = np.where(idx >= last[..., None], 2.0, cdf)
        cdf.setflags(write=False)
        return cdf

    def horizon_cost_bound(self, horizon: int | None = None) -> float:
        """Bound on |total discounted cost| over ``horizon`` steps plus the terminal cost."""
        H = self.horizon if horizon is None else horizon
        if self.gamma == 1.0:
            return self.cost_bound * (H + 1)
        return self.cost_bound * (1.0 - self.gamma ** (H + 1)) / (1.0 - self.gamma)

    def with_horizon(self, horizon: int) -> "TabularMdp":
        return TabularMdp(self.transition, self.stage_cost, self.terminal_cost,
                          self.gamma, horizon, self.initial_state, self.cost_bound)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TabularMdp):
            return NotImplemented
        return (
            self.gamma == other.gamma
            and self.horizon == other.horizon
            and self.initial_state == other.initial_state
            and self.cost_bound == other.cost_bound
            and np.array_equal(self.transition, other.transition)
            and np.array_equal(self.stage_cost, other.stage_cost)
            and np.array_equal(self.terminal_cost, other.terminal_cost)
        )

    __hash__ = None


def validate(mdp: TabularMdp) -> list[str]:
    """Return every violated invariant with its location. Empty list means valid."""
    errors: list[str] = []
    P, c, cH = mdp.transition, mdp.stage_cost, mdp.terminal_cost
    if P.ndim != 3 or P.shape[1] != P.shape[2]:
        return [f"transition must have shape (A, S, S), got {P.shape}"]
    A, S = P.shape[0], P.shape[1]
    if S < 1 or A < 1:
        return ["MDP needs at least one state and one action"]
    if c.shape != (S, A):
        errors.append(f"stage_cost must have shape ({S}, {A}), got {c.shape}")
    if cH.shape != (S,):
        errors.append(f"terminal_cost must have shape ({S},), got {cH.shape}")
    if not (0.0 < mdp.gamma <= 1.0):
        errors.append(f"gamma must lie in (0, 1], got {mdp.gamma}")
    if mdp.horizon < 1:
        errors.append(f"horizon must be a positive integer, got {mdp.horizon}")
    if not (0 <= mdp.initial_state < S):
        errors.append(f"initial_state {mdp.initial_state} out of range [0, {S})")
    R = mdp.cost_bound
    if not (R > 0.0) or not math.isfinite(R):
        errors.append(f"cost_bound must be a finite positive number, got {R}")
    for a in range(A):
        for s in range(S):
            row = P[a, s]
            if not np.all(np.isfinite(row)):
                errors.append(f"transition (a={a}, s={s}): non-finite entry")
                continue
            neg = np.flatnonzero(row < 0)
            if neg.size:
                errors.append(f"transition (a={a}, s={s}): negative probability at next state {int(neg[0])}")
            total = float(row.sum())
            if abs(total - 1.0) > ROW_TOL:
                errors.append(f"transition (a={a}, s={s}): row sums to {total!r}, expected 1")
    if c.shape == (S, A):
        for s, a in zip(*np.nonzero(~(np.abs(c) <= R))):
            errors.append(f"stage_cost (s={s}, a={a}) = {c[s, a]!r} outside [-{R}, {R}]")
    if cH.shape == (S,):
        for s in np.flatnonzero(~(np.abs(cH) <= R)):
            errors.append(f"terminal_cost (s={s}) = {cH[s]!r} outside [-{R}, {R}]")
    return errors


def ensure_valid(mdp: TabularMdp) -> TabularMdp:
    errors = validate(mdp)
    if errors:
        raise MdpValidationError(errors)
    return mdp


def _check_indices(mdp: TabularMdp, s: int, a: int) -> None:
    if not (0 <= s < mdp.num_states):
        raise ValueError(f"state {s} out of range [0, {mdp.num_states})")
    if not (0 <= a < mdp.num_actions):
        raise ValueError(f"action {a} out of range [0, {mdp.num_actions})")


def next_state_from_uniform(mdp: TabularMdp, s: int, a: int, u: float) -> int:
    """Inverse-CDF draw of the next state for a uniform ``u`` in [0, 1)."""
    return int(np.searchsorted(mdp.transition_cdf[a, s], u, side="right"))


def sample_transition(mdp: TabularMdp, s: int, a: int, rng: np.random.Generator) -> Transition:
    """Generative model: draw s' ~ P^a(s, .) and return it with the stage cost c(s, a)."""
    _check_indices(mdp, s, a)
    return Transition(next_state_from_uniform(mdp, s, a, rng.random()), float(mdp.stage_cost[s, a]))


def mdp4_factory(
    epsilon: float = 0.1,
    reset_prob: float = 0.1,
    *,
    gamma: float = 0.9,
    horizon: int = 100,
    reset_at_initial: bool = False,
    cost_scale: float = 1.0,
) -> TabularMdp:
    """Four-state risky/safe benchmark.

    At s0 the safe action leads to s1 (cost 5) and the risky action leads to
    s2 (cost 1) with probability 1 - epsilon, else to s3 (cost 20). s1..s3 are
    absorbing except for a reset to s0 with probability ``reset_prob`` that
    ignores the action. ``reset_at_initial`` also applies the reset at s0.
    ``cost_scale`` multiplies every cost and the cost bound.
    """
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must lie in (0, 1)")
    if not (0.0 <= reset_prob <= 1.0):
        raise ValueError("reset_prob must lie in [0, 1]")
    if not (cost_scale > 0.0):
        raise ValueError("cost_scale must be positive")
    P = np.zeros((2, 4, 4))
    P[SAFE, S0, S1] = 1.0
    P[RISKY, S0, S2] = 1.0 - epsilon
    P[RISKY, S0, S3] = epsilon
    if reset_at_initial:
        P[:, S0, :] *= 1.0 - reset_prob
        P[:, S0, S0] += reset_prob
    for s in (S1, S2, S3):
        P[:, s, s] = 1.0 - reset_prob
        P[:, s, S0] += reset_prob
    costs = cost_scale * np.array(MDP4_STATE_COSTS)
    stage = np.repeat(costs[:, None], 2, axis=1)
    return TabularMdp(P, stage, costs.copy(), gamma, horizon, S0, cost_scale * 20.0)


def random_mdp(num_states: int, num_actions: int, horizon: int, gamma: float,
               cost_bound: float, rng_seed=None) -> TabularMdp:
    """Random instance with row-stochastic transitions and uniform costs in [-R, R]."""
    if num_states < 1 or num_actions < 1 or horizon < 1:
        raise ValueError("sizes must be at least 1")
    rng = np.random.default_rng(rng_seed)
    weights = rng.uniform(0.05, 1.0, size=(num_actions, num_states, num_states))
    P = weights / weights.sum(axis=-1, keepdims=True)
    stage = rng.uniform(-cost_bound, cost_bound, size=(num_states, num_actions))
    terminal = rng.uniform(-cost_bound, cost_bound, size=num_states)
    return TabularMdp(P, stage, terminal, gamma, horizon, 0, cost_bound)


# -- serialisation ---------------------------------------------------------

_HEADER_KEYS = ("states", "actions", "gamma", "horizon", "initial_state", "cost_bound")


def dumps_mdp(mdp: TabularMdp) -> str:
    lines = [
        f"mdp {FORMAT_VERSION}",
        f"states {mdp.num_states}",
        f"actions {mdp.num_actions}",
        f"gamma {mdp.gamma!r}",
        f"horizon {mdp.horizon}",
        f"initial_state {mdp.initial_state}",
        f"cost_bound {mdp.cost_bound!r}",
        "transitions",
    ]
    for a, s, s2 in zip(*np.nonzero(mdp.transition)):
        lines.append(f"{a} {s} {s2} {float(mdp.transition[a, s, s2])!r}")
    lines.append("costs")
    for s in range(mdp.num_states):
        for a in range(mdp.num_actions):
            lines.append(f"{s} {a} {float(mdp.stage_cost[s, a])!r}")
    lines.append("terminal_costs")
    for s in range(mdp.num_states):
        lines.append(f"{s} {float(mdp.terminal_cost[s])!r}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_mdp(mdp: TabularMdp, path) -> None:
    Path(path).write_text(dumps_mdp(mdp))


def _parse_number(tok: str, kind, field: str, lineno: int):
    try:
        return kind(tok)
    except ValueError:
        raise MdpParseError(f"{field}: expected {kind.__name__}, got {tok!r}", lineno) from None


def loads_mdp(text: str, *, check: bool = True) -> TabularMdp:
    """Parse the ``.mdp`` text format. Raises before building any object."""
    header: dict[str, float] = {}
    section = None
    trans: list[tuple[int, int, int, float, int]] = []
    costs: dict[tuple[int, int], float] = {}
    terminal: dict[int, float] = {}
    seen_magic = ended = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ended:
            raise MdpParseError("content after 'end'", lineno)
        toks = line.split()
        if not seen_magic:
            if toks[0] != "mdp" or len(toks) != 2:
                raise MdpParseError("file must start with 'mdp <version>'", lineno)
            version = _parse_number(toks[1], int, "version", lineno)
            if version != FORMAT_VERSION:
                raise MdpParseError(f"unsupported format version {version}", lineno)
            seen_magic = True
            continue
        if len(toks) == 1 and toks[0] in ("transitions", "costs", "terminal_costs"):
            section = toks[0]
            continue
        if toks == ["end"]:
            ended = True
            continue
        if section is None:
            if len(toks) != 2 or toks[0] not in _HEADER_KEYS:
                raise MdpParseError(f"unknown header entry {line!r}", lineno)
            kind = float if toks[0] in ("gamma", "cost_bound") else int
            header[toks[0]] = _parse_number(toks[1], kind, toks[0], lineno)
        elif section == "transitions":
            if len(toks) != 4:
                raise MdpParseError("transition needs 'action state next_state probability'", lineno)
            a, s, s2 = (_parse_number(t, int, f, lineno) for t, f in zip(toks[:3], ("action", "state", "next_state")))
            p = _parse_number(toks[3], float, "probability", lineno)
            if not (p >= 0.0) or not math.isfinite(p):
                raise MdpParseError(f"probability must be finite and non-negative, got {p!r}", lineno)
            trans.append((a, s, s2, p, lineno))
        elif section == "costs":
            if len(toks) != 3:
                raise MdpParseError("cost needs 'state action cost'", lineno)
            s, a = _parse_number(toks[0], int, "state", lineno), _parse_number(toks[1], int, "action", lineno)
            costs[(s, a)] = _parse_number(toks[2], float, "cost", lineno)
        else:
            if len(toks) != 2:
                raise MdpParseError("terminal cost needs 'state cost'", lineno)
            terminal[_parse_number(toks[0], int, "state", lineno)] = _parse_number(toks[1], float, "cost", lineno)

    if not seen_magic:
        raise MdpParseError("empty file")
    if not ended:
        raise MdpParseError("missing 'end' line (file truncated?)")
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise MdpParseError(f"missing header entries: {', '.join(missing)}")
    S, A = int(header["states"]), int(header["actions"])
    if S < 1 or A < 1:
        raise MdpParseError("states and actions must be at least 1")

    P = np.zeros((A, S, S))
    for a, s, s2, p, lineno in trans:
        if not (0 <= a < A and 0 <= s < S and 0 <= s2 < S):
            raise MdpParseError(f"transition index out of range: ({a}, {s}, {s2})", lineno)
        P[a, s, s2] = p
    c = np.full((S, A), np.nan)
    for (s, a), v in costs.items():
        if not (0 <= s < S and 0 <= a < A):
            raise MdpParseError(f"cost index out of range: ({s}, {a})")
        c[s, a] = v
    if np.isnan(c).any():
        s, a = np.argwhere(np.isnan(c))[0]
        raise MdpParseError(f"missing stage cost for state {s}, action {a}")
    cH = np.full(S, np.nan)
    for s, v in terminal.items():
        if not 0 <= s < S:
            raise MdpParseError(f"terminal cost index out of range: {s}")
        cH[s] = v
    if np.isnan(cH).any():
        raise MdpParseError(f"missing terminal cost for state {int(np.flatnonzero(np.isnan(cH))[0])}")

    mdp = TabularMdp(P, c, cH, header["gamma"], header["horizon"], header["initial_state"], header["cost_bound"])
    return ensure_valid(mdp) if check else mdp


def load_mdp(path, *, check: bool = True) -> TabularMdp:
    return loads_mdp(Path(path).read_text(), check=check)
