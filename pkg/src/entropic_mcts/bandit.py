"""Risk-aware multi-armed bandits with polynomial lower-confidence bonuses.

Costs are minimised: each step picks the arm with the smallest
``ERM estimate - bonus``. Two regimes are supported:

* plain: pulling arm i yields a bounded cost x.
* non-deterministic: pulling arm i yields a deterministic cost c_i, a random
  next state s' and a cost x from that state; the arm's estimator sees the
  composite cost c_i + gamma * x.

Arms are callables ``arm(pull_index, rng)`` so non-stationary behaviour is
whatever the caller puts in them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .erm import EmptyEstimatorError, ErmAccumulator, check_beta, erm_of_samples, pooled_erm
from .mdp import TabularMdp, next_state_from_uniform


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class BonusParams:
    """Exploration bonus theta^(1/xi) * t^(alpha/xi) / s^(1-eta).

    The defaults give sqrt(2) * t^(1/4) / sqrt(s): eta = 1/2, theta = 2^(xi/2),
    alpha = xi/4 with xi = 2.
    """

    theta: float = 2.0
    xi: float = 2.0
    alpha: float = 0.5
    eta: float = 0.5

    def __post_init__(self):
        if not self.theta > 1.0:
            raise ValueError(f"theta must exceed 1, got {self.theta}")
        if not self.xi > 1.0:
            raise ValueError(f"xi must exceed 1, got {self.xi}")
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0.5 <= self.eta < 1.0:
            raise ValueError(f"eta must lie in [1/2, 1), got {self.eta}")

    @classmethod
    def practical(cls, eta: float = 0.5, xi: float = 2.0) -> "BonusParams":
        """theta = 2^(xi/2), alpha = eta (1 - eta) xi: bonus sqrt(2) t^(eta(1-eta)) / s^(1-eta)."""
        return cls(theta=2.0 ** (xi / 2.0), xi=xi, alpha=eta * (1.0 - eta) * xi, eta=eta)

    @property
    def coefficient(self) -> float:
        return self.theta ** (1.0 / self.xi)

    @property
    def t_exponent(self) -> float:
        return self.alpha / self.xi

    @property
    def s_exponent(self) -> float:
        return 1.0 - self.eta


def bonus(t: int, s: int, p: BonusParams) -> float:
    """b_{t,s} for global step count ``t`` and arm pull count ``s``."""
    if t < 1 or s < 1:
        raise ValueError("bonus needs t >= 1 and s >= 1")
    return p.coefficient * t**p.t_exponent / s**p.s_exponent


@dataclass
class ArmState:
    acc: ErmAccumulator
    next_state_counts: dict = field(default_factory=dict)
    # diagnostic per-next-state estimators at beta * gamma (non-deterministic regime)
    next_state_accs: dict = field(default_factory=dict)

    @property
    def pulls(self) -> int:
        return self.acc.count

    def value(self) -> float:
        return self.acc.value()


Arm = Callable[[int, np.random.Generator], object]


@dataclass
class BanditEnv:
    """K arms plus the metadata the estimators need.

    In the non-deterministic regime each arm returns ``(c, next_state, x)``.
    """

    arms: Sequence[Arm]
    cost_bound: float
    gamma: float = 1.0
    nondeterministic: bool = False

    @property
    def num_arms(self) -> int:
        return len(self.arms)


@dataclass
class BanditHistory:
    beta: float
    arms: list[ArmState]
    actions: list[int]
    costs: list[float]
    next_states: list[int | None]

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def pulls(self) -> list[int]:
        return [a.pulls for a in self.arms]


def select_arm(arms: Sequence[ArmState], t: int, p: BonusParams,
               rng: np.random.Generator | None = None, tie_break: str = "lowest") -> int:
    """Lowest-indexed unpulled arm first, then argmin of estimate minus bonus.

    ``t`` is the number of pulls made so far across all arms. With
    ``tie_break="random"`` exact ties are broken uniformly using ``rng``.
    """
    if not arms:
        raise ValueError("no arms to select from")
    for i, arm in enumerate(arms):
        if arm.pulls == 0:
            return i
    if t < 1:
        raise ValueError("t must be at least 1")
    scores = [arm.value() - bonus(t, arm.pulls, p) for arm in arms]
    if tie_break == "lowest":
        best, best_score = 0, scores[0]
        for i in range(1, len(scores)):
            if scores[i] < best_score:
                best, best_score = i, scores[i]
        return best
    if tie_break == "random":
        lo = min(scores)
        ties = [i for i, sc in enumerate(scores) if sc == lo]
        return ties[0] if len(ties) == 1 else int(ties[rng.integers(len(ties))])
    raise ValueError(f"unknown tie_break {tie_break!r}")


def run_bandit(env: BanditEnv, beta: float, p: BonusParams, n: int, rng_seed=None,
               tie_break: str = "lowest") -> BanditHistory:
    """Run the UCB-ERM rule for ``n`` pulls."""
    beta = check_beta(beta)
    K = env.num_arms
    if K < 1:
        raise ConfigurationError("bandit needs at least one arm")
    if n < K:
        raise ConfigurationError(f"n={n} is smaller than the number of arms K={K}")
    rng = np.random.default_rng(rng_seed)
    arms = [ArmState(ErmAccumulator(beta)) for _ in range(K)]
    hist = BanditHistory(beta, arms, [], [], [])
    for t in range(n):
        i = select_arm(arms, t, p, rng, tie_break)
        arm = arms[i]
        out = env.arms[i](arm.pulls, rng)
        if env.nondeterministic:
            c, s2, x = out
            cost = c + env.gamma * x
            arm.next_state_counts[s2] = arm.next_state_counts.get(s2, 0) + 1
            if s2 not in arm.next_state_accs:
                arm.next_state_accs[s2] = ErmAccumulator(beta * env.gamma)
            arm.next_state_accs[s2].update(x)
        else:
            cost, s2 = float(out), None
        arm.acc.update(cost)
        hist.actions.append(i)
        hist.costs.append(cost)
        hist.next_states.append(s2)
    return hist


def weighted_erm(history: BanditHistory) -> float:
    """Visit-weighted average of the per-arm estimates, (1/n) sum_i T_i rho_i."""
    if len(history) == 0:
        raise EmptyEstimatorError("empty bandit history")
    n = len(history)
    return math.fsum(a.pulls * a.value() for a in history.arms if a.pulls) / n


def stream_erm(history: BanditHistory, beta: float | None = None) -> float:
    """ERM of the pooled cost stream. Uses the arm accumulators when beta matches."""
    if len(history) == 0:
        raise EmptyEstimatorError("empty bandit history")
    if beta is None or beta == history.beta:
        return pooled_erm([a.acc for a in history.arms])
    return float(erm_of_samples(history.costs, beta))


# -- ready-made arms -------------------------------------------------------

def constant_arm(c: float) -> Arm:
    return lambda _t, _rng: c


def bernoulli_arm(p: float, low: float = 0.0, high: float = 1.0) -> Arm:
    """Cost ``high`` with probability p, else ``low``."""
    return lambda _t, rng: high if rng.random() < p else low


def mdp_root_arms(mdp: TabularMdp, state: int | None = None) -> BanditEnv:
    """The one-step problem at ``state`` as a non-deterministic bandit.

    Arm a costs c(s, a), draws s' by inverse CDF from one uniform and then
    pays the terminal cost c_H(s'). This matches a depth-1 tree search draw
    for draw.
    """
    s = mdp.initial_state if state is None else state

    def make(a):
        def arm(_t, rng):
            s2 = next_state_from_uniform(mdp, s, a, rng.random())
            return float(mdp.stage_cost[s, a]), s2, float(mdp.terminal_cost[s2])
        return arm

    return BanditEnv([make(a) for a in range(mdp.num_actions)], mdp.cost_bound,
                     mdp.gamma, nondeterministic=True)


def bernoulli_erm(p: float, beta: float, low: float = 0.0, high: float = 1.0) -> float:
    """Exact ERM of a two-point cost: (1/beta) ln((1-p) e^(beta low) + p e^(beta high))."""
    beta = check_beta(beta)
    hi, lo = beta * high, beta * low
    m = max(hi, lo)
    return (m + math.log((1 - p) * math.exp(lo - m) + p * math.exp(hi - m))) / beta
