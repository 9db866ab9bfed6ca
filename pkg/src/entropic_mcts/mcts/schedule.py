"""Per-depth exploration parameters for the risk-aware tree search."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..bandit import BonusParams


class InfeasibleSchedule(ValueError):
    def __init__(self, message: str, depth: int, min_xi_terminal: float):
        self.depth = depth
        self.min_xi_terminal = min_xi_terminal
        super().__init__(message)


@dataclass(frozen=True)
class ParameterSchedule:
    """Bonus parameters for depths 1..H, stored at index h - 1.

    The bonus at a decision node of depth h uses the parameters of depth
    h + 1. With theta_h = 2^(xi_h/2) and alpha_h = eta (1 - eta) xi_h both
    modes produce the same bonus sqrt(2) N(s)^(eta(1-eta)) / N(s,a)^(1-eta);
    the theoretical mode additionally certifies the recursion
    xi_h = alpha_{h+1} - 1 with xi_h > 1 and alpha_h > 2 everywhere.
    """

    mode: str
    eta: float
    xi: tuple[float, ...]
    alpha: tuple[float, ...]
    theta: tuple[float, ...]

    @property
    def horizon(self) -> int:
        return len(self.xi)

    def params_at(self, depth: int) -> BonusParams:
        if not 1 <= depth <= self.horizon:
            raise IndexError(f"depth {depth} outside 1..{self.horizon}")
        i = depth - 1
        return BonusParams(theta=self.theta[i], xi=self.xi[i], alpha=self.alpha[i], eta=self.eta)

    def bonus_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(coefficient, t exponent, s exponent) indexed by the selecting node's depth 0..H-1."""
        ps = [self.params_at(h) for h in range(1, self.horizon + 1)]
        return (np.array([p.coefficient for p in ps]),
                np.array([p.t_exponent for p in ps]),
                np.array([p.s_exponent for p in ps]))


def practical_schedule(horizon: int, eta: float = 0.5, xi: float = 2.0) -> ParameterSchedule:
    """Depth-uniform schedule with theta_h = 2^(xi/2) and alpha_h/xi_h = eta (1 - eta)."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    p = BonusParams.practical(eta, xi)
    return ParameterSchedule("practical", eta, (p.xi,) * horizon, (p.alpha,) * horizon, (p.theta,) * horizon)


def min_terminal_xi(horizon: int, eta: float) -> float:
    """Infimum of xi_H for which the backward recursion stays feasible (strict bound)."""
    k = eta * (1.0 - eta)
    xi_lo = max(1.0, 2.0 / k)
    for _ in range(2, horizon + 1):
        alpha_lo = max(xi_lo + 1.0, 2.0)
        xi_lo = max(alpha_lo / k, 1.0)
    return xi_lo


def schedule_parameters(horizon: int, eta: float, xi_terminal: float) -> ParameterSchedule:
    """Backward recursion alpha_h = eta (1-eta) xi_h, xi_{h-1} = alpha_h - 1 from depth H.

    Raises :class:`InfeasibleSchedule` naming the first depth (scanning from
    the leaves) where xi_h > 1 or alpha_h > 2 fails.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if not 0.5 <= eta < 1.0:
        raise ValueError(f"eta must lie in [1/2, 1), got {eta}")
    if not xi_terminal > 1.0:
        raise ValueError(f"xi_terminal must exceed 1, got {xi_terminal}")
    k = eta * (1.0 - eta)
    xi = [0.0] * horizon
    alpha = [0.0] * horizon
    xi[-1] = float(xi_terminal)
    for h in range(horizon, 0, -1):
        i = h - 1
        if h < horizon:
            xi[i] = alpha[i + 1] - 1.0
        alpha[i] = k * xi[i]
        if not (xi[i] > 1.0 and alpha[i] > 2.0):
            hint = min_terminal_xi(horizon, eta)
            raise InfeasibleSchedule(
                f"schedule infeasible at depth {h}: xi={xi[i]!r}, alpha={alpha[i]!r} "
                f"(need xi > 1 and alpha > 2); xi_terminal must exceed {hint!r}",
                depth=h, min_xi_terminal=hint,
            )
    try:
        theta = tuple(2.0 ** (x / 2.0) for x in xi)
    except OverflowError:
        raise InfeasibleSchedule("theta = 2^(xi/2) overflows; use the practical schedule for long horizons",
                                 depth=horizon, min_xi_terminal=min_terminal_xi(horizon, eta)) from None
    return ParameterSchedule("theoretical", eta, tuple(xi), tuple(alpha), theta)
