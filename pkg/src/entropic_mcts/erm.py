"""Entropic risk measure: exact evaluation, streaming estimator and OCE form.

For a cost variable Z and risk aversion beta > 0,

    ERM_beta(Z) = (1/beta) * ln E[exp(beta * Z)]

which tends to E[Z] as beta -> 0 and to the worst case as beta grows.
Everything here works in log space with a max shift so large beta * cost
products never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

PROB_TOL = 1e-12


class EmptyEstimatorError(ValueError):
    """Raised when an estimate is requested from zero samples."""


def check_beta(beta: float) -> float:
    """Validate a risk parameter. beta = 0 is rejected, use a tiny value instead."""
    beta = float(beta)
    if not (beta > 0.0) or not math.isfinite(beta):
        raise ValueError(f"risk parameter beta must be a finite positive number, got {beta!r}")
    return beta


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finitely supported cost distribution given as (value, probability) pairs."""

    outcomes: tuple[tuple[float, float], ...]

    def __init__(self, outcomes: Iterable[tuple[float, float]]):
        pairs = tuple((float(v), float(p)) for v, p in outcomes)
        if not pairs:
            raise ValueError("distribution needs at least one outcome")
        for v, p in pairs:
            if not math.isfinite(v):
                raise ValueError(f"outcome value must be finite, got {v!r}")
            if not (p >= 0.0):
                raise ValueError(f"probability must be non-negative, got {p!r}")
        total = math.fsum(p for _, p in pairs)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1")
        object.__setattr__(self, "outcomes", pairs)

    @property
    def values(self) -> np.ndarray:
        return np.array([v for v, _ in self.outcomes])

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self.outcomes])

    def mean(self) -> float:
        return math.fsum(v * p for v, p in self.outcomes)


def log_mean_exp(values, weights=None, axis=-1):
    """ln(sum_i w_i exp(v_i)) with weights summing to one (uniform if omitted).

    Entries with zero weight are ignored, including for the max shift, so a
    huge value with zero probability cannot wipe out the rest.
    """
    values = np.asarray(values, dtype=float)
    if weights is None:
        n = values.shape[axis]
        if n == 0:
            raise EmptyEstimatorError("log_mean_exp of an empty array")
        shift = np.max(values, axis=axis, keepdims=True)
        total = np.sum(np.exp(values - shift), axis=axis, keepdims=True)
        out = np.log(total / n) + shift
    else:
        weights = np.broadcast_to(np.asarray(weights, dtype=float), values.shape)
        live = weights > 0.0
        masked = np.where(live, values, -np.inf)
        shift = np.max(masked, axis=axis, keepdims=True)
        with np.errstate(invalid="ignore"):
            terms = np.where(live, weights * np.exp(masked - shift), 0.0)
        out = np.log(np.sum(terms, axis=axis, keepdims=True)) + shift
    out = np.squeeze(out, axis=axis)
    return float(out) if out.ndim == 0 else out


def erm_exact(dist: DiscreteDistribution, beta: float) -> float:
    """Exact ERM_beta of a discrete distribution."""
    beta = check_beta(beta)
    return log_mean_exp(beta * dist.values, dist.probs) / beta


def erm_of_samples(samples, beta: float, axis=-1):
    """Empirical ERM_beta, (1/beta) ln((1/n) sum exp(beta x_t)), vectorised over ``axis``."""
    beta = check_beta(beta)
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise EmptyEstimatorError("ERM estimate of zero samples")
    return log_mean_exp(beta * samples, axis=axis) / beta


def depth_adjusted_beta(beta: float, gamma: float, depth: int) -> float:
    """Risk parameter used at tree depth ``depth``: beta * gamma**depth."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    return beta * gamma**depth


class ErmAccumulator:
    """Streaming empirical ERM of a cost sequence at a fixed beta.

    Keeps ln(sum_t exp(beta x_t)) as a running max ``shift`` plus a scaled sum,
    so memory is O(1) and no exponential ever exceeds 1.
    """

    __slots__ = ("beta", "count", "_shift", "_scaled")

    def __init__(self, beta: float):
        self.beta = check_beta(beta)
        self.count = 0
        self._shift = -math.inf
        self._scaled = 0.0

    def update(self, x: float) -> "ErmAccumulator":
        if not math.isfinite(x):
            raise ValueError(f"cost sample must be finite, got {x!r}")
        y = self.beta * x
        if self.count == 0:
            self._shift = y
            self._scaled = 1.0
        elif y > self._shift:
            self._scaled = self._scaled * math.exp(self._shift - y) + 1.0
            self._shift = y
        else:
            self._scaled += math.exp(y - self._shift)
        self.count += 1
        return self

    def extend(self, xs: Iterable[float]) -> "ErmAccumulator":
        for x in xs:
            self.update(x)
        return self

    @property
    def log_sum(self) -> float:
        """ln(sum_t exp(beta x_t)); -inf when empty."""
        if self.count == 0:
            return -math.inf
        return self._shift + math.log(self._scaled)

    def value(self) -> float:
        if self.count == 0:
            raise EmptyEstimatorError("ERM accumulator has no samples")
        return (self.log_sum - math.log(self.count)) / self.beta

    def copy(self) -> "ErmAccumulator":
        other = ErmAccumulator(self.beta)
        other.count, other._shift, other._scaled = self.count, self._shift, self._scaled
        return other

    def __repr__(self) -> str:
        return f"ErmAccumulator(beta={self.beta!r}, count={self.count}, log_sum={self.log_sum!r})"


def pooled_erm(accumulators: Sequence[ErmAccumulator]) -> float:
    """ERM of the union of several sample streams that share one beta.

    Equals (1/beta) ln((1/n) sum_i n_i exp(beta rho_i)) with rho_i each
    accumulator's own estimate.
    """
    live = [a for a in accumulators if a.count > 0]
    if not live:
        raise EmptyEstimatorError("no samples in any accumulator")
    beta = live[0].beta
    if any(a.beta != beta for a in live):
        raise ValueError("cannot pool accumulators with different beta")
    n = sum(a.count for a in live)
    logs = np.array([a.log_sum for a in live])
    shift = logs.max()
    total = shift + math.log(float(np.sum(np.exp(logs - shift))))
    return (total - math.log(n)) / beta


def oce_value(samples, beta: float, tolerance: float = 1e-10) -> float:
    """Empirical ERM through its optimized-certainty-equivalent form.

    Minimises h(lam) = lam + (1/n) sum u(x_t - lam), u(y) = (exp(beta y) - 1)/beta,
    by golden-section search. h is convex and its minimiser lies in
    [min(x), max(x)], so the bracket is exact.
    """
    beta = check_beta(beta)
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise EmptyEstimatorError("OCE value of zero samples")

    def h(lam: float) -> float:
        # expm1 keeps small-beta cases free of cancellation
        with np.errstate(over="ignore"):
            mean_u = float(np.mean(np.expm1(beta * (x - lam))))
        return lam + mean_u / beta

    lo, hi = float(x.min()), float(x.max())
    if hi - lo <= tolerance:
        return h(0.5 * (lo + hi))
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = h(c), h(d)
    while b - a > tolerance:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = h(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = h(d)
    return min(fc, fd, h(0.5 * (a + b)))
