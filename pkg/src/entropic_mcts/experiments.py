"""Benchmark harness: executed-policy ERM tables, iteration curves and bandit concentration checks.

Seeding. Seed ``k`` of a run owns two kinds of streams, both derived from a
:class:`numpy.random.SeedSequence` whose entropy is ``[k, *labels]`` with
each string label hashed by CRC-32 (see :func:`stream_seed`):

* the environment stream ``("env",)`` drives every executed transition and is
  shared by all algorithms and betas (common random numbers);
* the planner stream ``(algorithm, repr(beta), step)`` seeds the search run at
  environment step ``step``.

Adding an algorithm or a beta therefore never perturbs existing streams.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import subprocess
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .bandit import ConfigurationError, bernoulli_erm
from .dp import erm_backward_induction
from .erm import check_beta, erm_of_samples
from .mdp import TabularMdp, ensure_valid, load_mdp, mdp4_factory, next_state_from_uniform
from .mcts import acc_mcts_search, search

ALGORITHMS = ("erm-bi", "erm-mcts", "acc-mcts")
# MDP-4 costs divided by their bound 20, so every stage cost lies in [0, 1]
NORMALIZED_COST_SCALE = 1.0 / 20.0
SCHEMA_VERSION = 1
PER_SEED_HEADER = ("algorithm", "beta", "seed", "discounted_cost")
SUMMARY_HEADER = ("algorithm", "beta", "n", "erm", "ci_lo", "ci_hi")
OUT_ENV_VAR = "ENTROPIC_MCTS_OUT"
PROTOCOL = ("plan-then-execute: fresh search of n iterations from the current state at every step, "
            "horizon = remaining steps, root beta not re-adjusted; erm-bi executes its policy pi_k(s_k)")


def default_out_dir() -> Path | None:
    """Output directory from ``$ENTROPIC_MCTS_OUT``, or None when unset."""
    value = os.environ.get(OUT_ENV_VAR)
    return Path(value) if value else None


def stream_seed(seed: int, *labels) -> np.random.SeedSequence:
    """SeedSequence for ``seed`` split by ``labels`` (ints pass through, strings are CRC-32 hashed)."""
    words = [int(seed)]
    for label in labels:
        words.append(label if isinstance(label, int) else zlib.crc32(str(label).encode()))
    return np.random.SeedSequence(words)


@dataclass(frozen=True)
class ExperimentConfig:
    mdp: str = "mdp4"
    betas: tuple[float, ...] = (0.1, 0.5, 1.0)
    algorithms: tuple[str, ...] = ALGORITHMS
    iterations: int = 1000
    seeds: int = 100
    horizon: int | None = 100
    gamma: float | None = 0.9
    epsilon: float = 0.1
    reset_prob: float = 0.1
    cost_scale: float = NORMALIZED_COST_SCALE
    bootstrap: int = 10_000
    level: float = 0.95
    exploration_c: float = math.sqrt(2.0)
    workers: int = 1
    iteration_grid: tuple[int, ...] = (100, 300, 1000, 3000, 10_000)

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "iteration_grid", tuple(int(n) for n in self.iteration_grid))
        if self.seeds < 1:
            raise ConfigurationError("seeds must be at least 1")
        if self.bootstrap < 100:
            raise ConfigurationError("bootstrap resamples must be at least 100")
        if not 0.0 < self.level < 1.0:
            raise ConfigurationError("confidence level must lie in (0, 1)")
        if not self.betas:
            raise ConfigurationError("at least one beta is required")
        for b in self.betas:
            try:
                check_beta(b)
            except ValueError as exc:
                raise ConfigurationError(str(exc)) from None
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown or not self.algorithms:
            raise ConfigurationError(f"algorithms must be drawn from {ALGORITHMS}, got {self.algorithms}")
        if self.iterations < 1 or any(n < 1 for n in self.iteration_grid):
            raise ConfigurationError("iteration counts must be positive")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigurationError("horizon must be at least 1")
        if self.gamma is not None and not 0.0 < self.gamma <= 1.0:
            raise ConfigurationError("gamma must lie in (0, 1]")
        if self.workers < 1:
            raise ConfigurationError("workers must be at least 1")

    def build_mdp(self) -> TabularMdp:
        """The builtin benchmark, or a file MDP with optional gamma/horizon overrides."""
        if self.mdp in ("mdp4", "mdp-4"):
            try:
                return mdp4_factory(self.epsilon, self.reset_prob, gamma=0.9 if self.gamma is None else self.gamma,
                                    horizon=100 if self.horizon is None else self.horizon,
                                    cost_scale=self.cost_scale)
            except ValueError as exc:
                raise ConfigurationError(str(exc)) from None
        mdp = load_mdp(self.mdp)
        changes = {}
        if self.horizon is not None:
            changes["horizon"] = self.horizon
        if self.gamma is not None:
            changes["gamma"] = self.gamma
        return dataclasses.replace(mdp, **changes) if changes else mdp

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    per_seed: list[tuple[str, float, int, float]] = field(default_factory=list)
    summary: list[tuple[str, float, int, float, float, float]] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def costs(self, algorithm: str, beta: float) -> np.ndarray:
        return np.array([c for a, b, _, c in self.per_seed if a == algorithm and b == beta])

    def row(self, algorithm: str, beta: float, n: int | None = None) -> tuple:
        for r in self.summary:
            if r[0] == algorithm and r[1] == beta and (n is None or r[2] == n):
                return r
        raise KeyError((algorithm, beta, n))

    def point(self, algorithm: str, beta: float, n: int | None = None) -> float:
        return self.row(algorithm, beta, n)[3]

    def interval(self, algorithm: str, beta: float, n: int | None = None) -> tuple[float, float]:
        r = self.row(algorithm, beta, n)
        return r[4], r[5]

    def write(self, out_dir, stem: str = "table1") -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"per_seed": out / f"{stem}_per_seed.csv", "summary": out / f"{stem}_summary.csv",
                 "metadata": out / f"{stem}_metadata.json"}
        _write_csv(paths["per_seed"], PER_SEED_HEADER, self.per_seed)
        _write_csv(paths["summary"], SUMMARY_HEADER, self.summary)
        paths["metadata"].write_text(json.dumps(self.metadata, indent=2, sort_keys=True) + "\n")
        return paths


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def git_revision() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True, timeout=5,
                             cwd=Path(__file__).resolve().parent)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 else "unknown"


def _metadata(config: ExperimentConfig, mdp: TabularMdp, kind: str, wall: float) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "experiment": kind,
        "config": config.as_dict(),
        "epsilon": config.epsilon if config.mdp in ("mdp4", "mdp-4") else None,
        "gamma": mdp.gamma,
        "horizon": mdp.horizon,
        "protocol": PROTOCOL,
        "seeding": "env stream [seed, crc32('env')]; planner [seed, crc32(algorithm), crc32(repr(beta)), step]",
        "git_revision": git_revision(),
        "wall_time_s": wall,
    }


# ---------------------------------------------------------------------------
# bootstrap

def bootstrap_erm_ci(costs, beta: float, B: int = 10_000, level: float = 0.95,
                     rng_seed=0) -> tuple[float, float, float]:
    """Percentile bootstrap for the empirical ERM of ``costs``.

    The interval is widened to contain the point estimate when the percentile
    interval misses it (possible for strongly skewed samples).
    """
    x = np.asarray(costs, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("bootstrap needs at least two costs")
    if B < 1 or not 0.0 < level < 1.0:
        raise ValueError("need B >= 1 and level in (0, 1)")
    beta = check_beta(beta)
    point = float(erm_of_samples(x, beta))
    if np.all(x == x[0]):
        return point, point, point
    rng = np.random.default_rng(rng_seed)
    chunk = max(1, 2_000_000 // x.size)
    stats_ = np.empty(B)
    for start in range(0, B, chunk):
        stop = min(B, start + chunk)
        idx = rng.integers(0, x.size, size=(stop - start, x.size))
        stats_[start:stop] = erm_of_samples(x[idx], beta, axis=1)
    tail = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(stats_, [tail, 100.0 - tail])
    return point, float(min(lo, point)), float(max(hi, point))


# ---------------------------------------------------------------------------
# episodes

class _Planner:
    """Chooses the action at (step, state) for one algorithm and beta."""

    def __init__(self, mdp: TabularMdp, algorithm: str, beta: float, iterations: int, exploration_c: float):
        self.mdp, self.algorithm, self.beta = mdp, algorithm, beta
        self.iterations, self.exploration_c = iterations, exploration_c
        self.policy = erm_backward_induction(mdp, beta)[1] if algorithm == "erm-bi" else None

    def __call__(self, step: int, state: int, seed: int) -> int:
        if self.policy is not None:
            return self.policy(step, state)
        remaining = self.mdp.horizon - step
        planner_seed = stream_seed(seed, self.algorithm, repr(self.beta), step)
        n = max(self.iterations, self.mdp.num_actions)
        if self.algorithm == "erm-mcts":
            res = search(self.mdp, self.beta, n=n, rng_seed=planner_seed, root_state=state, horizon=remaining)
        else:
            res = acc_mcts_search(self.mdp, self.beta, n, self.exploration_c, planner_seed,
                                  root_state=state, horizon=remaining)
        return res.recommended_action


def run_episode(mdp: TabularMdp, planner, seed: int) -> float:
    """Execute one H-step episode; returns sum_h gamma^h c(s_h, a_h) + gamma^H c_H(s_H)."""
    env = np.random.default_rng(stream_seed(seed, "env"))
    s = mdp.initial_state
    total, discount = 0.0, 1.0
    for step in range(mdp.horizon):
        a = planner(step, s, seed)
        total += discount * float(mdp.stage_cost[s, a])
        discount *= mdp.gamma
        s = next_state_from_uniform(mdp, s, a, env.random())
    return total + discount * float(mdp.terminal_cost[s])


def _episodes(mdp, algorithm, beta, iterations, config) -> list[float]:
    planner = _Planner(mdp, algorithm, beta, iterations, config.exploration_c)
    seeds = range(config.seeds)
    if config.workers == 1:
        return [run_episode(mdp, planner, k) for k in seeds]
    with ThreadPoolExecutor(config.workers) as pool:
        return list(pool.map(lambda k: run_episode(mdp, planner, k), seeds))


def _summarize(costs, algorithm, beta, n, config, seed_label) -> tuple:
    point, lo, hi = bootstrap_erm_ci(costs, beta, config.bootstrap, config.level,
                                     stream_seed(0, "bootstrap", algorithm, repr(beta), seed_label))
    return algorithm, beta, n, point, lo, hi


def run_table1(config: ExperimentConfig) -> ExperimentResult:
    """Executed-policy ERM with bootstrap CIs for every (algorithm, beta)."""
    started = time.perf_counter()
    mdp = ensure_valid(config.build_mdp())
    result = ExperimentResult(config)
    for beta in config.betas:
        for algorithm in config.algorithms:
            costs = _episodes(mdp, algorithm, beta, config.iterations, config)
            result.per_seed.extend((algorithm, beta, k, c) for k, c in enumerate(costs))
            result.summary.append(_summarize(costs, algorithm, beta, config.iterations, config, "table1"))
    result.metadata = _metadata(config, mdp, "table1", time.perf_counter() - started)
    return result


def run_convergence_curve(config: ExperimentConfig) -> ExperimentResult:
    """Executed-policy ERM against the iteration budget; erm-bi rows repeat at every n as the reference line."""
    started = time.perf_counter()
    mdp = ensure_valid(config.build_mdp())
    result = ExperimentResult(config)
    for beta in config.betas:
        for algorithm in config.algorithms:
            fixed = None
            for n in config.iteration_grid:
                if algorithm == "erm-bi":
                    fixed = fixed or _episodes(mdp, algorithm, beta, n, config)
                    costs = fixed
                else:
                    costs = _episodes(mdp, algorithm, beta, n, config)
                    result.per_seed.extend((f"{algorithm}@{n}", beta, k, c) for k, c in enumerate(costs))
                result.summary.append(_summarize(costs, algorithm, beta, n, config, f"curve-{n}"))
            if fixed is not None:
                result.per_seed.extend(("erm-bi", beta, k, c) for k, c in enumerate(fixed))
    result.metadata = _metadata(config, mdp, "curve", time.perf_counter() - started)
    return result


# ---------------------------------------------------------------------------
# bandit concentration

def bernoulli_bandit_mdp(probs, low: float = 0.0, high: float = 1.0) -> TabularMdp:
    """One-step MDP whose root actions are Bernoulli-cost arms (cost ``high`` w.p. p, else ``low``).

    State 0 is the root; state 1 pays ``low`` and state 2 pays ``high`` as terminal costs.
    """
    probs = [float(p) for p in probs]
    K = len(probs)
    P = np.zeros((K, 3, 3))
    for a, p in enumerate(probs):
        P[a, 0, 1], P[a, 0, 2] = 1.0 - p, p
        P[a, 1, 1] = P[a, 2, 2] = 1.0
    bound = max(abs(low), abs(high), 1e-12)
    return TabularMdp(P, np.zeros((3, K)), np.array([0.0, low, high]), 1.0, 1, 0, bound)


@dataclass(frozen=True)
class ConcentrationConfig:
    probs: tuple[float, ...] = (0.2, 0.8)
    low: float = 0.0
    high: float = 1.0
    beta: float = 1.0
    runs: int = 500
    n_grid: tuple[int, ...] = (100, 1000, 10_000)
    tail_runs: int = 2000
    tail_n: int = 1000
    zs: tuple[float, ...] = (2.0, 4.0, 8.0)
    eta_prime: float = 0.5
    confidence: float = 0.99
    slope_threshold: float = -0.3
    seed: int = 0

    def __post_init__(self):
        check_beta(self.beta)
        if len(self.probs) < 2 or not all(0.0 <= p <= 1.0 for p in self.probs):
            raise ConfigurationError("need at least two arms with probabilities in [0, 1]")
        if not 0.0 < self.confidence < 1.0:
            raise ConfigurationError("confidence must lie in (0, 1)")
        for name in ("runs", "tail_runs"):
            m = getattr(self, name)
            if m < min_runs(self.confidence):
                raise ConfigurationError(
                    f"{name}={m} too small: a zero count must give a {self.confidence:.0%} upper bound "
                    f"of at most 0.05, which needs at least {min_runs(self.confidence)} runs")
        if len(self.n_grid) < 2 or min(self.n_grid) < len(self.probs):
            raise ConfigurationError("n_grid needs two or more budgets, each at least the number of arms")
        if self.tail_n < len(self.probs):
            raise ConfigurationError("tail_n must be at least the number of arms")


def min_runs(confidence: float, max_bound: float = 0.05) -> int:
    # one-sided Clopper-Pearson upper bound at k = 0 is 1 - (1 - confidence)^(1/M)
    return math.ceil(math.log(1.0 - confidence) / math.log(1.0 - max_bound))


def clopper_pearson_upper(k: int, m: int, confidence: float) -> float:
    """One-sided upper confidence bound for a binomial proportion."""
    if k >= m:
        return 1.0
    return float(stats.beta.ppf(confidence, k + 1, m - k))


@dataclass(frozen=True)
class ConcentrationReport:
    mu_star: float
    n_grid: tuple[int, ...]
    mean_abs_error: tuple[float, ...]
    slope: float
    zs: tuple[float, ...]
    tail_counts: tuple[int, ...]
    tail_runs: int
    tail_upper: tuple[float, ...]
    slope_ok: bool
    tails_monotone: bool
    tails_bounded: bool

    @property
    def passed(self) -> bool:
        return self.slope_ok and self.tails_monotone and self.tails_bounded

    def rows(self) -> list[tuple]:
        out = [("convergence", n, e, "") for n, e in zip(self.n_grid, self.mean_abs_error)]
        out += [("tail", z, k / self.tail_runs, u) for z, k, u in zip(self.zs, self.tail_counts, self.tail_upper)]
        return out


def loglog_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def run_concentration_suite(config: ConcentrationConfig = ConcentrationConfig()) -> ConcentrationReport:
    """Convergence slope of the root stream ERM and polynomial-tail shape of the weighted ERM.

    Each run is the one-step tree search on :func:`bernoulli_bandit_mdp`,
    which pulls arms exactly like the non-deterministic ERM bandit.
    """
    mdp = bernoulli_bandit_mdp(config.probs, config.low, config.high)
    mu_star = min(bernoulli_erm(p, config.beta, config.low, config.high) for p in config.probs)

    errors = []
    for n in config.n_grid:
        err = [abs(search(mdp, config.beta, n=n, rng_seed=stream_seed(config.seed, "conv", n, r)).root_value - mu_star)
               for r in range(config.runs)]
        errors.append(float(np.mean(err)))
    slope = loglog_slope(config.n_grid, errors)

    n = config.tail_n
    excess = np.empty(config.tail_runs)
    for r in range(config.tail_runs):
        res = search(mdp, config.beta, n=n, rng_seed=stream_seed(config.seed, "tail", r))
        weighted = sum(v * x for v, x in zip(res.action_visits, res.action_values)) / n
        excess[r] = n * weighted - n * mu_star
    scale = n ** config.eta_prime
    counts = tuple(int(np.sum(excess >= scale * z)) for z in config.zs)
    upper = tuple(clopper_pearson_upper(k, config.tail_runs, config.confidence) for k in counts)
    return ConcentrationReport(
        mu_star=mu_star, n_grid=config.n_grid, mean_abs_error=tuple(errors), slope=slope,
        zs=tuple(config.zs), tail_counts=counts, tail_runs=config.tail_runs, tail_upper=upper,
        slope_ok=slope <= config.slope_threshold,
        tails_monotone=all(a >= b for a, b in zip(counts, counts[1:])),
        tails_bounded=all(u < 1.0 for u in upper),
    )


# ---------------------------------------------------------------------------
# root-action votes

def root_action_votes(mdp: TabularMdp, beta: float, n: int, seeds: int, *, horizon: int | None = None,
                      algorithm: str = "erm-mcts") -> np.ndarray:
    """How often each root action is recommended over ``seeds`` independent searches."""
    votes = np.zeros(mdp.num_actions, dtype=np.int64)
    for k in range(seeds):
        rng_seed = stream_seed(k, "vote", algorithm, repr(beta))
        if algorithm == "erm-mcts":
            res = search(mdp, beta, n=n, rng_seed=rng_seed, horizon=horizon)
        else:
            res = acc_mcts_search(mdp, beta, n, rng_seed=rng_seed, horizon=horizon)
        votes[res.recommended_action] += 1
    return votes


def majority_action(votes) -> int:
    return int(np.argmax(votes))
