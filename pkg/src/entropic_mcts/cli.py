"""Command line entry point: ``python -m entropic_mcts <command> ...``.

Exit codes: 0 success, 1 invalid input or usage, 2 runtime failure.
Output files go to ``--out`` or, when omitted, to ``$ENTROPIC_MCTS_OUT`` if set.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

from . import experiments as ex
from .bandit import ConfigurationError
from .dp import erm_backward_induction
from .mcts import acc_mcts_search, search
from .mdp import MdpParseError, MdpValidationError, load_mdp, validate

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _positive_float(text: str) -> float:
    value = float(text)
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _add_mdp_args(p: argparse.ArgumentParser, horizon=None, gamma=None, cost_scale=1.0) -> None:
    p.add_argument("--mdp", default="mdp4", help="'mdp4' for the builtin benchmark or a path to a .mdp file")
    p.add_argument("--horizon", type=int, default=horizon)
    p.add_argument("--gamma", type=float, default=gamma)
    p.add_argument("--epsilon", type=float, default=0.1, help="mdp4 tail probability of the risky action")
    p.add_argument("--reset-prob", type=float, default=0.1)
    p.add_argument("--cost-scale", type=float, default=cost_scale, help="mdp4 cost multiplier")


def _add_experiment_args(p: argparse.ArgumentParser) -> None:
    _add_mdp_args(p, horizon=100, gamma=0.9, cost_scale=ex.NORMALIZED_COST_SCALE)
    p.add_argument("--beta", type=_positive_float, nargs="+", default=[0.1, 0.5, 1.0])
    p.add_argument("--algorithms", nargs="+", choices=ex.ALGORITHMS, default=list(ex.ALGORITHMS))
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--bootstrap", type=int, default=10_000)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--exploration-c", type=float, default=math.sqrt(2.0))
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="entropic-mcts", description="Entropic-risk planning experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="exact ERM backward induction")
    _add_mdp_args(p)
    p.add_argument("--beta", type=_positive_float, required=True)
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("plan", help="one search from a state")
    _add_mdp_args(p)
    p.add_argument("--beta", type=_positive_float, required=True)
    p.add_argument("--algorithm", choices=("erm-mcts", "acc-mcts"), default="erm-mcts")
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--state", type=int, default=None)
    p.add_argument("--backend", choices=("compiled", "python"), default="compiled")

    p = sub.add_parser("table1", help="executed-policy ERM table with bootstrap CIs")
    _add_experiment_args(p)
    p.add_argument("--iterations", type=int, default=1000)

    p = sub.add_parser("curve", help="executed-policy ERM against the iteration budget")
    _add_experiment_args(p)
    p.add_argument("--grid", type=int, nargs="+", default=[100, 300, 1000, 3000, 10_000])

    p = sub.add_parser("concentration", help="bandit convergence slope and tail-shape checks")
    p.add_argument("--probs", type=float, nargs="+", default=[0.2, 0.8])
    p.add_argument("--beta", type=_positive_float, default=1.0)
    p.add_argument("--runs", type=int, default=500)
    p.add_argument("--n-grid", type=int, nargs="+", default=[100, 1000, 10_000])
    p.add_argument("--tail-runs", type=int, default=2000)
    p.add_argument("--tail-n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("validate-mdp", help="check a .mdp file")
    p.add_argument("path", type=Path)
    return parser


def _out_dir(args) -> Path | None:
    if getattr(args, "out", None) is not None:
        return args.out
    return ex.default_out_dir()


def _mdp_from_args(args):
    cfg = ex.ExperimentConfig(mdp=args.mdp, horizon=args.horizon, gamma=args.gamma, epsilon=args.epsilon,
                              reset_prob=args.reset_prob, cost_scale=args.cost_scale, betas=(1.0,), seeds=1)
    return cfg.build_mdp()


def _experiment_config(args, **extra) -> ex.ExperimentConfig:
    return ex.ExperimentConfig(
        mdp=args.mdp, betas=tuple(args.beta), algorithms=tuple(args.algorithms), seeds=args.seeds,
        horizon=args.horizon, gamma=args.gamma, epsilon=args.epsilon, reset_prob=args.reset_prob,
        cost_scale=args.cost_scale, bootstrap=args.bootstrap, level=args.level,
        exploration_c=args.exploration_c, workers=args.workers, **extra)


def _print_summary(result: ex.ExperimentResult) -> None:
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(ex.SUMMARY_HEADER)
    writer.writerows(result.summary)


def cmd_solve(args) -> int:
    mdp = _mdp_from_args(args)
    values, policy = erm_backward_induction(mdp, args.beta)
    s0 = mdp.initial_state
    print(f"V0(s0) = {values.root(mdp)!r}")
    print(f"root action = {int(policy.actions[0, s0])}")
    print("root Q = " + ", ".join(repr(float(q)) for q in values.q_values[0, s0]))
    out = _out_dir(args)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "solve_policy.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("depth", "state", "action", "value"))
            for h in range(mdp.horizon):
                for s in range(mdp.num_states):
                    w.writerow((h, s, int(policy.actions[h, s]), float(values.values[h, s])))
        meta = {"schema_version": ex.SCHEMA_VERSION, "experiment": "solve", "mdp": args.mdp, "beta": args.beta,
                "horizon": mdp.horizon, "gamma": mdp.gamma, "root_value": values.root(mdp),
                "git_revision": ex.git_revision()}
        (out / "solve_metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_plan(args) -> int:
    mdp = _mdp_from_args(args)
    if args.algorithm == "erm-mcts":
        res = search(mdp, args.beta, n=args.iterations, rng_seed=args.seed, root_state=args.state,
                     backend=args.backend)
    else:
        res = acc_mcts_search(mdp, args.beta, args.iterations, rng_seed=args.seed, root_state=args.state,
                              backend=args.backend)
    print(json.dumps(res.as_record(), indent=2))
    return EXIT_OK


def _run_experiment(args, runner, stem, **extra) -> int:
    config = _experiment_config(args, **extra)
    result = runner(config)
    _print_summary(result)
    out = _out_dir(args)
    if out is not None:
        paths = result.write(out, stem)
        print(f"wrote {', '.join(str(p) for p in paths.values())}", file=sys.stderr)
    return EXIT_OK


def cmd_concentration(args) -> int:
    cfg = ex.ConcentrationConfig(probs=tuple(args.probs), beta=args.beta, runs=args.runs, n_grid=tuple(args.n_grid),
                                 tail_runs=args.tail_runs, tail_n=args.tail_n, seed=args.seed)
    started = time.perf_counter()
    report = ex.run_concentration_suite(cfg)
    wall = time.perf_counter() - started
    print(f"mu* = {report.mu_star!r}")
    for n, e in zip(report.n_grid, report.mean_abs_error):
        print(f"n={n}: mean |stream - mu*| = {e:.6g}")
    print(f"log-log slope = {report.slope:.4f} ({'PASS' if report.slope_ok else 'FAIL'} vs {cfg.slope_threshold})")
    for z, k, u in zip(report.zs, report.tail_counts, report.tail_upper):
        print(f"z={z:g}: tail frequency {k}/{report.tail_runs}, {cfg.confidence:.0%} upper bound {u:.4f}")
    print(f"tails monotone: {report.tails_monotone}; tails bounded below 1: {report.tails_bounded}")
    out = _out_dir(args)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "concentration.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("check", "x", "value", "upper_bound"))
            w.writerows(report.rows())
        meta = {"schema_version": ex.SCHEMA_VERSION, "experiment": "concentration", "slope": report.slope,
                "passed": report.passed, "wall_time_s": wall, "git_revision": ex.git_revision()}
        (out / "concentration_metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if report.passed else EXIT_RUNTIME


def cmd_validate(args) -> int:
    try:
        mdp = load_mdp(args.path, check=False)
    except MdpParseError as exc:
        print(f"{args.path}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    errors = validate(mdp)
    if errors:
        for e in errors:
            print(f"{args.path}: {e}", file=sys.stderr)
        return EXIT_INVALID
    print(f"{args.path}: ok ({mdp.num_states} states, {mdp.num_actions} actions, horizon {mdp.horizon})")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "plan": cmd_plan,
    "table1": lambda a: _run_experiment(a, ex.run_table1, "table1", iterations=a.iterations),
    "curve": lambda a: _run_experiment(a, ex.run_convergence_curve, "curve", iteration_grid=tuple(a.grid)),
    "concentration": cmd_concentration,
    "validate-mdp": cmd_validate,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, MdpParseError, MdpValidationError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
