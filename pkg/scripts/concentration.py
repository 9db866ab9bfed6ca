"""Convergence slope and tail shape of the root estimate on a two-armed Bernoulli-cost bandit."""

from entropic_mcts.experiments import ConcentrationConfig, run_concentration_suite

if __name__ == "__main__":
    cfg = ConcentrationConfig()
    rep = run_concentration_suite(cfg)
    print(f"mu* = {rep.mu_star:.6f}")
    for n, e in zip(rep.n_grid, rep.mean_abs_error):
        print(f"  n={n:>6}: mean |stream ERM - mu*| = {e:.5f}")
    print(f"log-log slope {rep.slope:.3f} (threshold {cfg.slope_threshold})")
    for z, k, u in zip(rep.zs, rep.tail_counts, rep.tail_upper):
        print(f"  z={z:g}: {k}/{rep.tail_runs} exceedances, {cfg.confidence:.0%} upper bound {u:.4f}")
    print("PASS" if rep.passed else "FAIL")
