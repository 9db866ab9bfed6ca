import csv
import dataclasses
import json
import math

import numpy as np
import pytest

from entropic_mcts.bandit import ConfigurationError, bernoulli_erm
from entropic_mcts.dp import erm_backward_induction
from entropic_mcts.erm import erm_of_samples
from entropic_mcts.experiments import (PER_SEED_HEADER, SCHEMA_VERSION, SUMMARY_HEADER, ConcentrationConfig,
                                       ExperimentConfig, bernoulli_bandit_mdp, bootstrap_erm_ci,
                                       clopper_pearson_upper, loglog_slope, majority_action, min_runs,
                                       root_action_votes, run_concentration_suite, run_convergence_curve,
                                       run_table1, stream_seed)
from entropic_mcts.mdp import next_state_from_uniform, save_mdp

LN_HALF_1_PLUS_E = math.log((1 + math.e) / 2)

SMALL = ExperimentConfig(betas=(0.5,), iterations=50, seeds=6, horizon=8, bootstrap=200)


class TestBootstrap:
    def test_constant_costs(self):
        assert bootstrap_erm_ci([2.0] * 20, 1.0) == (2.0, 2.0, 2.0)

    def test_two_point_sample(self):
        point, lo, hi = bootstrap_erm_ci([0.0, 1.0] * 50, 1.0, B=2000)
        assert point == pytest.approx(0.620115, abs=1e-6)
        assert lo < point < hi

    def test_seeded(self):
        x = np.random.default_rng(0).normal(size=30)
        assert bootstrap_erm_ci(x, 0.5, 500, rng_seed=3) == bootstrap_erm_ci(x, 0.5, 500, rng_seed=3)

    def test_validation(self):
        with pytest.raises(ValueError):
            bootstrap_erm_ci([1.0], 1.0)
        with pytest.raises(ValueError):
            bootstrap_erm_ci([1.0, 2.0], 1.0, level=1.0)

    @pytest.mark.slow
    def test_coverage(self):
        rng = np.random.default_rng(7)
        hits = 0
        datasets = 500
        for k in range(datasets):
            x = (rng.random(100) < 0.5).astype(float)
            _, lo, hi = bootstrap_erm_ci(x, 1.0, B=1000, rng_seed=k)
            hits += lo <= LN_HALF_1_PLUS_E <= hi
        assert abs(hits / datasets - 0.95) <= 0.03


class TestSeeding:
    def test_labels_split_streams(self):
        a = np.random.default_rng(stream_seed(0, "env")).random(4)
        b = np.random.default_rng(stream_seed(0, "erm-mcts", "0.5", 0)).random(4)
        c = np.random.default_rng(stream_seed(1, "env")).random(4)
        assert not np.allclose(a, b) and not np.allclose(a, c)

    def test_stable(self):
        assert stream_seed(3, "env").entropy == stream_seed(3, "env").entropy
        assert (np.random.default_rng(stream_seed(3, "env")).random()
                == np.random.default_rng(stream_seed(3, "env")).random())

    def test_adding_an_algorithm_leaves_others_unchanged(self):
        one = run_table1(dataclasses.replace(SMALL, algorithms=("erm-mcts",)))
        two = run_table1(dataclasses.replace(SMALL, algorithms=("acc-mcts", "erm-mcts")))
        assert one.costs("erm-mcts", 0.5).tolist() == two.costs("erm-mcts", 0.5).tolist()


class TestConfig:
    @pytest.mark.parametrize("kw", [{"seeds": 0}, {"betas": (0.0,)}, {"betas": ()}, {"algorithms": ("dqn",)},
                                    {"bootstrap": 10}, {"level": 1.5}, {"horizon": 0}, {"gamma": 0.0},
                                    {"workers": 0}, {"iterations": 0}])
    def test_rejects(self, kw):
        with pytest.raises(ConfigurationError):
            ExperimentConfig(**kw)

    def test_bad_epsilon(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig(epsilon=2.0).build_mdp()

    def test_file_mdp_overrides(self, tmp_path):
        base = ExperimentConfig(horizon=5).build_mdp()
        save_mdp(base, tmp_path / "m.mdp")
        m = ExperimentConfig(mdp=str(tmp_path / "m.mdp"), horizon=3, gamma=0.5).build_mdp()
        assert (m.horizon, m.gamma) == (3, 0.5)

    def test_default_is_normalized(self):
        assert ExperimentConfig().build_mdp().cost_bound == pytest.approx(1.0)


@pytest.fixture(scope="module")
def result():
    return run_table1(SMALL)


class TestTable1:
    def test_shape(self, result):
        assert [r[0] for r in result.summary] == ["erm-bi", "erm-mcts", "acc-mcts"]
        assert len(result.per_seed) == 3 * SMALL.seeds
        for algorithm, beta, n, point, lo, hi in result.summary:
            assert lo <= point <= hi and n == SMALL.iterations
            assert point == pytest.approx(float(erm_of_samples(result.costs(algorithm, beta), beta)))

    def test_erm_bi_is_executed_policy(self, result):
        # independent re-run of the optimal policy against the shared environment stream
        m = SMALL.build_mdp()
        _, pi = erm_backward_induction(m, 0.5)
        expected = []
        for k in range(SMALL.seeds):
            env = np.random.default_rng(stream_seed(k, "env"))
            s, total = m.initial_state, 0.0
            for h in range(m.horizon):
                a = pi(h, s)
                total += m.gamma**h * m.stage_cost[s, a]
                s = next_state_from_uniform(m, s, a, env.random())
            expected.append(total + m.gamma**m.horizon * m.terminal_cost[s])
        assert result.costs("erm-bi", 0.5) == pytest.approx(expected, abs=1e-12)

    def test_erm_bi_approaches_dp_value(self):
        cfg = ExperimentConfig(betas=(0.5,), algorithms=("erm-bi",), seeds=4000, horizon=6, bootstrap=500)
        r = run_table1(cfg)
        V, _ = erm_backward_induction(cfg.build_mdp(), 0.5)
        lo, hi = r.interval("erm-bi", 0.5)
        assert lo - 0.02 <= V.root(cfg.build_mdp()) <= hi + 0.02

    def test_files_and_determinism(self, result, tmp_path):
        again = run_table1(SMALL)
        a, b = result.write(tmp_path / "a"), again.write(tmp_path / "b")
        for key in ("per_seed", "summary"):
            assert a[key].read_bytes() == b[key].read_bytes()
        with open(a["summary"]) as fh:
            assert tuple(next(csv.reader(fh))) == SUMMARY_HEADER
        with open(a["per_seed"]) as fh:
            assert tuple(next(csv.reader(fh))) == PER_SEED_HEADER
        meta = json.loads(a["metadata"].read_text())
        assert meta["schema_version"] == SCHEMA_VERSION and meta["epsilon"] == 0.1 and "protocol" in meta
        for key in ("metadata",):
            ma, mb = json.loads(a[key].read_text()), json.loads(b[key].read_text())
            ma.pop("wall_time_s"), mb.pop("wall_time_s")
            assert ma == mb

    def test_threads_do_not_change_results(self, result):
        threaded = run_table1(dataclasses.replace(SMALL, workers=3))
        assert threaded.per_seed == result.per_seed and threaded.summary == result.summary


class TestCurve:
    def test_rows(self):
        cfg = dataclasses.replace(SMALL, iteration_grid=(10, 40))
        r = run_convergence_curve(cfg)
        assert len(r.summary) == 3 * 2
        bi = [row for row in r.summary if row[0] == "erm-bi"]
        assert bi[0][3] == bi[1][3]
        assert {row[0] for row in r.per_seed} == {"erm-bi", "erm-mcts@10", "erm-mcts@40", "acc-mcts@10",
                                                  "acc-mcts@40"}


class TestConcentration:
    def test_bandit_mdp(self):
        m = bernoulli_bandit_mdp((0.2, 0.8))
        V, _ = erm_backward_induction(m, 1.0)
        assert V.root(m) == pytest.approx(bernoulli_erm(0.2, 1.0), abs=1e-12)

    def test_clopper_pearson(self):
        assert clopper_pearson_upper(0, 2000, 0.99) == pytest.approx(1 - 0.01 ** (1 / 2000), rel=1e-9)
        assert clopper_pearson_upper(5, 5, 0.99) == 1.0
        assert min_runs(0.99) == 90

    def test_loglog_slope(self):
        assert loglog_slope([1, 10, 100], [1, 0.1, 0.01]) == pytest.approx(-1.0)

    def test_too_few_runs(self):
        with pytest.raises(ConfigurationError):
            ConcentrationConfig(runs=50)
        with pytest.raises(ConfigurationError):
            ConcentrationConfig(probs=(0.5,))

    def test_constant_arms_have_no_tail(self):
        cfg = ConcentrationConfig(probs=(0.0, 1.0), runs=100, n_grid=(10, 100), tail_runs=100, tail_n=100)
        rep = run_concentration_suite(cfg)
        assert rep.tail_counts == (0, 0, 0) and rep.tails_monotone and rep.tails_bounded
        assert len(rep.rows()) == 2 + 3


def test_votes_follow_oracle():
    m = ExperimentConfig(horizon=10).build_mdp()
    assert erm_backward_induction(m, 2.0)[1](0, 0) == 1
    votes = root_action_votes(m, 2.0, 2000, 9)
    assert votes.sum() == 9 and majority_action(votes) == 1
