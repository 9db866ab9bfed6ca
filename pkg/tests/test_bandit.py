import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entropic_mcts.bandit import (ArmState, BanditEnv, BonusParams, ConfigurationError, bernoulli_arm,
                                  bernoulli_erm, bonus, constant_arm, mdp_root_arms, run_bandit, select_arm,
                                  stream_erm, weighted_erm)
from entropic_mcts.erm import EmptyEstimatorError, ErmAccumulator, erm_of_samples
from entropic_mcts.mcts import search
from entropic_mcts.mdp import mdp4_factory, random_mdp

PRACTICAL = BonusParams()


def arm_with(samples, beta=1.0):
    return ArmState(ErmAccumulator(beta).extend(samples))


class TestBonus:
    def test_unit_parameters(self):
        # theta must exceed 1, so the unit case is checked as a limit
        assert bonus(1, 1, BonusParams(theta=1.0 + 1e-12, xi=2, alpha=0.5, eta=0.5)) == pytest.approx(1.0, abs=1e-11)

    def test_examples(self):
        assert PRACTICAL.coefficient == pytest.approx(math.sqrt(2))
        assert PRACTICAL.t_exponent == 0.25 and PRACTICAL.s_exponent == 0.5
        assert bonus(16, 4, PRACTICAL) == pytest.approx(math.sqrt(2), abs=1e-12)
        assert bonus(1, 4, PRACTICAL) == pytest.approx(math.sqrt(2) / 2, abs=1e-12)

    @pytest.mark.parametrize("xi", [1.5, 2.0, 7.0])
    def test_practical_is_xi_free(self, xi):
        p = BonusParams.practical(0.5, xi)
        assert bonus(81, 9, p) == pytest.approx(math.sqrt(2) * 3 / 3)

    @pytest.mark.parametrize("kw", [{"theta": 1.0}, {"xi": 1.0}, {"eta": 0.4}, {"eta": 1.0}, {"alpha": 0.0}])
    def test_parameter_validation(self, kw):
        with pytest.raises(ValueError):
            BonusParams(**kw)

    def test_bad_counts(self):
        with pytest.raises(ValueError):
            bonus(0, 1, PRACTICAL)


class TestSelectArm:
    def test_unpulled_first(self):
        assert select_arm([ArmState(ErmAccumulator(1.0)), arm_with([0.0])], 5, PRACTICAL) == 0
        assert select_arm([arm_with([0.0]), ArmState(ErmAccumulator(1.0))], 5, PRACTICAL) == 1

    def test_dominant_arm(self):
        assert select_arm([arm_with([0.0] * 10), arm_with([5.0] * 10)], 20, PRACTICAL) == 0

    def test_under_pulled_arm_gets_larger_bonus(self):
        assert bonus(101, 1, PRACTICAL) > bonus(101, 100, PRACTICAL)
        assert select_arm([arm_with([1.0] * 100), arm_with([1.0])], 101, PRACTICAL) == 1

    def test_tie_lowest_index(self):
        arms = [arm_with([2.0] * 3), arm_with([2.0] * 3)]
        assert select_arm(arms, 6, PRACTICAL) == 0

    def test_tie_random(self):
        arms = [arm_with([2.0] * 3), arm_with([2.0] * 3)]
        rng = np.random.default_rng(0)
        picks = {select_arm(arms, 6, PRACTICAL, rng, tie_break="random") for _ in range(50)}
        assert picks == {0, 1}

    def test_empty(self):
        with pytest.raises(ValueError):
            select_arm([], 1, PRACTICAL)


class TestRunBandit:
    def test_single_arm(self):
        h = run_bandit(BanditEnv([constant_arm(0.3)], 1.0), 1.0, PRACTICAL, 10, 0)
        assert h.actions == [0] * 10 and h.pulls == [10]

    def test_suboptimal_fraction(self):
        h = run_bandit(BanditEnv([constant_arm(0.0), constant_arm(1.0)], 1.0), 1.0, PRACTICAL, 1000, 0)
        assert h.pulls[1] / 1000 <= 0.2

    def test_nondeterministic_composite_cost(self):
        env = BanditEnv([lambda t, rng: (1.0, "A", 2.0)], 3.0, gamma=0.9, nondeterministic=True)
        h = run_bandit(env, 0.7, PRACTICAL, 5, 0)
        arm = h.arms[0]
        assert arm.value() == pytest.approx(2.8, abs=1e-12)
        assert arm.next_state_counts == {"A": 5}
        assert arm.next_state_accs["A"].beta == pytest.approx(0.63)
        assert arm.next_state_accs["A"].value() == pytest.approx(2.0)

    def test_n_below_arms(self):
        with pytest.raises(ConfigurationError):
            run_bandit(BanditEnv([constant_arm(0), constant_arm(1)], 1.0), 1.0, PRACTICAL, 1, 0)

    def test_deterministic_given_seed(self):
        env = BanditEnv([bernoulli_arm(0.3), bernoulli_arm(0.5)], 1.0)
        a = run_bandit(env, 1.0, PRACTICAL, 200, 42)
        b = run_bandit(env, 1.0, PRACTICAL, 200, 42)
        assert a.actions == b.actions and a.costs == b.costs


class TestDiagnostics:
    def two_pulls(self):
        return run_bandit(BanditEnv([constant_arm(0.0), constant_arm(1.0)], 1.0), 1.0, PRACTICAL, 2, 0)

    def test_weighted(self):
        assert weighted_erm(self.two_pulls()) == pytest.approx(0.5, abs=1e-15)

    def test_stream(self):
        assert stream_erm(self.two_pulls()) == pytest.approx(math.log((1 + math.e) / 2), abs=1e-12)

    def test_stream_at_other_beta_uses_costs(self):
        h = self.two_pulls()
        assert stream_erm(h, 2.0) == pytest.approx(math.log((1 + math.e**2) / 2) / 2, abs=1e-12)

    def test_single_arm_equals_estimator(self):
        h = run_bandit(BanditEnv([bernoulli_arm(0.4)], 1.0), 1.3, PRACTICAL, 50, 3)
        assert weighted_erm(h) == pytest.approx(h.arms[0].value(), abs=1e-12)
        assert stream_erm(h) == pytest.approx(h.arms[0].value(), abs=1e-12)

    def test_constant_costs(self):
        h = run_bandit(BanditEnv([constant_arm(0.25)] * 3, 1.0), 2.0, PRACTICAL, 30, 0)
        assert weighted_erm(h) == pytest.approx(0.25) and stream_erm(h) == pytest.approx(0.25)

    def test_empty(self):
        h = self.two_pulls()
        h.actions.clear()
        with pytest.raises(EmptyEstimatorError):
            weighted_erm(h)
        with pytest.raises(EmptyEstimatorError):
            stream_erm(h)

    def test_bernoulli_erm_closed_form(self):
        assert bernoulli_erm(0.5, 1.0) == pytest.approx(math.log((1 + math.e) / 2))
        assert bernoulli_erm(0.3, 4.0, -1, 2) == pytest.approx(float(erm_of_samples([-1] * 7 + [2] * 3, 4.0)))


bandit_runs = st.tuples(st.lists(st.floats(0, 1), min_size=1, max_size=4), st.floats(0.01, 5.0),
                        st.integers(4, 150), st.integers(0, 10**6))


class TestProperties:
    @given(bandit_runs)
    def test_jensen_ordering(self, args):
        probs, beta, n, seed = args
        h = run_bandit(BanditEnv([bernoulli_arm(p, -1, 1) for p in probs], 1.0), beta, PRACTICAL, n, seed)
        assert weighted_erm(h) <= stream_erm(h) + 1e-12

    @given(bandit_runs)
    def test_conservation_and_initialisation(self, args):
        probs, beta, n, seed = args
        h = run_bandit(BanditEnv([bernoulli_arm(p) for p in probs], 1.0), beta, PRACTICAL, n, seed)
        K = len(probs)
        assert sorted(h.actions[:K]) == list(range(K))
        assert sum(h.pulls) == n == len(h.costs)
        assert all(a.pulls == a.acc.count for a in h.arms)

    @given(st.integers(0, 10**6), st.integers(2, 60), st.floats(0.05, 3.0))
    def test_nondeterministic_counts(self, seed, n, beta):
        m = random_mdp(3, 2, 1, 0.8, 2.0, seed)
        h = run_bandit(mdp_root_arms(m), beta, PRACTICAL, n, seed)
        for arm in h.arms:
            assert sum(arm.next_state_counts.values()) == arm.pulls

    @given(st.integers(0, 10**6), st.integers(0, 10**6), st.integers(2, 300), st.floats(0.05, 3.0))
    def test_reduces_to_depth_one_search(self, mdp_seed, seed, n, beta):
        m = random_mdp(3, 2, 1, 0.8, 2.0, mdp_seed)
        h = run_bandit(mdp_root_arms(m), beta, PRACTICAL, n, seed)
        for backend in ("compiled", "python"):
            r = search(m, beta, n=n, rng_seed=seed, backend=backend)
            assert r.root_actions.tolist() == h.actions
            assert r.root_value == stream_erm(h)


def test_mdp4_root_as_bandit():
    m = mdp4_factory(0.1, horizon=1)
    h = run_bandit(mdp_root_arms(m), 0.5, PRACTICAL, 500, 9)
    assert h.actions == search(m, 0.5, n=500, rng_seed=9).root_actions.tolist()
