"""Entropic-risk planning: ERM estimators, ERM bandits, risk-aware MCTS and exact DP oracles."""

from .bandit import (ArmState, BanditEnv, BanditHistory, BonusParams, ConfigurationError, bonus, run_bandit,
                     select_arm, stream_erm, weighted_erm)
from .dp import (EnumerationTooLarge, Policy, ValueFunction, brute_force_optimal_erm, brute_force_policy_erm,
                 erm_backward_induction, expected_backward_induction)
from .erm import (DiscreteDistribution, EmptyEstimatorError, ErmAccumulator, depth_adjusted_beta, erm_exact,
                  erm_of_samples, oce_value)
from .mcts import (DecisionNode, InfeasibleSchedule, ParameterSchedule, SearchResult, acc_mcts_search,
                   practical_schedule, schedule_parameters, search, select_action, simulate_once, uct_search)
from .mdp import (MdpParseError, MdpValidationError, TabularMdp, load_mdp, loads_mdp, mdp4_factory, random_mdp,
                  sample_transition, save_mdp, validate)

__version__ = "0.1.0"

__all__ = [
    "ArmState", "BanditEnv", "BanditHistory", "BonusParams", "ConfigurationError", "DecisionNode",
    "DiscreteDistribution", "EmptyEstimatorError", "EnumerationTooLarge", "ErmAccumulator", "InfeasibleSchedule",
    "MdpParseError", "MdpValidationError", "ParameterSchedule", "Policy", "SearchResult", "TabularMdp",
    "ValueFunction", "acc_mcts_search", "bonus", "brute_force_optimal_erm", "brute_force_policy_erm",
    "depth_adjusted_beta", "erm_backward_induction", "erm_exact", "erm_of_samples", "expected_backward_induction",
    "load_mdp", "loads_mdp", "mdp4_factory", "oce_value", "practical_schedule", "random_mdp", "run_bandit",
    "sample_transition", "save_mdp", "schedule_parameters", "search", "select_action", "select_arm",
    "simulate_once", "stream_erm", "uct_search", "validate", "weighted_erm",
]
