# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""Unit tests for the baseline strategies and rollouts."""

import logging

import numpy as np
import pytest

from hedge_lab.core.env import EnvConfig, EnvMode, HedgingEnv, Observation, TraceRow
from hedge_lab.core.strategies import (
    TRAINING_SEED_OFFSET,
    Strategy,
    StrategyKind,
    act,
    evaluation_seeds,
    gamma_ratio,
    parse_strategy,
    rollout,
    run_episodes,
    training_seeds,
)
from hedge_lab.errors import ConfigError


@pytest.fixture
def obs() -> Observation:
    return Observation(np.array([0.01, -0.5, 0.8]))


def row(gamma_client: float, gamma_hedge: float) -> TraceRow:
    return TraceRow(0, 0.0, 100.0, 0.0, 0.0, 0.0, 0.0, gamma_client, gamma_hedge, False)


def test_baseline_actions(obs):
    """Each baseline maps to its fixed action."""
    autocall = EnvConfig(mode=EnvMode.AUTOCALLABLE, max_hedge_multiplier=5.0)
    vanilla = EnvConfig(mode=EnvMode.VANILLA_FLOW, max_hedge_multiplier=1.0)

    assert act(Strategy(StrategyKind.NONE), obs, autocall) is None
    assert act(Strategy(StrategyKind.DELTA_NEUTRAL), obs, autocall) == 0.0
    assert act(Strategy(StrategyKind.DELTA_GAMMA_NEUTRAL), obs, autocall) == pytest.approx(0.2)
    assert act(Strategy(StrategyKind.DELTA_GAMMA_NEUTRAL), obs, vanilla) == 1.0
    assert act(Strategy(StrategyKind.CONSTANT_FRACTION, fraction=0.35), obs, autocall) == 0.35


def test_delta_gamma_with_small_multiplier_is_clipped(obs, caplog):
    """A multiplier below one cannot reach full neutrality; the action is capped at one."""
    config = EnvConfig(max_hedge_multiplier=0.5)

    with caplog.at_level(logging.WARNING):
        action = act(Strategy(StrategyKind.DELTA_GAMMA_NEUTRAL), obs, config)

    assert action == 1.0
    assert "clipped" in caplog.text


def test_rl_policy_sees_the_features(obs):
    """A learned policy is called with the observation features."""
    strategy = Strategy(StrategyKind.RL_POLICY, policy=lambda f: float(f[2]), source="p.json")

    assert act(strategy, obs, EnvConfig()) == pytest.approx(0.8)
    assert strategy.name == "rl:p.json"


def test_parse_strategy():
    """The command-line selectors parse to their strategies."""
    assert parse_strategy("none").kind == StrategyKind.NONE
    assert parse_strategy("delta").kind == StrategyKind.DELTA_NEUTRAL
    assert parse_strategy("delta-gamma").kind == StrategyKind.DELTA_GAMMA_NEUTRAL
    const = parse_strategy("const:0.25")
    assert const.kind == StrategyKind.CONSTANT_FRACTION
    assert const.fraction == 0.25
    assert const.name == "const:0.25"
    rl = parse_strategy("rl:policy.json", lambda path: lambda f: 0.5)
    assert rl.kind == StrategyKind.RL_POLICY
    assert rl.source == "policy.json"


@pytest.mark.parametrize("text", ["gamma", "const:", "const:abc", "const:1.5", "rl:x.json"])
def test_parse_strategy_rejects_bad_selectors(text):
    with pytest.raises(ConfigError):
        parse_strategy(text)


def test_seed_ranges_do_not_overlap():
    """Training seeds live above every evaluation seed."""
    eval_seeds = evaluation_seeds(3, 10)
    train_seeds = training_seeds(3, 10)

    assert eval_seeds == [3_000_000 + i for i in range(10)]
    assert min(train_seeds) > TRAINING_SEED_OFFSET > max(eval_seeds)


def test_gamma_ratio_conventions():
    """Exact offset gives one, no hedge gives zero, rows without client gamma are ignored."""
    assert gamma_ratio([row(-0.04, 0.04), row(0.02, -0.02), row(0.0, 0.3)]) == pytest.approx(1.0)
    assert gamma_ratio([row(-0.04, 0.0), row(0.02, 0.0)]) == 0.0
    assert gamma_ratio([row(-0.04, 0.02)]) == pytest.approx(0.5)
    assert gamma_ratio([]) == 0.0


def test_rollout_pnl_is_the_sum_of_rewards(vanilla_config, market, fast_pricer, exercise_models):
    """The PnL of an episode is the sum of its trace rewards."""
    env = HedgingEnv(vanilla_config, market, pricer=fast_pricer, exercise_models=exercise_models)

    result = rollout(env, Strategy(StrategyKind.CONSTANT_FRACTION, fraction=0.5), 3)

    assert result.n_steps == 5
    assert result.pnl == pytest.approx(sum(r.reward for r in result.trace))


def test_zero_fraction_equals_delta_hedge(vanilla_config, market, fast_pricer, exercise_models):
    """A constant fraction of zero trades exactly like the delta hedge."""
    env = HedgingEnv(vanilla_config, market, pricer=fast_pricer, exercise_models=exercise_models)

    zero = rollout(env, Strategy(StrategyKind.CONSTANT_FRACTION, fraction=0.0), 9)
    delta = rollout(env, Strategy(StrategyKind.DELTA_NEUTRAL), 9)

    assert zero.pnl == delta.pnl
    assert zero.trace == delta.trace


def test_run_episodes_does_not_depend_on_threads(vanilla_config, market, fast_pricer, exercise_models):
    """Results come back in seed order with identical values for any thread count."""
    # Arrange
    def factory():
        return HedgingEnv(vanilla_config, market, pricer=fast_pricer, exercise_models=exercise_models)

    strategy = Strategy(StrategyKind.DELTA_GAMMA_NEUTRAL)
    seeds = evaluation_seeds(1, 6)

    # Act
    serial = run_episodes(factory, strategy, seeds, threads=1)
    parallel = run_episodes(factory, strategy, seeds, threads=3)

    # Assert
    assert [r.pnl for r in serial] == [r.pnl for r in parallel]


def test_delta_and_delta_gamma_ratios_in_vanilla_mode(vanilla_config, market, fast_pricer, exercise_models):
    """The delta hedge holds no gamma; the delta-gamma hedge offsets all of it."""
    def factory():
        return HedgingEnv(vanilla_config, market, pricer=fast_pricer, exercise_models=exercise_models)

    seeds = evaluation_seeds(2, 8)

    delta = run_episodes(factory, Strategy(StrategyKind.DELTA_NEUTRAL), seeds)
    full = run_episodes(factory, Strategy(StrategyKind.DELTA_GAMMA_NEUTRAL), seeds)

    assert all(r.gamma_ratio == 0.0 for r in delta)
    assert np.mean([r.gamma_ratio for r in full]) == pytest.approx(1.0, abs=0.01)


@pytest.mark.slow
def test_delta_gamma_ratio_in_autocallable_mode(market, fast_pricer):
    """With the digital hedge the delta-gamma strategy also offsets the note's gamma."""
    config = EnvConfig(mode=EnvMode.AUTOCALLABLE, horizon=1.0)

    def factory():
        return HedgingEnv(config, market, pricer=fast_pricer)

    results = run_episodes(factory, Strategy(StrategyKind.DELTA_GAMMA_NEUTRAL), evaluation_seeds(4, 20), threads=4)

    assert np.mean([r.gamma_ratio for r in results]) == pytest.approx(1.0, abs=0.01)
