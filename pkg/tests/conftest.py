# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""Shared fixtures: small, fast configurations of the market, pricers and environments."""

import pytest

from hedge_lab.core.env import EnvConfig, EnvMode, exercise_model_stream, fit_exercise_models
from hedge_lab.core.market import SabrParams
from hedge_lab.core.pricing import PricerConfig


@pytest.fixture
def flat_market() -> SabrParams:
    """A market whose spot never moves."""
    return SabrParams(spot0=100.0, mu=0.0, sigma0=0.0, nu=0.0)


@pytest.fixture
def market() -> SabrParams:
    """The default stochastic-volatility market."""
    return SabrParams()


@pytest.fixture
def fast_pricer() -> PricerConfig:
    """Pricer settings small enough for unit tests."""
    return PricerConfig(n_mc_paths=64, lsmc_training_paths=400, book_tree_steps=20, binomial_steps=200)


@pytest.fixture(scope="session")
def exercise_models():
    """One-month call and put exercise rules fitted on a small path set."""
    pricer = PricerConfig(lsmc_training_paths=400, book_tree_steps=20)
    return fit_exercise_models(SabrParams(), pricer, 1.0 / 12.0, exercise_model_stream(0, 21))


@pytest.fixture
def vanilla_config() -> EnvConfig:
    """A one-week vanilla flow episode without transaction costs."""
    return EnvConfig(mode=EnvMode.VANILLA_FLOW, kappa=0.0, horizon=5.0 / 252.0).resolved()


@pytest.fixture
def autocall_config() -> EnvConfig:
    """A three-month autocallable episode without transaction costs."""
    return EnvConfig(mode=EnvMode.AUTOCALLABLE, kappa=0.0, horizon=0.25).resolved()
