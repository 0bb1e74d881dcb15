# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""Unit tests for the pricing module."""

import math

import numpy as np
import pytest

from hedge_lab.core.instruments import AutocallableSpec, OptionKind, OptionSpec
from hedge_lab.core.market import RngStream, SabrParams, TimeGrid, simulate_paths
from hedge_lab.core.pricing import (
    ContinuationModel,
    NoteValuationCache,
    PricerConfig,
    binomial_american,
    binomial_valuation,
    bs_digital,
    bs_european,
    fd_greeks,
    fd_valuation,
    greeks_profile,
    lsmc_exercise_decision,
    lsmc_fit,
    lsmc_price,
    price_autocallable_mc,
    value_option,
)
from hedge_lab.errors import ConfigError, ContractError, PricingError


@pytest.fixture
def note() -> AutocallableSpec:
    return AutocallableSpec()


def test_put_call_parity():
    """C - P = S - K exp(-rT)."""
    call = bs_european(OptionKind.EUROPEAN_CALL, 105.0, 100.0, 0.25, 0.03, 0.75)
    put = bs_european(OptionKind.EUROPEAN_PUT, 105.0, 100.0, 0.25, 0.03, 0.75)

    assert call.price - put.price == pytest.approx(105.0 - 100.0 * math.exp(-0.03 * 0.75), abs=1e-10)
    assert call.delta - put.delta == pytest.approx(1.0)
    assert call.gamma == pytest.approx(put.gamma)


def test_bs_greeks_match_finite_differences():
    """Analytic delta and gamma agree with central differences of the price."""
    # Arrange
    def price(s, _rng):
        return bs_european(OptionKind.EUROPEAN_CALL, s, 100.0, 0.2, 0.0, 1.0).price

    analytic = bs_european(OptionKind.EUROPEAN_CALL, 100.0, 100.0, 0.2, 0.0, 1.0)

    # Act
    delta, gamma = fd_greeks(price, 100.0, 0.001)

    # Assert
    assert delta == pytest.approx(analytic.delta, abs=1e-4)
    assert gamma == pytest.approx(analytic.gamma, abs=1e-4)


def test_digital_greeks_match_finite_differences():
    """Digital delta and gamma agree with differences of the digital price."""
    def price(s, _rng):
        return bs_digital(OptionKind.DIGITAL_CASH_CALL, s, 100.0, 0.2, 0.0, 0.5).price

    analytic = bs_digital(OptionKind.DIGITAL_CASH_CALL, 103.0, 100.0, 0.2, 0.0, 0.5)

    delta, gamma = fd_greeks(price, 103.0, 0.001)

    assert delta == pytest.approx(analytic.delta, abs=1e-5)
    assert gamma == pytest.approx(analytic.gamma, abs=1e-5)


def test_digital_call_and_put_sum_to_discounted_cash():
    """A digital call plus a digital put on the same strike pays the cash for sure."""
    call = bs_digital(OptionKind.DIGITAL_CASH_CALL, 97.0, 100.0, 0.3, 0.02, 1.0, cash_amount=5.0)
    put = bs_digital(OptionKind.DIGITAL_CASH_PUT, 97.0, 100.0, 0.3, 0.02, 1.0, cash_amount=5.0)

    assert call.price + put.price == pytest.approx(5.0 * math.exp(-0.02))
    assert call.delta + put.delta == pytest.approx(0.0, abs=1e-12)


def test_fd_greeks_of_a_quadratic():
    """Central differences are exact for a quadratic pricer."""
    def quadratic(s, _rng):
        return 3.0 * s * s + 2.0 * s + 1.0

    delta, gamma = fd_greeks(quadratic, 100.0, 0.005)

    assert delta == pytest.approx(602.0, rel=1e-9)
    assert gamma == pytest.approx(6.0, rel=1e-9)


def test_fd_bump_underflow_is_an_error():
    """A bump that vanishes against the spot cannot be differentiated."""
    with pytest.raises(PricingError):
        fd_valuation(lambda s, _rng: s, 1.0, 1e-20)


def test_fd_uses_common_random_numbers():
    """Each bumped valuation sees the same draws."""
    # Arrange
    seen = []

    def noisy(s, rng):
        draw = rng.normals(1)[0]
        seen.append(draw)
        return s + draw

    # Act
    valuation = fd_valuation(noisy, 100.0, 0.01, RngStream(4))

    # Assert
    assert seen[0] == seen[1] == seen[2]
    assert valuation.delta == pytest.approx(1.0)
    assert valuation.gamma == pytest.approx(0.0, abs=1e-9)


def test_american_call_without_dividends_is_european():
    """Early exercise of a call is never optimal at r = 0."""
    american = binomial_american(OptionKind.AMERICAN_CALL, 100.0, 100.0, 0.2, 0.0, 1.0, 2000)
    european = bs_european(OptionKind.EUROPEAN_CALL, 100.0, 100.0, 0.2, 0.0, 1.0).price

    assert abs(american - european) / european < 1e-3


def test_binomial_european_converges_to_black_scholes():
    """Without early exercise the tree converges to the closed form."""
    tree = binomial_valuation(OptionKind.EUROPEAN_PUT, 100.0, 95.0, 0.25, 0.01, 0.5, 2000)
    closed = bs_european(OptionKind.EUROPEAN_PUT, 100.0, 95.0, 0.25, 0.01, 0.5)

    assert tree.price == pytest.approx(closed.price, rel=2e-3)
    assert tree.delta == pytest.approx(closed.delta, abs=5e-3)
    assert tree.gamma == pytest.approx(closed.gamma, rel=5e-2)


def test_american_put_carries_early_exercise_premium():
    """With a positive rate the American put is worth more than the European one."""
    american = binomial_american(OptionKind.AMERICAN_PUT, 100.0, 100.0, 0.2, 0.05, 1.0, 1000)
    european = bs_european(OptionKind.EUROPEAN_PUT, 100.0, 100.0, 0.2, 0.05, 1.0).price

    assert american > european


def test_deterministic_american_put():
    """At zero volatility an in-the-money put is worth its intrinsic value."""
    value = binomial_valuation(OptionKind.AMERICAN_PUT, 90.0, 100.0, 0.0, 0.0, 0.5, 100)

    assert value.price == pytest.approx(10.0)
    assert value.delta == -1.0


def test_expired_option_is_worth_intrinsic():
    """Without time left the value is the payoff."""
    value = binomial_valuation(OptionKind.AMERICAN_CALL, 110.0, 100.0, 0.2, 0.0, 0.0, 100)

    assert value.price == pytest.approx(10.0)
    assert value.gamma == 0.0


def test_value_option_marks_american_as_european_without_exercise(market):
    """Disabling early exercise values an American option with the closed form."""
    spec = OptionSpec(OptionKind.AMERICAN_PUT, 100.0, 0.5)
    config = PricerConfig(rate=0.05, book_tree_steps=200)

    tree = value_option(spec, 100.0, 0.2, 0.0, market, config, early_exercise=True)
    closed = value_option(spec, 100.0, 0.2, 0.0, market, config, early_exercise=False)

    assert tree.price > closed.price


def test_value_option_at_expiry(market):
    """An option valued at its maturity pays its payoff."""
    spec = OptionSpec(OptionKind.DIGITAL_CASH_PUT, 100.0, 0.5, cash_amount=3.0)

    value = value_option(spec, 95.0, 0.2, 0.5, market, PricerConfig())

    assert value.price == pytest.approx(3.0)
    assert value.gamma == 0.0


def test_pricer_config_validation():
    """Bumps outside (0, 0.1) and empty path sets are rejected."""
    with pytest.raises(ConfigError) as excinfo:
        PricerConfig(fd_bump_rel=0.2)
    assert excinfo.value.key == "pricer.fd_bump_rel"
    with pytest.raises(ConfigError):
        PricerConfig(n_mc_paths=0)


# ---------------------------------------------------------------------------
# Longstaff-Schwartz
# ---------------------------------------------------------------------------


def _exercise_everything(kind: OptionKind) -> ContinuationModel:
    return ContinuationModel(kind=kind, times=(0.0,), coefficients=(np.zeros(1),), maturity=1.0 / 12.0, rate=0.0)


def test_exercise_decision_needs_intrinsic_value():
    """An out-of-the-money option is never exercised."""
    model = _exercise_everything(OptionKind.AMERICAN_PUT)

    assert not lsmc_exercise_decision(model, 105.0, 0.0, OptionKind.AMERICAN_PUT, 100.0)
    assert lsmc_exercise_decision(model, 95.0, 0.0, OptionKind.AMERICAN_PUT, 100.0)


def test_exercise_decision_at_maturity():
    """At maturity every in-the-money option is exercised, whatever the regression says."""
    model = ContinuationModel(
        kind=OptionKind.AMERICAN_CALL, times=(0.0,), coefficients=(np.array([1e6]),), maturity=0.25, rate=0.0
    )

    assert not lsmc_exercise_decision(model, 101.0, 0.1, OptionKind.AMERICAN_CALL, 100.0)
    assert lsmc_exercise_decision(model, 101.0, 0.25, OptionKind.AMERICAN_CALL, 100.0)


def test_lsmc_needs_enough_paths():
    """Fitting below the configured minimum path count is refused."""
    paths = simulate_paths(SabrParams(nu=0.0), TimeGrid(12, 1.0 / 12.0), 50, RngStream(0))

    with pytest.raises(ContractError):
        lsmc_fit(paths, OptionKind.AMERICAN_PUT, [100.0], 1.0, 0.0, PricerConfig(lsmc_training_paths=100))


def test_lsmc_maturity_must_lie_on_grid():
    """The option tenor has to be a whole number of path steps."""
    paths = simulate_paths(SabrParams(nu=0.0), TimeGrid(12, 1.0 / 12.0), 100, RngStream(0))

    with pytest.raises(ContractError):
        lsmc_fit(paths, OptionKind.AMERICAN_PUT, [100.0], 0.3, 0.0, PricerConfig(lsmc_training_paths=100))


def test_lsmc_degrades_on_rank_deficient_data(flat_market):
    """Identical paths leave one usable basis function and are flagged."""
    paths = simulate_paths(flat_market, TimeGrid(6, 1.0 / 12.0), 100, RngStream(0))

    model = lsmc_fit(paths, OptionKind.AMERICAN_PUT, [110.0], 0.5, 0.0, PricerConfig(lsmc_training_paths=100))

    assert model.degraded
    assert all(d == 0 for d in model.degrees)
    assert len(model.times) == 6


def test_single_strike_fit_is_not_degraded():
    """The issue date holds one moneyness value; only later dates count as degraded."""
    paths = simulate_paths(SabrParams(nu=0.0), TimeGrid(12, 1.0 / 12.0), 2000, RngStream(0))

    model = lsmc_fit(paths, OptionKind.AMERICAN_PUT, [100.0], 1.0, 0.0, PricerConfig(lsmc_training_paths=2000))

    assert not model.degraded
    assert model.degrees[0] == 0
    assert model.degrees[1:] == (3,) * 11


def test_lsmc_exercises_a_deep_put_at_issue_without_volatility():
    """With no volatility the put at spot 90 is worth more dead than alive."""
    # Arrange
    params = SabrParams(spot0=90.0, mu=0.05, sigma0=0.0, nu=0.0)
    paths = simulate_paths(params, TimeGrid(12, 1.0 / 12.0), 100, RngStream(0))

    # Act
    model = lsmc_fit(paths, OptionKind.AMERICAN_PUT, [100.0], 1.0, 0.05, PricerConfig(lsmc_training_paths=100))
    price, std_error = lsmc_price(model, paths, OptionKind.AMERICAN_PUT, 100.0, 0.05)

    # Assert
    assert lsmc_exercise_decision(model, 90.0, 0.0, OptionKind.AMERICAN_PUT, 100.0)
    assert price == pytest.approx(10.0, abs=1e-9)
    assert std_error == pytest.approx(0.0, abs=1e-9)


def test_constant_basis_compares_intrinsic_with_the_mean_continuation():
    """Degree 0 regresses on a constant: the rule becomes intrinsic against the in-the-money mean."""
    # Arrange
    grid = TimeGrid(12, 1.0 / 12.0)
    paths = simulate_paths(SabrParams(nu=0.0), grid, 2000, RngStream(0, 1))
    config = PricerConfig(lsmc_basis_degree=0, lsmc_training_paths=2000)

    # Act
    model = lsmc_fit(paths, OptionKind.AMERICAN_PUT, [100.0], 1.0, 0.02, config)

    # Assert
    last = paths.spots[:, 11]
    discounted = np.maximum(100.0 - paths.spots[:, 12], 0.0) * math.exp(-0.02 / 12.0)
    mean_continuation = discounted[last < 100.0].mean()
    assert all(len(c) == 1 for c in model.coefficients)
    assert model.coefficients[11][0] == pytest.approx(mean_continuation, rel=1e-10)
    for spot in (80.0, 95.0, 99.9):
        expected = 100.0 - spot > mean_continuation
        assert lsmc_exercise_decision(model, spot, 11.0 / 12.0, OptionKind.AMERICAN_PUT, 100.0) == expected


def test_bermudan_tree_lies_between_european_and_american():
    """Fewer exercise dates can only lower the value, down to the European."""
    args = (OptionKind.AMERICAN_PUT, 100.0, 100.0, 0.2, 0.05, 1.0, 1200)
    monthly = [k / 12.0 for k in range(12)]

    american = binomial_american(*args)
    bermudan = binomial_american(*args, exercise_times=monthly)
    european = binomial_american(*args, exercise_times=[])

    assert european == pytest.approx(bs_european(OptionKind.EUROPEAN_PUT, 100.0, 100.0, 0.2, 0.05, 1.0).price, rel=2e-3)
    assert european < bermudan < american


def test_bermudan_tree_without_volatility_uses_only_the_given_dates():
    """A deterministic put waits for the best allowed date instead of exercising now."""
    price = binomial_american(OptionKind.AMERICAN_PUT, 90.0, 100.0, 0.0, 0.05, 1.0, 100, exercise_times=[0.5])

    assert price == pytest.approx(100.0 * math.exp(-0.025) - 90.0, rel=1e-12)


@pytest.mark.slow
def test_lsmc_put_matches_bermudan_oracle():
    """A monthly exercise rule prices the put within 1% of a tree exercising on the same dates."""
    # Arrange
    params = SabrParams(mu=0.05, sigma0=0.2, nu=0.0)
    grid = TimeGrid(n_steps=12, dt=1.0 / 12.0)
    config = PricerConfig(lsmc_training_paths=50_000)
    training = simulate_paths(params, grid, 50_000, RngStream(0, 1))
    evaluation = simulate_paths(params, grid, 100_000, RngStream(0, 2))

    # Act
    model = lsmc_fit(training, OptionKind.AMERICAN_PUT, [100.0], 1.0, 0.05, config)
    price, std_error = lsmc_price(model, evaluation, OptionKind.AMERICAN_PUT, 100.0, 0.05)

    # Assert
    oracle = binomial_american(
        OptionKind.AMERICAN_PUT, 100.0, 100.0, 0.2, 0.05, 1.0, 1200, exercise_times=model.times
    )
    assert std_error < 0.05
    assert abs(price - oracle) / oracle < 0.01
    assert price <= oracle + 3.0 * std_error


# ---------------------------------------------------------------------------
# Autocallable
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("spot, expected", [(100.0, 105.70), (60.0, 60.0), (70.0, 179.80)])
def test_note_price_without_volatility(note, flat_market, spot, expected):
    """A zero-volatility note is valued by its single deterministic path."""
    value = price_autocallable_mc(note, spot, 0.0, 0.0, flat_market, PricerConfig(), RngStream(0))

    assert value.price == pytest.approx(expected, abs=1e-9)
    assert value.std_error == 0.0


def test_note_price_later_in_life(note, flat_market):
    """Coupons already paid are no longer part of the value."""
    value = price_autocallable_mc(note, 100.0, 0.0, 1.0 / 12.0, flat_market, PricerConfig(), RngStream(0))

    assert value.price == pytest.approx(5 * 0.95 + 100.0)


def test_note_mc_is_reproducible(note, market, fast_pricer):
    """Equal streams give equal valuations with a positive standard error."""
    a = price_autocallable_mc(note, 100.0, 0.2, 0.0, market, fast_pricer, RngStream(1, 3))
    b = price_autocallable_mc(note, 100.0, 0.2, 0.0, market, fast_pricer, RngStream(1, 3))

    assert a == b
    assert a.std_error > 0.0
    assert 60.0 < a.price < note.max_total_flows


def test_note_standard_error_shrinks_with_the_square_root_of_paths(note, market):
    """Four times the inner paths halve the standard error."""
    small = price_autocallable_mc(note, 100.0, 0.2, 0.0, market, PricerConfig(n_mc_paths=1000), RngStream(2, 3))
    large = price_autocallable_mc(note, 100.0, 0.2, 0.0, market, PricerConfig(n_mc_paths=4000), RngStream(2, 3))

    assert small.std_error / large.std_error == pytest.approx(2.0, abs=0.25)


def test_note_after_last_observation_is_an_error(note, flat_market):
    """There is nothing left to value after maturity."""
    with pytest.raises(ContractError):
        price_autocallable_mc(note, 100.0, 0.0, 7.0, flat_market, PricerConfig(), RngStream(0))


def test_cache_does_not_depend_on_request_order(note, market):
    """Node valuations are keyed by node, not by the order they are first needed."""
    # Arrange
    config = PricerConfig(n_mc_paths=32, cache_spot_points=5, cache_vol_points=3)
    first = NoteValuationCache(note, market, config, RngStream(0, 3))
    second = NoteValuationCache(note, market, config, RngStream(0, 3))

    # Act
    a1 = first.value(100.0, 0.2, 0.0)
    b1 = first.value(120.0, 0.3, 0.0)
    b2 = second.value(120.0, 0.3, 0.0)
    a2 = second.value(100.0, 0.2, 0.0)

    # Assert
    assert a1 == a2
    assert b1 == b2


def test_cache_hits_nodes_exactly(note, market):
    """A query on a node returns that node's valuation."""
    config = PricerConfig(n_mc_paths=32, cache_spot_points=5, cache_vol_points=3)
    cache = NoteValuationCache(note, market, config, RngStream(0, 3))
    spot, vol = float(cache.spot_nodes[2]), float(cache.vol_nodes[1])

    value = cache.value(spot, vol, 0.0)

    direct = price_autocallable_mc(note, spot, vol, 0.0, market, config, RngStream(0, 3).child(0, 2, 1))
    assert value.price == pytest.approx(direct.price)


def test_greeks_profile_rows(note, market, fast_pricer):
    """One row per spot and day."""
    rows = greeks_profile(note, [90.0, 100.0, 110.0], (60, 1), market, fast_pricer, RngStream(0))

    assert len(rows) == 6
    assert {r.days_before_call for r in rows} == {60, 1}


def test_greeks_profile_before_issue_is_an_error(note, market, fast_pricer):
    """Days before the first call cannot precede issue."""
    with pytest.raises(ContractError):
        greeks_profile(note, [100.0], (200,), market, fast_pricer, RngStream(0))


@pytest.mark.slow
@pytest.mark.stochastic
def test_gamma_spikes_near_the_call_date(note):
    """Near the call barrier the note's gamma grows sharply as the call date approaches."""
    # Arrange
    params = SabrParams(nu=0.0)
    config = PricerConfig(n_mc_paths=20_000, fd_bump_rel=0.02)
    spots = np.linspace(96.0, 104.0, 17)

    # Act
    rows = greeks_profile(note, spots, (60, 1), params, config, RngStream(0))

    # Assert
    far = max(abs(r.gamma) for r in rows if r.days_before_call == 60)
    near = max(abs(r.gamma) for r in rows if r.days_before_call == 1)
    assert near > 10.0 * far
