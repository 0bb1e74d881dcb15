# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""The hedging MDP.

A trader's book holds client positions (one short autocallable note, or a flow
of one-month American options arriving as a Poisson process) plus a hedge book
of options and underlying. At every rebalance the agent picks ``a`` in [0, 1],
the fraction of the maximum gamma hedge; the environment turns it into option
units, adds a delta leg, moves the market and pays out coupons, redemptions,
expiries and early exercises.

The reward of a step is::

    R_i = -kappa * |V_i * H_i| + (P_i^- - P_{i-1}^+)

where ``P^-`` is the book value before a rebalance and ``P^+`` after it. Trades
are booked at model value, so transaction costs appear only in the reward and
the rewards of an episode telescope to ``P_T^- - P_0^+`` minus the costs.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, NamedTuple

import numpy as np

from ..errors import ConfigError, ContractError
from .instruments import (
    MONTHS_PER_YEAR,
    AutocallableSpec,
    OptionKind,
    OptionSpec,
    intrinsic,
    observation_schedule,
    observe_note,
    vanilla_payoff,
)
from .market import TRADING_DAYS_PER_YEAR, RngStream, SabrParams, TimeGrid, advance, simulate_paths
from .pricing import (
    ContinuationModel,
    NoteValuationCache,
    PricerConfig,
    Valuation,
    lsmc_exercise_decision,
    lsmc_fit,
    price_autocallable_mc,
    value_option,
)

logger = logging.getLogger(__name__)

MIN_UNIT_GAMMA = 1e-10
# Exercise models are fitted on a daily grid; tenors within half a day match.
TENOR_TOLERANCE = 0.5 / TRADING_DAYS_PER_YEAR

# Stream ids below the episode seed; one namespace per randomness consumer.
MARKET_STREAM = 1
ARRIVAL_STREAM = 2
VALUATION_STREAM = 3
LSMC_STREAM = 4


class EnvMode(str, Enum):
    VANILLA_FLOW = "vanilla_flow"
    AUTOCALLABLE = "autocallable"


class HedgeInstrument(str, Enum):
    DIGITAL = "digital"
    AMERICAN_PAIR = "american_pair"


@dataclass(frozen=True)
class EnvConfig:
    """Settings of the hedging environment.

    Fields left as ``None`` take their mode-dependent default in
    :meth:`resolved`.

    Attributes:
        mode: Client book type.
        dt: Rebalancing interval in years.
        kappa: Proportional transaction cost on option trades.
        hedge_instrument: Instrument added to the hedge book each rebalance.
        max_hedge_multiplier: Hedge gamma at action 1 as a multiple of client gamma.
        rate: Cash accrual and discount rate.
        arrival_lambda: Expected client arrivals per step (vanilla mode).
        horizon: Episode length in years.
        early_exercise: Exercise American options with the Longstaff-Schwartz rule.
        underlying_cost: Proportional cost of the delta leg.
        substeps_per_year: Market simulation substeps per year.
        client_tenor: Maturity of arriving client options in years.
        hedge_tenor: Maturity of American hedge options in years.
    """

    mode: EnvMode = EnvMode.AUTOCALLABLE
    dt: float | None = None
    kappa: float = 0.02
    hedge_instrument: HedgeInstrument | None = None
    max_hedge_multiplier: float | None = None
    rate: float = 0.0
    arrival_lambda: float = 1.0
    horizon: float | None = None
    early_exercise: bool = True
    underlying_cost: float = 0.0
    substeps_per_year: int = TRADING_DAYS_PER_YEAR
    client_tenor: float = 1.0 / MONTHS_PER_YEAR
    hedge_tenor: float = 1.0 / MONTHS_PER_YEAR

    def __post_init__(self) -> None:
        if not self.kappa >= 0:
            raise ConfigError("env.kappa", "must be non-negative")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("env.dt", "must be positive")
        if self.max_hedge_multiplier is not None and not self.max_hedge_multiplier >= 0:
            raise ConfigError("env.max_hedge_multiplier", "must be non-negative")
        if not self.arrival_lambda >= 0:
            raise ConfigError("env.arrival_lambda", "must be non-negative")
        if not self.underlying_cost >= 0:
            raise ConfigError("env.underlying_cost", "must be non-negative")
        if self.substeps_per_year < 1:
            raise ConfigError("env.substeps_per_year", "must be at least 1")
        if self.dt is not None and self.horizon is not None:
            ratio = self.horizon / self.dt
            if abs(ratio - round(ratio)) > 1e-6 or round(ratio) < 1:
                raise ConfigError("env.horizon", "must be a positive multiple of dt")
        if self.dt is not None:
            sub = self.dt * self.substeps_per_year
            if abs(sub - round(sub)) > 1e-6 or round(sub) < 1:
                raise ConfigError("env.dt", "must be a whole number of simulation substeps")

    def resolved(self) -> "EnvConfig":
        """Returns a copy with every mode-dependent default filled in."""
        autocall = self.mode == EnvMode.AUTOCALLABLE
        return replace(
            self,
            dt=self.dt if self.dt is not None else (1.0 / MONTHS_PER_YEAR if autocall else 1.0 / TRADING_DAYS_PER_YEAR),
            horizon=self.horizon if self.horizon is not None else (7.0 if autocall else 1.0 / MONTHS_PER_YEAR),
            hedge_instrument=self.hedge_instrument
            or (HedgeInstrument.DIGITAL if autocall else HedgeInstrument.AMERICAN_PAIR),
            max_hedge_multiplier=self.max_hedge_multiplier
            if self.max_hedge_multiplier is not None
            else (5.0 if autocall else 1.0),
        )

    @property
    def days_per_step(self) -> int:
        assert self.dt is not None
        return int(round(self.dt * self.substeps_per_year))

    @property
    def client_exercise(self) -> bool:
        """Client options are American and may be exercised early."""
        return self.early_exercise and self.mode == EnvMode.VANILLA_FLOW

    @property
    def hedge_exercise(self) -> bool:
        """Hedge options are American and may be exercised early."""
        instrument = self.hedge_instrument or self.resolved().hedge_instrument
        return self.early_exercise and instrument == HedgeInstrument.AMERICAN_PAIR


@dataclass
class EnvState:
    """Full state of the trader's book at one instant.

    ``portfolio_gamma`` is the option gamma of client plus hedge book; the
    underlying contributes delta only.
    """

    t: float
    spot: float
    vol: float
    portfolio_gamma: float
    tau_next_call: float
    cash: float
    client_positions: list[OptionSpec] = field(default_factory=list)
    hedge_positions: list[OptionSpec] = field(default_factory=list)
    note_alive: bool = False
    underlying_units: float = 0.0
    client_delta: float = 0.0
    client_gamma: float = 0.0
    hedge_delta: float = 0.0
    hedge_gamma: float = 0.0
    book_value: float = 0.0


class Observation(NamedTuple):
    """Normalised agent input: (spot return, portfolio gamma, time to next call)."""

    features: np.ndarray


class Transition(NamedTuple):
    obs: Observation
    action: float
    reward: float
    next_obs: Observation
    done: bool
    info: dict[str, Any]


class HedgeTrade(NamedTuple):
    """Trades of one rebalance.

    Attributes:
        instrument: Option bought (negative units sell), None when no option trades.
        units: Option units ``H_i``.
        unit_value: Model value ``V_i`` of one unit.
        underlying_units: Underlying bought for the delta leg.
        unit_gamma: Gamma of one unit of the instrument.
        skipped: True when the instrument's gamma was too small to trade.
    """

    instrument: OptionSpec | None
    units: float
    unit_value: float
    underlying_units: float
    unit_gamma: float = 0.0
    skipped: bool = False


class TraceRow(NamedTuple):
    step: int
    time: float
    spot: float
    action: float
    units: float
    reward: float
    portfolio_value: float
    gamma_client: float
    gamma_hedge: float
    done: bool


def action_to_trade(
    state: EnvState,
    action: float,
    config: EnvConfig,
    candidates: list[tuple[OptionSpec, Valuation]],
) -> HedgeTrade:
    """Maps an action in [0, 1] to option units and a delta leg.

    The hedge book is brought to a total gamma of ``-action * M * client_gamma``
    with ``M = config.max_hedge_multiplier``; the delta leg then zeroes the
    book's delta. With two candidates (an American call and put) the one whose
    delta leans against the current option delta is used.

    Args:
        state: Book state before the rebalance.
        action: Fraction of the maximum hedge, already clipped to [0, 1].
        config: Resolved environment config.
        candidates: ``(spec, unit valuation)`` of each candidate instrument.

    Returns:
        The trade to execute.
    """
    assert config.max_hedge_multiplier is not None
    target = -action * config.max_hedge_multiplier * state.client_gamma
    needed = target - state.hedge_gamma
    option_delta = state.client_delta + state.hedge_delta

    spec, unit = candidates[0]
    if len(candidates) > 1 and abs(unit.gamma) >= MIN_UNIT_GAMMA:
        buying = needed / unit.gamma > 0
        spec, unit = next(
            ((s, v) for s, v in candidates if (not s.kind.is_call) == (buying == (option_delta > 0))), candidates[0]
        )

    skipped = abs(unit.gamma) < MIN_UNIT_GAMMA
    units = 0.0 if skipped or needed == 0.0 else needed / unit.gamma
    new_delta = option_delta + units * unit.delta
    return HedgeTrade(
        instrument=spec if units != 0.0 else None,
        units=units,
        unit_value=unit.price,
        underlying_units=-new_delta - state.underlying_units,
        unit_gamma=unit.gamma,
        skipped=skipped and needed != 0.0,
    )


def client_flow_arrivals(state: EnvState, rng: RngStream, config: EnvConfig) -> list[OptionSpec]:
    """Draws the client options arriving at ``state.t``.

    The count is Poisson with mean ``arrival_lambda``; each option is an
    at-the-money American call or put, long or short, with equal probability.
    """
    gen = rng.generator
    count = int(gen.poisson(config.arrival_lambda)) if config.arrival_lambda > 0 else 0
    arrivals = []
    for _ in range(count):
        is_call, is_long = gen.random(2) < 0.5
        kind = OptionKind.AMERICAN_CALL if is_call else OptionKind.AMERICAN_PUT
        arrivals.append(
            OptionSpec(
                kind=kind,
                strike=state.spot,
                maturity=state.t + config.client_tenor,
                quantity=1.0 if is_long else -1.0,
                issue_time=state.t,
            )
        )
    return arrivals


def settle_early_exercise(
    positions: list[OptionSpec], spot: float, t: float, models: dict[OptionKind, ContinuationModel]
) -> tuple[list[OptionSpec], float, int]:
    """Exercises every American position whose holder should exercise now.

    Args:
        positions: Positions in the trader's book (signed quantities).
        spot: Current spot.
        t: Current episode time.
        models: Exercise rule per American kind, fitted for the tenor of
            the positions.

    Returns:
        The positions left, the cash received by the trader (negative when a
        client exercises against the trader) and the number exercised.

    Raises:
        ContractError: If a model was fitted for another tenor.
    """
    kept: list[OptionSpec] = []
    cash = 0.0
    exercised = 0
    for pos in positions:
        model = models.get(pos.kind)
        if pos.kind.is_american and model is not None:
            if abs((pos.maturity - pos.issue_time) - model.maturity) > TENOR_TOLERANCE:
                raise ContractError(
                    f"exercise model for {model.maturity:.6f}y options applied to a "
                    f"{pos.maturity - pos.issue_time:.6f}y position"
                )
            if lsmc_exercise_decision(model, spot, t - pos.issue_time, pos.kind, pos.strike):
                cash += pos.quantity * float(intrinsic(pos.kind, pos.strike, spot))
                exercised += 1
                continue
        kept.append(pos)
    return kept, cash, exercised


def exercise_model_stream(seed: int, tenor_days: int) -> RngStream:
    """Training-path stream of the exercise models for ``tenor_days``-day options."""
    return RngStream(seed, LSMC_STREAM).child(tenor_days)


def fit_exercise_models(
    params: SabrParams, pricer: PricerConfig, tenor: float, rng: RngStream, days_per_year: int = TRADING_DAYS_PER_YEAR
) -> dict[OptionKind, ContinuationModel]:
    """Fits call and put exercise rules for ``tenor``-year American options.

    Training paths are risk-neutral on a daily grid and pooled over strikes
    around the initial spot.
    """
    n_steps = int(round(tenor * days_per_year))
    grid = TimeGrid(n_steps=n_steps, dt=1.0 / days_per_year)
    risk_neutral = replace(params, mu=pricer.rate)
    paths = simulate_paths(risk_neutral, grid, pricer.lsmc_training_paths, rng)
    strikes = [params.spot0 * m for m in (0.9, 0.95, 1.0, 1.05, 1.1)]
    return {
        kind: lsmc_fit(paths, kind, strikes, grid.n_steps * grid.dt, pricer.rate, pricer)
        for kind in (OptionKind.AMERICAN_CALL, OptionKind.AMERICAN_PUT)
    }


class HedgingEnv:
    """Stateful single-episode hedging simulator.

    One instance is used by a single thread; run several instances with
    distinct seeds for parallel rollouts.
    """

    def __init__(
        self,
        config: EnvConfig,
        params: SabrParams | None = None,
        note: AutocallableSpec | None = None,
        pricer: PricerConfig | None = None,
        exercise_models: dict[OptionKind, ContinuationModel] | None = None,
        hedge_exercise_models: dict[OptionKind, ContinuationModel] | None = None,
    ):
        self.config = config.resolved()
        self.params = params or SabrParams()
        self.note = note or AutocallableSpec()
        self.pricer = replace(pricer or PricerConfig(), rate=self.config.rate)
        self._schedule = observation_schedule(self.note)
        self._models: dict[int, dict[OptionKind, ContinuationModel]] = {}
        if exercise_models is not None:
            self._models[self._tenor_days(self.config.client_tenor)] = exercise_models
        if hedge_exercise_models is not None:
            self._models[self._tenor_days(self.config.hedge_tenor)] = hedge_exercise_models
        self._cache: NoteValuationCache | None = None
        if self.pricer.valuation_cache and self.config.mode == EnvMode.AUTOCALLABLE:
            self._cache = NoteValuationCache(self.note, self.params, self.pricer, RngStream(0, VALUATION_STREAM))

        self._state: EnvState | None = None
        self._episode_seed = 0
        self._day = 0
        self._step = 0
        self._done = True
        self._trace: list[TraceRow] = []

        assert self.config.horizon is not None
        self._days_per_step = self.config.days_per_step
        self._horizon_days = int(round(self.config.horizon * self.config.substeps_per_year))
        self._days_per_month = self.config.substeps_per_year // MONTHS_PER_YEAR
        self.tau_scale = self.note.autocall_frequency / MONTHS_PER_YEAR
        self.gamma_scale = self._initial_gamma_scale()

    # -- setup -----------------------------------------------------------

    def _tenor_days(self, tenor: float) -> int:
        return int(round(tenor * self.config.substeps_per_year))

    def exercise_models(self, tenor: float) -> dict[OptionKind, ContinuationModel]:
        """Exercise rules for American options of ``tenor`` years, fitted on first use."""
        days = self._tenor_days(tenor)
        if days not in self._models:
            logger.info("Fitting Longstaff-Schwartz exercise models for %d-day options", days)
            self._models[days] = fit_exercise_models(
                self.params, self.pricer, tenor, exercise_model_stream(0, days), self.config.substeps_per_year
            )
        return self._models[days]

    def _initial_gamma_scale(self) -> float:
        if self.config.mode == EnvMode.AUTOCALLABLE:
            gamma = self._value_note(self.params.spot0, self.params.sigma0, 0.0, 0).gamma
        else:
            atm = OptionSpec(OptionKind.EUROPEAN_CALL, self.params.spot0, self.config.client_tenor)
            gamma = value_option(atm, self.params.spot0, self.params.sigma0, 0.0, self.params, self.pricer).gamma
        return abs(gamma) if abs(gamma) > 1e-12 else 1.0

    # -- time helpers ----------------------------------------------------

    @property
    def t(self) -> float:
        return self._day / self.config.substeps_per_year

    def _tau_next_call(self) -> float:
        if self.config.mode != EnvMode.AUTOCALLABLE:
            assert self.config.dt is not None
            return self.config.dt
        for month in self._schedule.autocall_months:
            if month * self._days_per_month > self._day:
                return (month * self._days_per_month - self._day) / self.config.substeps_per_year
        return self.tau_scale

    def _next_call_time(self) -> float:
        return self.t + self._tau_next_call()

    # -- valuation -------------------------------------------------------

    def _value_note(self, spot: float, vol: float, t: float, day: int) -> Valuation:
        if self._cache is not None:
            return self._cache.value(spot, vol, t)
        rng = RngStream(self._episode_seed, VALUATION_STREAM).child(day)
        return price_autocallable_mc(self.note, spot, vol, t, self.params, self.pricer, rng)

    def _value(self, spec: OptionSpec) -> Valuation:
        state = self.state
        return value_option(spec, state.spot, state.vol, self.t, self.params, self.pricer, self.config.early_exercise)

    def _revalue(self) -> None:
        state = self.state
        client_value = client_delta = client_gamma = 0.0
        if state.note_alive:
            note = self._value_note(state.spot, state.vol, self.t, self._day)
            client_value, client_delta, client_gamma = -note.price, -note.delta, -note.gamma
        for pos in state.client_positions:
            v = self._value(pos)
            client_value += pos.quantity * v.price
            client_delta += pos.quantity * v.delta
            client_gamma += pos.quantity * v.gamma
        hedge_value = hedge_delta = hedge_gamma = 0.0
        for pos in state.hedge_positions:
            v = self._value(pos)
            hedge_value += pos.quantity * v.price
            hedge_delta += pos.quantity * v.delta
            hedge_gamma += pos.quantity * v.gamma
        state.client_delta, state.client_gamma = client_delta, client_gamma
        state.hedge_delta, state.hedge_gamma = hedge_delta, hedge_gamma
        state.portfolio_gamma = client_gamma + hedge_gamma
        state.tau_next_call = self._tau_next_call()
        state.book_value = state.cash + state.underlying_units * state.spot + client_value + hedge_value

    # -- public API ------------------------------------------------------

    @property
    def state(self) -> EnvState:
        if self._state is None:
            raise ContractError("environment has not been reset")
        return self._state

    @property
    def done(self) -> bool:
        return self._done

    def observe(self) -> Observation:
        """Normalised observation of the current state."""
        state = self.state
        features = np.array(
            [
                state.spot / self.note.initial_price - 1.0,
                state.portfolio_gamma / self.gamma_scale,
                state.tau_next_call / self.tau_scale,
            ]
        )
        return Observation(features)

    def normalization(self) -> dict[str, float]:
        """Constants used by :meth:`observe`."""
        return {"spot_scale": self.note.initial_price, "gamma_scale": self.gamma_scale, "tau_scale": self.tau_scale}

    def reset(self, seed: int) -> Observation:
        """Starts a fresh episode determined entirely by ``seed``."""
        self._episode_seed = int(seed)
        self._market_rng = RngStream(seed, MARKET_STREAM)
        self._arrival_rng = RngStream(seed, ARRIVAL_STREAM)
        self._day = 0
        self._step = 0
        self._trace = []
        self._state = EnvState(
            t=0.0,
            spot=self.params.spot0,
            vol=self.params.sigma0,
            portfolio_gamma=0.0,
            tau_next_call=0.0,
            cash=0.0,
            note_alive=self.config.mode == EnvMode.AUTOCALLABLE,
        )
        self._revalue()
        self._done = False
        return self.observe()

    def trace(self) -> list[TraceRow]:
        """Rows recorded so far in the current episode."""
        return list(self._trace)

    def _candidates(self) -> list[tuple[OptionSpec, Valuation]]:
        state = self.state
        if self.config.hedge_instrument == HedgeInstrument.DIGITAL:
            if self.config.mode == EnvMode.AUTOCALLABLE:
                maturity = self._next_call_time()
            else:
                maturity = self.t + self.config.hedge_tenor
            strike = self.note.initial_price * (1.0 + self.note.call_barrier)
            spec = OptionSpec(OptionKind.DIGITAL_CASH_CALL, strike, maturity, issue_time=self.t)
            return [(spec, self._value(spec))]
        maturity = self.t + self.config.hedge_tenor
        call = OptionSpec(OptionKind.AMERICAN_CALL, state.spot, maturity, issue_time=self.t)
        put = OptionSpec(OptionKind.AMERICAN_PUT, state.spot, maturity, issue_time=self.t)
        return [(call, self._value(call)), (put, self._value(put))]

    def step(self, action: float | None) -> Transition:
        """Rebalances with ``action``, moves the market by ``dt`` and settles.

        Args:
            action: Fraction of the maximum gamma hedge. Values outside [0, 1]
                are clipped and flagged; ``None`` skips the rebalance entirely.

        Returns:
            The transition, with diagnostics in ``info``.

        Raises:
            ContractError: If the episode has already finished.
        """
        if self._done:
            raise ContractError("step() called on a finished episode")
        state = self.state
        obs = self.observe()
        info: dict[str, Any] = {"clipped": False, "hedge_skipped": False, "exercised": 0, "autocalled": False}

        p_plus, cost, trade, applied = self._rebalance(action, info)
        gamma_client, gamma_hedge = state.client_gamma, state.hedge_gamma
        time_before = self.t
        spot_before = state.spot

        terminated = self._evolve(info)
        spot, t = state.spot, self.t
        if self.config.client_exercise:
            models = self.exercise_models(self.config.client_tenor)
            state.client_positions, cash, n = settle_early_exercise(state.client_positions, spot, t, models)
            state.cash += cash
            info["exercised"] += n
        if self.config.hedge_exercise:
            models = self.exercise_models(self.config.hedge_tenor)
            state.hedge_positions, cash, n = settle_early_exercise(state.hedge_positions, spot, t, models)
            state.cash += cash
            info["exercised"] += n

        self._step += 1
        done = terminated or self._day >= self._horizon_days
        if self.config.mode == EnvMode.VANILLA_FLOW and not done:
            self._book_arrivals()
        self._revalue()
        state.t = self.t

        reward = -cost + (state.book_value - p_plus)
        self._done = done
        info["transaction_cost"] = cost
        self._trace.append(
            TraceRow(
                step=self._step - 1,
                time=time_before,
                spot=spot_before,
                action=applied,
                units=trade.units if trade else 0.0,
                reward=reward,
                portfolio_value=state.book_value,
                gamma_client=gamma_client,
                gamma_hedge=gamma_hedge,
                done=done,
            )
        )
        return Transition(obs, applied, reward, self.observe(), done, info)

    # -- step internals --------------------------------------------------

    def _rebalance(self, action: float | None, info: dict[str, Any]) -> tuple[float, float, HedgeTrade | None, float]:
        state = self.state
        if action is None:
            info["no_trade"] = True
            return state.book_value, 0.0, None, 0.0
        a = float(action)
        if not math.isfinite(a) or a < 0.0 or a > 1.0:
            info["clipped"] = True
            logger.debug("Action %r clipped to [0, 1]", action)
            a = min(max(a, 0.0), 1.0) if math.isfinite(a) else 0.0

        trade = action_to_trade(state, a, self.config, self._candidates())
        info["hedge_skipped"] = trade.skipped
        if trade.skipped:
            logger.debug("Hedge instrument gamma %.3g too small; no option trade", trade.unit_gamma)

        cost = 0.0
        if trade.instrument is not None:
            position = trade.instrument.with_quantity(trade.units)
            state.hedge_positions.append(position)
            state.cash -= trade.units * trade.unit_value
            cost += self.config.kappa * abs(trade.unit_value * trade.units)
        state.underlying_units += trade.underlying_units
        state.cash -= trade.underlying_units * state.spot
        cost += self.config.underlying_cost * abs(trade.underlying_units * state.spot)
        self._revalue()
        info["book_delta"] = state.client_delta + state.hedge_delta + state.underlying_units
        info["book_gamma"] = state.portfolio_gamma
        return state.book_value, cost, trade, a

    def _evolve(self, info: dict[str, Any]) -> bool:
        """Advances the market one step in daily substeps; returns True on note termination."""
        state = self.state
        sub_dt = 1.0 / self.config.substeps_per_year
        growth = math.exp(self.config.rate * sub_dt)
        for _ in range(self._days_per_step):
            z = self._market_rng.normals(2)
            s, v = advance(
                np.array([state.spot]), np.array([state.vol]), self.params, sub_dt, z[:1], z[1:], self.params.mu
            )
            state.spot, state.vol = float(s[0]), float(v[0])
            state.cash *= growth
            self._day += 1
            terminated = self._settle_note(info)
            self._settle_expiries()
            if terminated:
                return True
        return False

    def _settle_note(self, info: dict[str, Any]) -> bool:
        state = self.state
        if not state.note_alive or self._day % self._days_per_month != 0:
            return False
        month = self._day // self._days_per_month
        if month not in self._schedule.coupon_months and month not in self._schedule.autocall_months:
            return False
        obs = observe_note(self.note, month, state.spot, self._schedule)
        state.cash -= obs.coupon + obs.redemption
        info["coupon_paid"] = obs.coupon
        if obs.terminated:
            state.note_alive = False
            info["autocalled"] = state.spot / self.note.initial_price - 1.0 >= self.note.call_barrier
            return True
        return False

    def _settle_expiries(self) -> None:
        state = self.state
        t = self.t
        for book in (state.client_positions, state.hedge_positions):
            expired = [p for p in book if p.maturity <= t + 1e-9]
            for pos in expired:
                state.cash += pos.quantity * float(vanilla_payoff(pos, state.spot))
                book.remove(pos)

    def _book_arrivals(self) -> None:
        state = self.state
        state.t = self.t
        for spec in client_flow_arrivals(state, self._arrival_rng, self.config):
            state.cash -= spec.quantity * self._value(spec).price
            state.client_positions.append(spec)
