# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""Valuation of every instrument the laboratory trades.

- closed forms (Black-Scholes) for European and cash-or-nothing digital options,
- a CRR binomial tree for American options (oracle and in-book marking),
- Longstaff-Schwartz regression for early-exercise decisions,
- nested Monte Carlo with finite-difference Greeks for the autocallable note.

Finite-difference Greeks always use common random numbers: the three bumped
valuations see exactly the same draws.
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.stats import norm

from ..errors import ConfigError, ContractError, PricingError
from .instruments import (
    MONTHS_PER_YEAR,
    AutocallableSpec,
    OptionKind,
    OptionSpec,
    intrinsic,
    note_flows_batch,
    observation_schedule,
    remaining_months,
    vanilla_payoff,
)
from .market import TRADING_DAYS_PER_YEAR, PathSet, RngStream, SabrParams, advance, sabr_implied_vol

logger = logging.getLogger(__name__)

_TIME_EPS = 1e-12


class Valuation(NamedTuple):
    """Price and first two spot sensitivities of one unit of an instrument."""

    price: float
    delta: float
    gamma: float
    std_error: float = 0.0


@dataclass(frozen=True)
class PricerConfig:
    """Numerical settings shared by all pricers.

    Attributes:
        n_mc_paths: Inner paths per autocallable valuation.
        fd_bump_rel: Relative spot bump for finite differences.
        binomial_steps: Tree steps for the American oracle.
        lsmc_basis_degree: Polynomial degree of the continuation regression.
        lsmc_training_paths: Minimum number of regression paths.
        rate: Continuously compounded risk-free rate.
        book_tree_steps: Tree steps used to mark American positions in a book.
        valuation_cache: Interpolate note valuations on a (spot x vol) grid.
        cache_spot_points: Spot nodes of the cache grid.
        cache_spot_range: Spot grid bounds relative to the note's initial price.
        cache_vol_points: Vol nodes of the cache grid.
        cache_vol_range: Vol grid bounds relative to the initial volatility.
    """

    n_mc_paths: int = 2000
    fd_bump_rel: float = 0.005
    binomial_steps: int = 2000
    lsmc_basis_degree: int = 3
    lsmc_training_paths: int = 10000
    rate: float = 0.0
    book_tree_steps: int = 100
    valuation_cache: bool = False
    cache_spot_points: int = 41
    cache_spot_range: tuple[float, float] = (0.3, 1.7)
    cache_vol_points: int = 9
    cache_vol_range: tuple[float, float] = (0.25, 3.0)

    def __post_init__(self) -> None:
        for name in ("n_mc_paths", "binomial_steps", "lsmc_training_paths", "book_tree_steps"):
            if getattr(self, name) < 1:
                raise ConfigError(f"pricer.{name}", "must be at least 1")
        if self.lsmc_basis_degree < 0:
            raise ConfigError("pricer.lsmc_basis_degree", "must be non-negative")
        if not 0.0 < self.fd_bump_rel < 0.1:
            raise ConfigError("pricer.fd_bump_rel", "must lie in (0, 0.1)")
        if self.cache_spot_points < 2 or self.cache_vol_points < 2:
            raise ConfigError("pricer.cache_spot_points", "cache grids need at least two nodes")


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def bs_european(
    kind: OptionKind, spot: float, strike: float, vol: float, rate: float, time_to_maturity: float
) -> Valuation:
    """Black-Scholes price, delta and gamma of a European call or put.

    With zero volatility or no time left the discounted intrinsic value of the
    forward is returned with one-sided Greeks.
    """
    t = max(time_to_maturity, 0.0)
    df = math.exp(-rate * t)
    call = kind.is_call
    if vol <= 0.0 or t <= _TIME_EPS:
        moneyness = spot - strike * df
        if call:
            return Valuation(max(moneyness, 0.0), 1.0 if moneyness > 0 else 0.0, 0.0)
        return Valuation(max(-moneyness, 0.0), -1.0 if moneyness < 0 else 0.0, 0.0)

    sqrt_t = math.sqrt(t)
    d1 = (math.log(spot / strike) + (rate + 0.5 * vol**2) * t) / (vol * sqrt_t)
    d2 = d1 - vol * sqrt_t
    gamma = norm.pdf(d1) / (spot * vol * sqrt_t)
    if call:
        price = spot * norm.cdf(d1) - strike * df * norm.cdf(d2)
        delta = norm.cdf(d1)
    else:
        price = strike * df * norm.cdf(-d2) - spot * norm.cdf(-d1)
        delta = norm.cdf(d1) - 1.0
    return Valuation(float(price), float(delta), float(gamma))


def bs_digital(
    kind: OptionKind,
    spot: float,
    strike: float,
    vol: float,
    rate: float,
    time_to_maturity: float,
    cash_amount: float = 1.0,
) -> Valuation:
    """Cash-or-nothing digital call or put with analytic Greeks."""
    t = max(time_to_maturity, 0.0)
    df = math.exp(-rate * t)
    call = kind.is_call
    if vol <= 0.0 or t <= _TIME_EPS:
        forward_hit = spot >= strike * df if call else spot <= strike * df
        return Valuation(cash_amount * df * float(forward_hit), 0.0, 0.0)

    sqrt_t = math.sqrt(t)
    d1 = (math.log(spot / strike) + (rate + 0.5 * vol**2) * t) / (vol * sqrt_t)
    d2 = d1 - vol * sqrt_t
    sign = 1.0 if call else -1.0
    price = cash_amount * df * norm.cdf(sign * d2)
    delta = sign * cash_amount * df * norm.pdf(d2) / (spot * vol * sqrt_t)
    gamma = -sign * cash_amount * df * norm.pdf(d2) * d1 / (spot**2 * vol**2 * t)
    return Valuation(float(price), float(delta), float(gamma))


# ---------------------------------------------------------------------------
# Binomial tree
# ---------------------------------------------------------------------------


def _deterministic_american(
    kind: OptionKind,
    spot: float,
    strike: float,
    rate: float,
    t: float,
    steps: int,
    exercise_times: Sequence[float] | None = None,
) -> float:
    if exercise_times is None:
        times = np.linspace(0.0, t, steps + 1)
    else:
        times = np.array(sorted({min(max(float(s), 0.0), t) for s in exercise_times} | {t}))
    values = np.exp(-rate * times) * intrinsic(kind, strike, spot * np.exp(rate * times))
    return float(values.max())


def binomial_valuation(
    kind: OptionKind,
    spot: float,
    strike: float,
    vol: float,
    rate: float,
    time_to_maturity: float,
    steps: int,
    exercise_times: Sequence[float] | None = None,
) -> Valuation:
    """CRR tree value with delta and gamma read off the first two tree levels.

    American kinds may be exercised at every node, or only on the levels
    nearest to ``exercise_times`` (years from now) when given, which
    prices the Bermudan version. European kinds are never exercised early.
    """
    if steps < 1:
        raise ConfigError("pricer.binomial_steps", "must be at least 1")
    t = max(time_to_maturity, 0.0)
    if t <= _TIME_EPS:
        return Valuation(float(intrinsic(kind, strike, spot)), _intrinsic_delta(kind, spot, strike), 0.0)
    if vol <= 0.0:
        if kind.is_american:
            price = _deterministic_american(kind, spot, strike, rate, t, steps, exercise_times)
        else:
            price = bs_european(kind, spot, strike, 0.0, rate, t).price
        return Valuation(price, _intrinsic_delta(kind, spot, strike), 0.0)

    dt = t / steps
    u = math.exp(vol * math.sqrt(dt))
    d = 1.0 / u
    growth = math.exp(rate * dt)
    p = (growth - d) / (u - d)
    if not 0.0 <= p <= 1.0:
        raise PricingError(f"binomial probability {p:.4f} outside [0, 1]; increase steps")
    disc = 1.0 / growth

    exercisable = np.full(steps + 1, kind.is_american)
    if kind.is_american and exercise_times is not None:
        exercisable[:] = False
        for s in exercise_times:
            n = int(round(s / dt))
            if 0 <= n <= steps:
                exercisable[n] = True

    j = np.arange(steps + 1)
    spots = spot * u ** (steps - 2 * j)
    values = intrinsic(kind, strike, spots)
    level1 = level2 = None
    for n in range(steps - 1, -1, -1):
        spots = spots[:-1] * d
        values = disc * (p * values[:-1] + (1.0 - p) * values[1:])
        if exercisable[n]:
            values = np.maximum(values, intrinsic(kind, strike, spots))
        if n == 2:
            level2 = (spots.copy(), values.copy())
        elif n == 1:
            level1 = (spots.copy(), values.copy())

    price = float(values[0])
    if level1 is None:
        return Valuation(price, _intrinsic_delta(kind, spot, strike), 0.0)
    s1, v1 = level1
    delta = float((v1[0] - v1[1]) / (s1[0] - s1[1]))
    gamma = 0.0
    if level2 is not None:
        s2, v2 = level2
        up = (v2[0] - v2[1]) / (s2[0] - s2[1])
        down = (v2[1] - v2[2]) / (s2[1] - s2[2])
        gamma = float((up - down) / (0.5 * (s2[0] - s2[2])))
    return Valuation(price, delta, gamma)


def binomial_american(
    kind: OptionKind,
    spot: float,
    strike: float,
    vol: float,
    rate: float,
    time_to_maturity: float,
    steps: int,
    exercise_times: Sequence[float] | None = None,
) -> float:
    """CRR binomial price; early exercise at every node unless ``exercise_times`` restricts it."""
    return binomial_valuation(kind, spot, strike, vol, rate, time_to_maturity, steps, exercise_times).price


def _intrinsic_delta(kind: OptionKind, spot: float, strike: float) -> float:
    if kind.is_call:
        return 1.0 if spot > strike else 0.0
    return -1.0 if spot < strike else 0.0


# ---------------------------------------------------------------------------
# Longstaff-Schwartz
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContinuationModel:
    """Fitted Longstaff-Schwartz exercise rule.

    Times are measured from the option's issue. Features are powers of the
    moneyness ``spot / strike``; one coefficient vector per exercise date.

    Attributes:
        kind: Option kind the rule was fitted for.
        times: Exercise dates before maturity, ascending, starting at 0.
        coefficients: Regression coefficients per date (length = degree + 1).
        maturity: Option tenor the model was fitted for.
        rate: Discount rate used in the fit.
        strikes: Strikes pooled into the regression.
        degraded: True when a rank-deficient date after issue forced a lower degree.
    """

    kind: OptionKind
    times: tuple[float, ...]
    coefficients: tuple[np.ndarray, ...]
    maturity: float
    rate: float
    strikes: tuple[float, ...] = ()
    degraded: bool = False
    degrees: tuple[int, ...] = field(default=())

    def date_index(self, t: float) -> int:
        """Index of the exercise date at or immediately before ``t``."""
        return max(int(np.searchsorted(self.times, t + 1e-9, side="right")) - 1, 0)

    def continuation(self, moneyness: np.ndarray | float, index: int) -> np.ndarray:
        coef = self.coefficients[index]
        return np.polynomial.polynomial.polyval(moneyness, coef)


def _fit_date(x: np.ndarray, y: np.ndarray, degree: int) -> tuple[np.ndarray, int, bool]:
    degraded = False
    while True:
        basis = np.vander(x, degree + 1, increasing=True)
        if degree == 0 or np.linalg.matrix_rank(basis) == degree + 1:
            break
        degree -= 1
        degraded = True
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    return coef, degree, degraded


def lsmc_fit(
    paths: PathSet,
    kind: OptionKind,
    strikes: list[float] | tuple[float, ...],
    maturity: float,
    rate: float,
    config: PricerConfig,
) -> ContinuationModel:
    """Fits continuation values by backward least-squares regression.

    Every path is paired with every strike; the moneyness feature lets one
    regression per date serve all strikes. Only in-the-money samples enter a
    regression, unless fewer of them exist than coefficients.

    Args:
        paths: Risk-neutral training paths starting at issue.
        kind: American call or put.
        strikes: Strikes to pool.
        maturity: Option tenor in years; must lie on the path grid.
        rate: Discount rate.
        config: Supplies the basis degree and the minimum path count.

    Returns:
        The fitted, immutable continuation model.
    """
    if paths.n_paths < config.lsmc_training_paths:
        raise ContractError(f"LSMC needs {config.lsmc_training_paths} paths, got {paths.n_paths}")
    dt = paths.grid.dt
    n_mat = int(round(maturity / dt))
    if n_mat < 1 or n_mat > paths.grid.n_steps or abs(n_mat * dt - maturity) > 1e-9:
        raise ContractError(f"maturity {maturity} is not covered by the path grid")

    strikes_arr = np.asarray(strikes, dtype=float)
    spots = paths.spots[:, : n_mat + 1]
    cash = intrinsic(kind, strikes_arr[None, :], spots[:, n_mat, None])
    df = math.exp(-rate * dt)

    coefficients: list[np.ndarray] = [np.zeros(1)] * n_mat
    degrees = [0] * n_mat
    degraded_any = False
    for k in range(n_mat - 1, -1, -1):
        cash = cash * df
        s_k = spots[:, k, None]
        exercise_value = intrinsic(kind, strikes_arr[None, :], s_k)
        moneyness = s_k / strikes_arr[None, :]
        itm = exercise_value > 0
        mask = itm if itm.sum() > config.lsmc_basis_degree else np.ones_like(itm)
        coef, degree, degraded = _fit_date(moneyness[mask], cash[mask], config.lsmc_basis_degree)
        # Every path starts at the same spot, so the issue date sees one
        # moneyness per strike and a reduced basis there is expected.
        if degraded and k > 0:
            logger.debug("LSMC date %d fell back to degree %d", k, degree)
            degraded_any = True
        coefficients[k] = coef
        degrees[k] = degree

        continuation = np.polynomial.polynomial.polyval(moneyness, coef)
        exercise = itm & (exercise_value > continuation)
        cash = np.where(exercise, exercise_value, cash)

    if degraded_any:
        logger.info("LSMC fit for %s used a reduced basis on some dates", kind.value)
    return ContinuationModel(
        kind=kind,
        times=tuple(float(k * dt) for k in range(n_mat)),
        coefficients=tuple(coefficients),
        maturity=float(maturity),
        rate=float(rate),
        strikes=tuple(float(s) for s in strikes_arr),
        degraded=degraded_any,
        degrees=tuple(degrees),
    )


def lsmc_exercise_decision(model: ContinuationModel, spot: float, t: float, kind: OptionKind, strike: float) -> bool:
    """Holder-optimal exercise test at ``t`` years after the option's issue.

    Exercises iff the intrinsic value strictly exceeds the predicted
    continuation. Times off the model grid use the nearest earlier date; at or
    after maturity any in-the-money option is exercised.
    """
    value = float(intrinsic(kind, strike, spot))
    if value <= 0.0:
        return False
    if t >= model.maturity - 1e-9:
        return True
    index = model.date_index(t)
    return bool(value > float(model.continuation(spot / strike, index)))


def lsmc_price(
    model: ContinuationModel, paths: PathSet, kind: OptionKind, strike: float, rate: float
) -> tuple[float, float]:
    """Prices an option by applying a fitted exercise rule to independent paths.

    Returns:
        The price and its Monte Carlo standard error.
    """
    dt = paths.grid.dt
    n_mat = int(round(model.maturity / dt))
    if n_mat > paths.grid.n_steps:
        raise ContractError("evaluation paths end before the model maturity")
    spots = paths.spots
    n = paths.n_paths
    payoff = np.zeros(n)
    alive = np.ones(n, dtype=bool)
    for index, t in enumerate(model.times):
        k = int(round(t / dt))
        s_k = spots[:, k]
        value = intrinsic(kind, strike, s_k)
        continuation = model.continuation(s_k / strike, index)
        exercise = alive & (value > 0) & (value > continuation)
        payoff[exercise] = value[exercise] * math.exp(-rate * t)
        alive &= ~exercise
    final = intrinsic(kind, strike, spots[:, n_mat]) * math.exp(-rate * model.maturity)
    payoff[alive] = final[alive]
    return float(payoff.mean()), float(payoff.std(ddof=1) / math.sqrt(n))


# ---------------------------------------------------------------------------
# Finite differences and the autocallable
# ---------------------------------------------------------------------------

Pricer = Callable[[float, RngStream | None], float]


def fd_greeks(pricer: Pricer, spot: float, bump_rel: float, rng: RngStream | None = None) -> tuple[float, float]:
    """Central-difference delta and gamma with common random numbers.

    Args:
        pricer: Value as a function of spot and a random stream; it must be
            deterministic for a given stream.
        spot: Spot to differentiate at.
        bump_rel: Bump as a fraction of spot.
        rng: Stream restarted for each of the three evaluations.

    Returns:
        ``(delta, gamma)``.
    """
    return fd_valuation(pricer, spot, bump_rel, rng)[1:3]


def fd_valuation(pricer: Pricer, spot: float, bump_rel: float, rng: RngStream | None = None) -> Valuation:
    """Like :func:`fd_greeks` but also returns the unbumped value."""
    h = bump_rel * spot
    if not h > 0 or spot + h == spot or spot - h == spot:
        raise PricingError(f"finite-difference bump {h!r} underflows at spot {spot!r}")

    def at(s: float) -> float:
        return pricer(s, rng.fresh() if rng is not None else None)

    down, mid, up = at(spot - h), at(spot), at(spot + h)
    delta = (up - down) / (2.0 * h)
    gamma = (up - 2.0 * mid + down) / (h * h)
    return Valuation(mid, delta, gamma)


def _note_inner_months(spec: AutocallableSpec, t_now: float) -> np.ndarray:
    months = remaining_months(spec, t_now)
    if months.size == 0:
        raise ContractError(f"note has no observation left after t={t_now}")
    return months


def _note_paths(
    spot: float, vol: float, params: SabrParams, rate: float, step_lengths: np.ndarray, normals: np.ndarray
) -> np.ndarray:
    n = normals.shape[0]
    s = np.full(n, spot)
    v = np.full(n, vol)
    out = np.empty((n, step_lengths.size))
    for k, dt in enumerate(step_lengths):
        s, v = advance(s, v, params, float(dt), normals[:, k, 0], normals[:, k, 1], rate)
        out[:, k] = s
    return out


def price_autocallable_mc(
    spec: AutocallableSpec,
    spot: float,
    vol_state: float,
    t_now: float,
    params: SabrParams,
    config: PricerConfig,
    rng: RngStream,
) -> Valuation:
    """Values the note by nested Monte Carlo on its remaining observation months.

    Inner paths start at ``(spot, vol_state)`` at ``t_now`` and step from one
    observation month to the next under the risk-neutral drift ``config.rate``.
    A zero volatility state is deterministic and is evaluated exactly.

    Returns:
        Price, CRN finite-difference delta and gamma, and the standard error.
    """
    months = _note_inner_months(spec, t_now)
    obs_times = months / MONTHS_PER_YEAR
    step_lengths = np.diff(np.concatenate(([t_now], obs_times)))

    if vol_state <= 0.0:

        def deterministic(s: float, _rng: RngStream | None) -> float:
            path = s * np.exp(config.rate * (obs_times - t_now))
            return float(note_flows_batch(spec, path[None, :], months, config.rate, t_now)[0])

        return fd_valuation(deterministic, spot, config.fd_bump_rel)

    samples: dict[float, np.ndarray] = {}

    def monte_carlo(s: float, stream: RngStream | None) -> float:
        assert stream is not None
        normals = stream.normals((config.n_mc_paths, months.size, 2))
        inner = _note_paths(s, vol_state, params, config.rate, step_lengths, normals)
        pv = note_flows_batch(spec, inner, months, config.rate, t_now)
        samples[s] = pv
        return float(pv.mean())

    valuation = fd_valuation(monte_carlo, spot, config.fd_bump_rel, rng)
    pv = samples[spot]
    std_error = float(pv.std(ddof=1) / math.sqrt(pv.size)) if pv.size > 1 else 0.0
    return valuation._replace(std_error=std_error)


def value_option(
    spec: OptionSpec,
    spot: float,
    vol_state: float,
    t: float,
    params: SabrParams,
    config: PricerConfig,
    early_exercise: bool = True,
) -> Valuation:
    """Values one unit of an option with the SABR implied volatility at its strike.

    American options are marked on a binomial tree when early exercise is
    enabled and as European options otherwise.
    """
    tau = spec.maturity - t
    if tau <= 1e-9:
        payoff = float(vanilla_payoff(spec, spot))
        delta = 0.0 if spec.kind.is_digital else _intrinsic_delta(spec.kind, spot, spec.strike)
        return Valuation(payoff, delta, 0.0)
    forward = spot * math.exp(config.rate * tau)
    vol = sabr_implied_vol(forward, spec.strike, tau, vol_state, params)
    if spec.kind.is_digital:
        return bs_digital(spec.kind, spot, spec.strike, vol, config.rate, tau, spec.cash_amount)
    if spec.kind.is_american and early_exercise:
        return binomial_valuation(spec.kind, spot, spec.strike, vol, config.rate, tau, config.book_tree_steps)
    return bs_european(spec.kind, spot, spec.strike, vol, config.rate, tau)


class NoteValuationCache:
    """Interpolated note valuations on a (spot x vol) grid per valuation time.

    Node valuations are computed lazily, each with its own node-keyed random
    stream, so the cached values do not depend on the order of requests.
    Price, delta and gamma are interpolated bilinearly; queries outside the
    grid are clamped to its edges.
    """

    def __init__(self, spec: AutocallableSpec, params: SabrParams, config: PricerConfig, rng: RngStream):
        self._spec = spec
        self._params = params
        self._config = config
        self._rng = rng
        lo, hi = config.cache_spot_range
        self.spot_nodes = spec.initial_price * np.linspace(lo, hi, config.cache_spot_points)
        vlo, vhi = config.cache_vol_range
        self.vol_nodes = params.sigma0 * np.linspace(vlo, vhi, config.cache_vol_points)
        self._nodes: dict[tuple[int, int, int], Valuation] = {}

    def __len__(self) -> int:
        return len(self._nodes)

    def _node(self, t_key: int, i: int, j: int, t: float) -> Valuation:
        key = (t_key, i, j)
        if key not in self._nodes:
            self._nodes[key] = price_autocallable_mc(
                self._spec,
                float(self.spot_nodes[i]),
                float(self.vol_nodes[j]),
                t,
                self._params,
                self._config,
                self._rng.child(t_key, i, j),
            )
        return self._nodes[key]

    @staticmethod
    def _bracket(nodes: np.ndarray, x: float) -> tuple[int, float]:
        x = min(max(x, nodes[0]), nodes[-1])
        i = min(int(np.searchsorted(nodes, x, side="right")) - 1, nodes.size - 2)
        w = (x - nodes[i]) / (nodes[i + 1] - nodes[i])
        return i, float(w)

    def value(self, spot: float, vol_state: float, t: float) -> Valuation:
        """Interpolated valuation at ``(spot, vol_state)`` and time ``t``."""
        if self._params.sigma0 <= 0.0:
            return price_autocallable_mc(self._spec, spot, vol_state, t, self._params, self._config, self._rng)
        t_key = int(round(t * TRADING_DAYS_PER_YEAR))
        i, wi = self._bracket(self.spot_nodes, spot)
        j, wj = self._bracket(self.vol_nodes, vol_state)
        corners = [
            ((1 - wi) * (1 - wj), self._node(t_key, i, j, t)),
            (wi * (1 - wj), self._node(t_key, i + 1, j, t)),
            ((1 - wi) * wj, self._node(t_key, i, j + 1, t)),
            (wi * wj, self._node(t_key, i + 1, j + 1, t)),
        ]
        price = sum(w * v.price for w, v in corners)
        delta = sum(w * v.delta for w, v in corners)
        gamma = sum(w * v.gamma for w, v in corners)
        std_error = sum(w * v.std_error for w, v in corners)
        return Valuation(float(price), float(delta), float(gamma), float(std_error))


class GreeksProfileRow(NamedTuple):
    spot: float
    days_before_call: int
    value: float
    delta: float
    gamma: float


def greeks_profile(
    spec: AutocallableSpec,
    spots: list[float] | np.ndarray,
    days_before_call: tuple[int, ...],
    params: SabrParams,
    config: PricerConfig,
    rng: RngStream,
) -> list[GreeksProfileRow]:
    """Note value, delta and gamma across spots at several days before the first call date.

    One random stream per day is shared across the spot sweep so that each
    curve is smooth in spot.
    """
    first_call = observation_schedule(spec).autocall_months[0] / MONTHS_PER_YEAR
    rows: list[GreeksProfileRow] = []
    for d_index, days in enumerate(days_before_call):
        t = first_call - days / TRADING_DAYS_PER_YEAR
        if t < 0:
            raise ContractError(f"{days} days before the first call date precedes issue")
        stream = rng.child(d_index)
        for s in spots:
            val = price_autocallable_mc(spec, float(s), params.sigma0, t, params, config, stream)
            rows.append(GreeksProfileRow(float(s), int(days), val.price, val.delta, val.gamma))
    return rows
