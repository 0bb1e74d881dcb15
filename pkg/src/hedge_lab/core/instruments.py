# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""Contract terms and pathwise cash-flow logic.

Covers the autocallable coupon note (monthly coupons, semi-annual autocall,
contingent principal protection) and the vanilla/digital options used as
client flow and hedge instruments. Every barrier comparison is inclusive.
"""

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from ..errors import ConfigError, ContractError

MONTHS_PER_YEAR = 12


class OptionKind(str, Enum):
    """Supported option payoffs."""

    EUROPEAN_CALL = "european_call"
    EUROPEAN_PUT = "european_put"
    DIGITAL_CASH_CALL = "digital_cash_call"
    DIGITAL_CASH_PUT = "digital_cash_put"
    AMERICAN_CALL = "american_call"
    AMERICAN_PUT = "american_put"

    @property
    def is_call(self) -> bool:
        return self.value.endswith("_call")

    @property
    def is_american(self) -> bool:
        return self.value.startswith("american")

    @property
    def is_digital(self) -> bool:
        return self.value.startswith("digital")


@dataclass(frozen=True)
class OptionSpec:
    """Terms of a single option position.

    Attributes:
        kind: Payoff type.
        strike: Strike price.
        maturity: Absolute expiry time in episode years.
        cash_amount: Digital payout (ignored for other kinds).
        quantity: Signed position size; negative means short.
        issue_time: Episode time at which the option was written.
    """

    kind: OptionKind
    strike: float
    maturity: float
    cash_amount: float = 1.0
    quantity: float = 1.0
    issue_time: float = 0.0

    def __post_init__(self) -> None:
        if not self.strike > 0:
            raise ContractError(f"option strike must be positive, got {self.strike}")
        if not self.maturity > self.issue_time:
            raise ContractError(f"option maturity {self.maturity} must follow issue time {self.issue_time}")
        if self.kind.is_digital and not self.cash_amount > 0:
            raise ContractError("digital cash amount must be positive")

    def with_quantity(self, quantity: float) -> "OptionSpec":
        """Returns a copy of the spec with a different position size."""
        return OptionSpec(self.kind, self.strike, self.maturity, self.cash_amount, quantity, self.issue_time)


@dataclass(frozen=True)
class AutocallableSpec:
    """Autocallable coupon note terms; defaults follow the regional-bank index note.

    Frequencies are in months, barriers are returns relative to ``initial_price``.
    """

    initial_price: float = 100.0
    term: float = 7.0
    coupon_frequency: int = 1
    coupon_rate: float = 0.0095
    coupon_barrier: float = -0.35
    autocall_frequency: int = 6
    call_barrier: float = 0.0
    protection_barrier: float = -0.35
    notional: float = 100.0

    def __post_init__(self) -> None:
        if not self.term > 0:
            raise ConfigError("note.term", "must be positive")
        if abs(self.term * MONTHS_PER_YEAR - round(self.term * MONTHS_PER_YEAR)) > 1e-9:
            raise ConfigError("note.term", "must be a whole number of months")
        if self.coupon_frequency < 1 or self.autocall_frequency < 1:
            raise ConfigError("note.coupon_frequency", "frequencies must be at least one month")
        if self.autocall_frequency % self.coupon_frequency != 0:
            raise ConfigError("note.autocall_frequency", "must be a multiple of coupon_frequency")
        if self.protection_barrier > 0:
            raise ConfigError("note.protection_barrier", "must be non-positive")
        if self.coupon_barrier > self.call_barrier:
            raise ConfigError("note.coupon_barrier", "must not exceed call_barrier")
        if not self.initial_price > 0:
            raise ConfigError("note.initial_price", "must be positive")
        if not self.notional > 0:
            raise ConfigError("note.notional", "must be positive")

    @property
    def term_months(self) -> int:
        return int(round(self.term * MONTHS_PER_YEAR))

    @property
    def coupon(self) -> float:
        """Coupon amount paid per qualifying observation."""
        return self.coupon_rate * self.notional

    @property
    def max_total_flows(self) -> float:
        """Upper bound on the undiscounted sum of all note flows."""
        n_coupons = len(observation_schedule(self).coupon_months)
        return self.notional + n_coupons * self.coupon


class CashFlow(NamedTuple):
    """A dated payment from the note issuer to the holder."""

    time: float
    amount: float


class TerminatedBy(str, Enum):
    AUTOCALL = "autocall"
    MATURITY = "maturity"


class NoteLifecycle(NamedTuple):
    """All flows of one note along one path and how it ended."""

    flows: list[CashFlow]
    termination_time: float
    terminated_by: TerminatedBy

    @property
    def total(self) -> float:
        return sum(f.amount for f in self.flows)


class ObservationSchedule(NamedTuple):
    """Observation months counted from issue; the last autocall month is maturity."""

    coupon_months: tuple[int, ...]
    autocall_months: tuple[int, ...]


class NoteObservation(NamedTuple):
    """Outcome of a single observation date."""

    coupon: float
    redemption: float
    terminated: bool


def observation_schedule(spec: AutocallableSpec) -> ObservationSchedule:
    """Returns the coupon and autocall observation months of ``spec``."""
    term = spec.term_months
    coupons = tuple(range(spec.coupon_frequency, term + 1, spec.coupon_frequency))
    calls = list(range(spec.autocall_frequency, term + 1, spec.autocall_frequency))
    if not calls or calls[-1] != term:
        calls.append(term)
    return ObservationSchedule(coupons, tuple(calls))


def observe_note(
    spec: AutocallableSpec, month: int, spot: float, schedule: ObservationSchedule | None = None
) -> NoteObservation:
    """Evaluates the note's rules on one observation month.

    Args:
        spec: Note terms.
        month: Months since issue.
        spot: Spot observed on that date.
        schedule: Precomputed schedule of ``spec``.

    Returns:
        The coupon paid, the redemption paid and whether the note ends.
    """
    schedule = schedule or observation_schedule(spec)
    ret = spot / spec.initial_price - 1.0
    coupon = spec.coupon if month in schedule.coupon_months and ret >= spec.coupon_barrier else 0.0
    if month in schedule.autocall_months and ret >= spec.call_barrier:
        return NoteObservation(coupon, spec.notional, True)
    if month == spec.term_months:
        principal = spec.notional if ret >= spec.protection_barrier else spec.notional * (1.0 + ret)
        return NoteObservation(coupon, principal, True)
    return NoteObservation(coupon, 0.0, False)


def note_lifecycle(spec: AutocallableSpec, path: np.ndarray | list[float]) -> NoteLifecycle:
    """Runs the note over a monthly path.

    Args:
        spec: Note terms.
        path: Spots on the monthly grid; ``path[m]`` is the spot ``m`` months
            after issue, so at least ``term_months + 1`` values are needed.

    Returns:
        The note's flows, coupons and redemption on one date merged into one flow.

    Raises:
        ContractError: If the path does not reach maturity.
    """
    path = np.asarray(path, dtype=float)
    if path.shape[0] < spec.term_months + 1:
        raise ContractError(f"path has {path.shape[0]} monthly points, schedule needs {spec.term_months + 1}")
    schedule = observation_schedule(spec)
    observed = sorted(set(schedule.coupon_months) | set(schedule.autocall_months))
    flows: list[CashFlow] = []
    for month in observed:
        obs = observe_note(spec, month, float(path[month]), schedule)
        amount = obs.coupon + obs.redemption
        if amount != 0.0:
            flows.append(CashFlow(month / MONTHS_PER_YEAR, amount))
        if obs.terminated:
            ret = path[month] / spec.initial_price - 1.0
            by = TerminatedBy.AUTOCALL if ret >= spec.call_barrier else TerminatedBy.MATURITY
            return NoteLifecycle(flows, month / MONTHS_PER_YEAR, by)
    raise ContractError("schedule ended without a terminating observation")


def remaining_months(spec: AutocallableSpec, t_now: float) -> np.ndarray:
    """Observation months strictly after ``t_now`` (years since issue)."""
    schedule = observation_schedule(spec)
    observed = np.array(sorted(set(schedule.coupon_months) | set(schedule.autocall_months)), dtype=int)
    return observed[observed > t_now * MONTHS_PER_YEAR + 1e-9]


def note_flows_batch(
    spec: AutocallableSpec, spots: np.ndarray, months: np.ndarray, rate: float = 0.0, t_now: float = 0.0
) -> np.ndarray:
    """Vectorised present value of the note's future flows.

    Args:
        spec: Note terms.
        spots: Spots of shape ``(n_paths, len(months))`` on the observation months.
        months: Remaining observation months, increasing, ending at maturity.
        rate: Continuously compounded discount rate.
        t_now: Valuation time in years since issue.

    Returns:
        Present value of each path's flows, shape ``(n_paths,)``.
    """
    schedule = observation_schedule(spec)
    months = np.asarray(months, dtype=int)
    ret = spots / spec.initial_price - 1.0
    is_coupon = np.isin(months, schedule.coupon_months)
    is_call = np.isin(months, schedule.autocall_months)
    is_final = months == spec.term_months

    coupon_ok = (ret >= spec.coupon_barrier) & is_coupon
    call_ok = (ret >= spec.call_barrier) & is_call
    called_before = np.cumsum(call_ok, axis=1) - call_ok
    alive = called_before == 0

    principal = np.where(ret >= spec.protection_barrier, spec.notional, spec.notional * (1.0 + ret))
    redemption = np.where(call_ok, spec.notional, np.where(is_final, principal, 0.0))
    flows = alive * (coupon_ok * spec.coupon + redemption)

    discount = np.exp(-rate * (months / MONTHS_PER_YEAR - t_now))
    return flows @ discount


def vanilla_payoff(spec: OptionSpec, spot: float | np.ndarray) -> float | np.ndarray:
    """Payoff of one unit of ``spec`` at ``spot``; the position sign is not applied.

    Digital payoffs include the strike itself.
    """
    k = spec.strike
    if spec.kind.is_digital:
        hit = spot >= k if spec.kind.is_call else spot <= k
        if isinstance(spot, np.ndarray):
            return spec.cash_amount * np.asarray(hit, dtype=float)
        return spec.cash_amount * float(hit)
    if spec.kind.is_call:
        return np.maximum(spot - k, 0.0)
    return np.maximum(k - spot, 0.0)


def intrinsic(kind: OptionKind, strike: float, spot: float | np.ndarray) -> float | np.ndarray:
    """Exercise value of a call or put without building a spec."""
    if kind.is_call:
        return np.maximum(spot - strike, 0.0)
    return np.maximum(strike - spot, 0.0)
