# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""PnL risk metrics.

VaR follows the PnL-quantile convention: ``q%VaR`` is the empirical PnL
quantile at level ``1 - q/100``, taken as the lower order statistic with
1-based index ``ceil((1 - q/100) * n)``. The 95%VaR is therefore the bad
(lower) tail and the 5%VaR the good tail. CVaR is the mean of the samples at
or below the VaR.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import pandas as pd
from scipy.stats import skew

from ..errors import ContractError

logger = logging.getLogger(__name__)

NORMAL_95 = 1.645

REPORT_COLUMNS = ("Mean", "Std", "Mean-Std", "5%VaR", "5%CVaR", "95%VaR", "95%CVaR", "Gamma Ratio")


@dataclass
class PnlSamples:
    """Per-episode PnL of one strategy.

    Attributes:
        values: PnL per episode.
        strategy: Strategy name.
        gamma_ratios: Per-episode gamma ratios.
        seeds: Episode seeds, in the order of ``values``.
    """

    values: np.ndarray
    strategy: str = ""
    gamma_ratios: np.ndarray = field(default_factory=lambda: np.zeros(0))
    seeds: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        self.gamma_ratios = np.asarray(self.gamma_ratios, dtype=float)
        _check_samples(self.values)

    @property
    def n(self) -> int:
        return int(self.values.size)


def pnl_samples_from_rollouts(results: Sequence[Any], strategy: str, seeds: Sequence[int]) -> PnlSamples:
    """Collects episode results (with ``pnl`` and ``gamma_ratio``) into a sample set."""
    return PnlSamples(
        values=np.array([r.pnl for r in results], dtype=float),
        strategy=strategy,
        gamma_ratios=np.array([r.gamma_ratio for r in results], dtype=float),
        seeds=tuple(int(s) for s in seeds),
    )


@dataclass(frozen=True)
class RiskReport:
    """One metric row."""

    mean: float
    std: float
    mean_minus: float
    var5: float
    cvar5: float
    var95: float
    cvar95: float
    gamma_ratio: float
    skewness: float
    n: int
    seed_set: str = ""
    config_fingerprint: str = ""

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "Mean": self.mean,
            "Std": self.std,
            "mean_minus_1p645_std": self.mean_minus,
            "5%VaR": self.var5,
            "5%CVaR": self.cvar5,
            "95%VaR": self.var95,
            "95%CVaR": self.cvar95,
            "Gamma Ratio": self.gamma_ratio,
            "Skewness": self.skewness,
            "n": self.n,
            "seed_set": self.seed_set,
            "config_fingerprint": self.config_fingerprint,
        }

    def table_row(self) -> list[float]:
        return [self.mean, self.std, self.mean_minus, self.var5, self.cvar5, self.var95, self.cvar95, self.gamma_ratio]


def _check_samples(samples: np.ndarray) -> None:
    if samples.size == 0:
        raise ContractError("risk metrics need at least one sample")
    if not np.all(np.isfinite(samples)):
        raise ContractError("risk metrics need finite samples")


def _order_index(level: float, n: int) -> int:
    # Rounding first keeps 0.05 * 100 at 5 rather than 5.000000000000001.
    return min(max(math.ceil(round(level * n, 9)), 1), n)


def var_q(samples: Sequence[float] | np.ndarray, q: float) -> float:
    """Empirical ``q%`` value at risk of a PnL sample set.

    Args:
        samples: PnL samples.
        q: Confidence in percent, strictly between 0 and 100.
    """
    x = np.asarray(samples, dtype=float)
    _check_samples(x)
    if not 0.0 < q < 100.0:
        raise ContractError(f"VaR level must lie in (0, 100), got {q}")
    ordered = np.sort(x)
    return float(ordered[_order_index(1.0 - q / 100.0, ordered.size) - 1])


def cvar_q(samples: Sequence[float] | np.ndarray, q: float) -> float:
    """Mean of the samples at or below the ``q%`` VaR."""
    x = np.asarray(samples, dtype=float)
    var = var_q(x, q)
    tail = x[x <= var]
    return float(tail.mean()) if tail.size else var


def skewness(samples: Sequence[float] | np.ndarray) -> float:
    """Bias-corrected sample skewness.

    Raises:
        ContractError: With fewer than three samples or zero variance.
    """
    x = np.asarray(samples, dtype=float)
    _check_samples(x)
    if x.size < 3:
        raise ContractError("skewness needs at least three samples")
    if np.ptp(x) == 0.0:
        raise ContractError("skewness is undefined for constant samples")
    return float(skew(x, bias=False))


def histogram(samples: Sequence[float] | np.ndarray, n_bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Equal-width histogram over ``[min, max]``; counts sum to the sample count."""
    x = np.asarray(samples, dtype=float)
    _check_samples(x)
    if n_bins < 1:
        raise ContractError("histogram needs at least one bin")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(x, bins=n_bins, range=(lo, hi))
    return edges, counts


def histogram_frame(samples: Sequence[float] | np.ndarray, n_bins: int) -> pd.DataFrame:
    """Histogram as ``bin_left, bin_right, count`` rows."""
    edges, counts = histogram(samples, n_bins)
    return pd.DataFrame({"bin_left": edges[:-1], "bin_right": edges[1:], "count": counts})


def report(pnl: PnlSamples, config_fingerprint: str = "") -> RiskReport:
    """Computes the full metric row of a PnL sample set."""
    x = pnl.values
    std = float(x.std(ddof=1)) if x.size > 1 else 0.0
    mean = float(x.mean())
    try:
        skewness_value = skewness(x)
    except ContractError:
        logger.warning("Skewness undefined for %s; reported as NaN", pnl.strategy or "samples")
        skewness_value = float("nan")
    gamma = float(pnl.gamma_ratios.mean()) if pnl.gamma_ratios.size else 0.0
    seed_set = f"{pnl.seeds[0]}..{pnl.seeds[-1]}" if pnl.seeds else ""
    return RiskReport(
        mean=mean,
        std=std,
        mean_minus=mean - NORMAL_95 * std,
        var5=var_q(x, 5.0),
        cvar5=cvar_q(x, 5.0),
        var95=var_q(x, 95.0),
        cvar95=cvar_q(x, 95.0),
        gamma_ratio=gamma,
        skewness=skewness_value,
        n=pnl.n,
        seed_set=seed_set,
        config_fingerprint=config_fingerprint,
    )


def compare_table(reports: dict[str, RiskReport]) -> pd.DataFrame:
    """Side-by-side metric table, one row per strategy."""
    rows = [[name, *rep.table_row()] for name, rep in reports.items()]
    return pd.DataFrame(rows, columns=["Strategy", *REPORT_COLUMNS])
