# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""Exception types raised by the hedging laboratory."""

from pathlib import Path


class HedgeLabError(Exception):
    """Base class for all errors raised by hedge_lab."""


class ConfigError(HedgeLabError, ValueError):
    """A configuration value is unknown, mistyped or violates an invariant."""

    def __init__(self, key: str, message: str):
        """
        Args:
            key: Dotted name of the offending setting, e.g. ``env.kappa``.
            message: Human readable reason.
        """
        super().__init__(f"{key}: {message}")
        self.key = key


class ContractError(HedgeLabError, ValueError):
    """An operation was called outside of its contract."""


class SimulationError(HedgeLabError, ArithmeticError):
    """The market simulation produced a non-finite value."""

    def __init__(self, path: int, step: int, message: str = "non-finite market state"):
        super().__init__(f"{message} (path {path}, step {step})")
        self.path = path
        self.step = step


class PricingError(HedgeLabError, ArithmeticError):
    """A valuation could not be carried out numerically."""


class TrainingDivergedError(HedgeLabError, ArithmeticError):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, dump_path: Path | None = None):
        suffix = f" (state dumped to {dump_path})" if dump_path else ""
        super().__init__(message + suffix)
        self.dump_path = dump_path
