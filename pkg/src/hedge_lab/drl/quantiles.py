# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""Quantile-regression distributional critic maths."""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import ContractError

N_QUANTILES = 100


class ObjectiveKind(str, Enum):
    """What the actor maximises over the critic's return distribution."""

    EXPECTED = "expected"
    VAR95 = "var95"
    MIX_5_95 = "mix_5_95"


def quantile_levels(n: int = N_QUANTILES) -> np.ndarray:
    """Midpoint levels ``(2k - 1) / 2n`` for ``k = 1..n``."""
    return (2.0 * np.arange(1, n + 1) - 1.0) / (2.0 * n)


@dataclass
class QuantileDistribution:
    """Return distribution as atoms at fixed quantile levels."""

    atoms: np.ndarray

    def __post_init__(self) -> None:
        self.atoms = np.asarray(self.atoms, dtype=float)

    @property
    def levels(self) -> np.ndarray:
        return quantile_levels(self.atoms.shape[-1])

    def mean(self) -> float:
        return float(self.atoms.mean())

    def quantile(self, level: float) -> float:
        """The atom standing for quantile ``level``, after sorting the atoms."""
        return float(np.sort(self.atoms)[atom_index(level, self.atoms.shape[-1])])


def quantile_huber_loss(
    atoms: np.ndarray, targets: np.ndarray, huber_k: float = 1.0
) -> tuple[float, np.ndarray]:
    """Quantile Huber loss and its gradient with respect to the atoms.

    The loss averages ``|tau_i - 1{u < 0}| * Huber_k(u) / k`` with
    ``u = target_j - atom_i`` over every (atom, target) pair and over the batch.

    Args:
        atoms: Predicted atoms, shape ``(n,)`` or ``(batch, n)``.
        targets: Target samples, shape ``(m,)`` or ``(batch, m)``.
        huber_k: Huber threshold.

    Returns:
        The scalar loss and ``d loss / d atoms`` in the shape of ``atoms``.
    """
    atoms = np.asarray(atoms, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if targets.size == 0:
        raise ContractError("quantile loss needs at least one target")
    single = atoms.ndim == 1
    a = atoms[None, :] if single else atoms
    t = targets[None, :] if targets.ndim == 1 else targets
    batch, n = a.shape
    m = t.shape[1]
    tau = quantile_levels(n)

    u = t[:, None, :] - a[:, :, None]
    abs_u = np.abs(u)
    small = abs_u <= huber_k
    huber = np.where(small, 0.5 * u * u, huber_k * (abs_u - 0.5 * huber_k))
    weight = np.abs(tau[None, :, None] - (u < 0.0))
    scale = 1.0 / (batch * n * m)
    loss = float((weight * huber).sum() * scale / huber_k)

    dhuber_du = np.where(small, u, huber_k * np.sign(u))
    grad = -(weight * dhuber_du).sum(axis=2) * scale / huber_k
    return loss, grad[0] if single else grad


def critic_target(
    reward: np.ndarray | float, done: np.ndarray | bool, discount: np.ndarray | float, next_atoms: np.ndarray
) -> np.ndarray:
    """Distributional Bellman targets ``r + discount * atom``, or ``r`` when done.

    ``discount`` is the per-transition factor, ``gamma ** n`` for n-step returns.
    """
    next_atoms = np.asarray(next_atoms, dtype=float)
    r = np.asarray(reward, dtype=float)
    keep = (1.0 - np.asarray(done, dtype=float)) * np.asarray(discount, dtype=float)
    if next_atoms.ndim == 1:
        return r + keep * next_atoms
    return r[:, None] + keep[:, None] * next_atoms


def atom_index(level: float, n: int = N_QUANTILES) -> int:
    """Zero-based index of the atom representing quantile ``level``: ``ceil(level * n) - 1``."""
    return min(max(math.ceil(round(level * n, 9)), 1), n) - 1


def actor_objective(atoms: np.ndarray, kind: ObjectiveKind) -> tuple[float, np.ndarray]:
    """Objective value (to maximise) and its gradient with respect to the atoms.

    For a batch the value and gradient are averaged over the batch.
    """
    atoms = np.asarray(atoms, dtype=float)
    single = atoms.ndim == 1
    a = atoms[None, :] if single else atoms
    batch, n = a.shape
    weights = np.zeros(n)
    if kind == ObjectiveKind.EXPECTED:
        weights[:] = 1.0 / n
    elif kind == ObjectiveKind.VAR95:
        weights[atom_index(0.05, n)] = 1.0
    else:
        weights[atom_index(0.05, n)] += 0.5
        weights[atom_index(0.95, n)] += 0.5
    value = float((a @ weights).mean())
    grad = np.broadcast_to(weights / batch, a.shape).copy()
    return value, grad[0] if single else grad
