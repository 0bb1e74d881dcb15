# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""Uniform experience replay over n-step transitions."""

from typing import NamedTuple

import numpy as np

from ..errors import ContractError


class Batch(NamedTuple):
    obs: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    next_obs: np.ndarray
    done: np.ndarray
    discount: np.ndarray


class ReplayBuffer:
    """FIFO experience store with uniform sampling.

    Transitions live in preallocated ring arrays; once full, each insertion
    overwrites the oldest entry.
    """

    def __init__(self, capacity: int, obs_dim: int):
        if capacity < 1:
            raise ContractError("replay capacity must be at least 1")
        self.capacity = int(capacity)
        self._obs = np.zeros((self.capacity, obs_dim))
        self._next_obs = np.zeros((self.capacity, obs_dim))
        self._action = np.zeros(self.capacity)
        self._reward = np.zeros(self.capacity)
        self._done = np.zeros(self.capacity)
        self._discount = np.zeros(self.capacity)
        self._next = 0
        self._size = 0
        self.inserted = 0

    def __len__(self) -> int:
        return self._size

    def add(
        self, obs: np.ndarray, action: float, reward: float, next_obs: np.ndarray, done: bool, discount: float
    ) -> None:
        i = self._next
        self._obs[i] = obs
        self._action[i] = action
        self._reward[i] = reward
        self._next_obs[i] = next_obs
        self._done[i] = float(done)
        self._discount[i] = discount
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)
        self.inserted += 1

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniformly samples ``batch_size`` transitions with replacement."""
        if self._size == 0:
            raise ContractError("cannot sample from an empty replay buffer")
        idx = rng.integers(0, self._size, size=batch_size)
        return Batch(
            self._obs[idx],
            self._action[idx],
            self._reward[idx],
            self._next_obs[idx],
            self._done[idx],
            self._discount[idx],
        )

    def rewards(self) -> np.ndarray:
        """Stored rewards, oldest first."""
        if self._size < self.capacity:
            return self._reward[: self._size].copy()
        return np.roll(self._reward, -self._next)
