# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""Market simulator: GBM spot with SABR stochastic volatility.

The spot follows a log-Euler step and the volatility is evolved with its exact
lognormal law::

    x' = x * exp((mu - 0.5 * s^2 * x^(2(b-1))) dt + s * x^(b-1) * sqrt(dt) * Z1)
    s' = s * exp(-0.5 * nu^2 dt + nu * sqrt(dt) * Z2),   corr(Z1, Z2) = rho

All randomness comes from :class:`RngStream` objects, which are a pure function
of ``(seed, stream_id)`` so that every simulation is reproducible.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, ContractError, SimulationError

logger = logging.getLogger(__name__)

TRADING_DAYS_PER_YEAR = 252
PATH_CHUNK = 4096


@dataclass(frozen=True)
class SabrParams:
    """Parameters of the GBM/SABR market model.

    Attributes:
        spot0: Initial spot price.
        mu: Annual drift of the spot.
        sigma0: Initial volatility (SABR alpha).
        beta: Elasticity exponent in [0, 1].
        rho: Spot/vol correlation in (-1, 1).
        nu: Volatility of volatility.
    """

    spot0: float = 100.0
    mu: float = 0.0
    sigma0: float = 0.2
    beta: float = 1.0
    rho: float = -0.4
    nu: float = 0.3

    def __post_init__(self) -> None:
        if not self.spot0 > 0:
            raise ConfigError("market.spot0", "must be positive")
        if not self.sigma0 >= 0:
            raise ConfigError("market.sigma0", "must be non-negative")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError("market.beta", "must lie in [0, 1]")
        if not -1.0 < self.rho < 1.0:
            raise ConfigError("market.rho", "must lie in (-1, 1)")
        if not self.nu >= 0:
            raise ConfigError("market.nu", "must be non-negative")


@dataclass(frozen=True)
class TimeGrid:
    """A uniform simulation grid of ``n_steps`` steps of length ``dt`` starting at ``t0``."""

    n_steps: int
    dt: float
    t0: float = 0.0

    def __post_init__(self) -> None:
        if self.n_steps < 1:
            raise ConfigError("grid.n_steps", "must be at least 1")
        if not self.dt > 0:
            raise ConfigError("grid.dt", "must be positive")

    @property
    def times(self) -> np.ndarray:
        """Grid times, including ``t0``; shape ``(n_steps + 1,)``."""
        return self.t0 + self.dt * np.arange(self.n_steps + 1)


class RngStream:
    """A reproducible random stream identified by ``(seed, stream_id)``.

    The stream owns a numpy ``Generator`` seeded from a ``SeedSequence`` whose
    spawn key is ``(stream_id, *children)``. Two streams with equal identity
    produce the same draw sequence; :meth:`child` derives independent
    sub-streams for per-path or per-valuation use.
    """

    def __init__(self, seed: int, stream_id: int = 0, children: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.children = tuple(int(c) for c in children)
        self._generator: np.random.Generator | None = None

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, children={self.children})"

    @property
    def generator(self) -> np.random.Generator:
        """The lazily created generator; it advances as draws are taken."""
        if self._generator is None:
            self._generator = rng_generator(self)
        return self._generator

    def child(self, *keys: int) -> "RngStream":
        """Returns an independent sub-stream keyed by ``keys``."""
        return RngStream(self.seed, self.stream_id, self.children + tuple(keys))

    def fresh(self) -> "RngStream":
        """Returns a stream with the same identity, restarted at its first draw."""
        return RngStream(self.seed, self.stream_id, self.children)

    def normals(self, shape: int | tuple[int, ...]) -> np.ndarray:
        """Draws standard normal variates."""
        return self.generator.standard_normal(shape)


def rng_generator(rng: RngStream) -> np.random.Generator:
    """Builds the numpy generator behind a stream."""
    seq = np.random.SeedSequence(entropy=rng.seed, spawn_key=(rng.stream_id, *rng.children))
    return np.random.Generator(np.random.PCG64(seq))


@dataclass
class PathSet:
    """Simulated spot and volatility trajectories.

    Attributes:
        grid: The time grid the paths live on.
        spots: Spot matrix of shape ``(n_paths, n_steps + 1)``.
        vols: Volatility matrix of the same shape.
        seed: Seed of the stream the paths were drawn from.
        stream_id: Stream id of that stream.
    """

    grid: TimeGrid
    spots: np.ndarray
    vols: np.ndarray
    seed: int
    stream_id: int = 0
    params: SabrParams = field(default_factory=SabrParams)

    @property
    def n_paths(self) -> int:
        return int(self.spots.shape[0])

    @property
    def times(self) -> np.ndarray:
        return self.grid.times


def advance(
    spots: np.ndarray, vols: np.ndarray, params: SabrParams, dt: float, z1: np.ndarray, w2: np.ndarray, drift: float
) -> tuple[np.ndarray, np.ndarray]:
    """Applies one scheme increment to arrays of states.

    Args:
        spots: Current spots.
        vols: Current volatilities.
        params: Model parameters (beta, rho, nu are used).
        dt: Step length in years.
        z1: Standard normals driving the spot.
        w2: Independent standard normals; correlated with ``z1`` via Cholesky.
        drift: Annual drift of the spot (``mu`` or the risk-free rate).

    Returns:
        The next spots and volatilities.
    """
    z2 = params.rho * z1 + math.sqrt(1.0 - params.rho**2) * w2
    sqrt_dt = math.sqrt(dt)
    if params.beta == 1.0:
        local_vol = vols
    else:
        local_vol = vols * np.power(spots, params.beta - 1.0)
    next_spots = spots * np.exp((drift - 0.5 * local_vol**2) * dt + local_vol * sqrt_dt * z1)
    if params.nu == 0.0:
        next_vols = vols.copy()
    else:
        next_vols = vols * np.exp(-0.5 * params.nu**2 * dt + params.nu * sqrt_dt * z2)
    return next_spots, next_vols


def _check_finite(spots: np.ndarray, vols: np.ndarray, step: int, path_offset: int = 0) -> None:
    bad = ~(np.isfinite(spots) & np.isfinite(vols) & (spots > 0))
    if bad.any():
        path = path_offset + int(np.flatnonzero(bad.ravel())[0])
        raise SimulationError(path, step)


def simulate_paths(params: SabrParams, grid: TimeGrid, n_paths: int, rng: RngStream) -> PathSet:
    """Simulates ``n_paths`` spot/vol trajectories on ``grid``.

    Draws are taken path-major from the stream: path ``p`` consumes the normals
    ``2 * n_steps * p`` to ``2 * n_steps * (p + 1)``, two per step. The first
    path is therefore identical to composing :func:`step_state` on a fresh
    stream with the same identity.

    Args:
        params: Market parameters.
        grid: The simulation grid.
        n_paths: Number of paths.
        rng: Random stream; consumed from its current position.

    Returns:
        The simulated path set.

    Raises:
        SimulationError: If a non-finite value appears.
    """
    if n_paths < 1:
        raise ConfigError("simulate.n_paths", "must be at least 1")
    n_steps = grid.n_steps
    spots = np.empty((n_paths, n_steps + 1))
    vols = np.empty((n_paths, n_steps + 1))
    spots[:, 0] = params.spot0
    vols[:, 0] = params.sigma0

    for start in range(0, n_paths, PATH_CHUNK):
        stop = min(start + PATH_CHUNK, n_paths)
        z = rng.normals((stop - start, n_steps, 2))
        s = spots[start:stop, 0].copy()
        v = vols[start:stop, 0].copy()
        for k in range(n_steps):
            s, v = advance(s, v, params, grid.dt, z[:, k, 0], z[:, k, 1], params.mu)
            _check_finite(s, v, k + 1, start)
            spots[start:stop, k + 1] = s
            vols[start:stop, k + 1] = v

    return PathSet(grid=grid, spots=spots, vols=vols, seed=rng.seed, stream_id=rng.stream_id, params=params)


def step_state(spot: float, vol: float, params: SabrParams, dt: float, rng: RngStream) -> tuple[float, float]:
    """Advances a single (spot, vol) state by one increment of length ``dt``.

    Args:
        spot: Current spot, positive.
        vol: Current volatility, non-negative.
        params: Market parameters.
        dt: Step length in years.
        rng: Stream to draw the two normals from.

    Returns:
        The next ``(spot, vol)``.
    """
    if not (spot > 0 and vol >= 0 and dt > 0):
        raise ContractError(f"invalid state spot={spot}, vol={vol}, dt={dt}")
    z = rng.normals(2)
    s, v = advance(np.array([spot]), np.array([vol]), params, dt, z[:1], z[1:], params.mu)
    _check_finite(s, v, 1)
    return float(s[0]), float(v[0])


def sabr_implied_vol(forward: float, strike: float, time_to_maturity: float, sigma: float, params: SabrParams) -> float:
    """Hagan's lognormal implied volatility for the SABR model.

    Args:
        forward: Forward price.
        strike: Option strike.
        time_to_maturity: Remaining time in years.
        sigma: Current SABR volatility (alpha).
        params: Provides beta, rho and nu.

    Returns:
        The Black implied volatility.
    """
    if sigma <= 0.0:
        return 0.0
    beta, rho, nu = params.beta, params.rho, params.nu
    one_b = 1.0 - beta
    t = max(time_to_maturity, 0.0)
    fk = forward * strike
    fk_pow = fk ** (one_b / 2.0)
    log_fk = math.log(forward / strike)

    correction = 1.0 + (
        (one_b**2 * sigma**2) / (24.0 * fk**one_b)
        + (rho * beta * nu * sigma) / (4.0 * fk_pow)
        + (2.0 - 3.0 * rho**2) * nu**2 / 24.0
    ) * t

    if abs(forward - strike) < 1e-7:
        return sigma / forward**one_b * correction

    z = nu / sigma * fk_pow * log_fk
    if abs(z) < 1e-7:
        z_over_x = 1.0
    else:
        x = math.log((math.sqrt(1.0 - 2.0 * rho * z + z * z) + z - rho) / (1.0 - rho))
        z_over_x = z / x
    denom = fk_pow * (1.0 + one_b**2 / 24.0 * log_fk**2 + one_b**4 / 1920.0 * log_fk**4)
    return sigma / denom * z_over_x * correction
