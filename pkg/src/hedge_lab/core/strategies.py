# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""Hedging policies and episode rollouts.

Baselines and learned policies share one interface: they map an observation
to an action in [0, 1] (or to ``None``, meaning no trade at all) and the
environment turns the action into trades.
"""

import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from tqdm import tqdm

from ..errors import ConfigError
from .env import EnvConfig, HedgingEnv, Observation, TraceRow

logger = logging.getLogger(__name__)

Policy = Callable[[np.ndarray], float]

# Training episode seeds live above this offset, evaluation seeds below it.
TRAINING_SEED_OFFSET = 1 << 40
SEEDS_PER_BASE = 1_000_000


def evaluation_seeds(seed: int, n: int) -> list[int]:
    """Episode seeds of an evaluation run with base ``seed``."""
    if n > SEEDS_PER_BASE:
        raise ConfigError("episodes", f"at most {SEEDS_PER_BASE} episodes per seed")
    return [seed * SEEDS_PER_BASE + i for i in range(n)]


def training_seeds(seed: int, n: int) -> list[int]:
    """Episode seeds of a training run; never overlap any evaluation seeds."""
    return [TRAINING_SEED_OFFSET + s for s in evaluation_seeds(seed, n)]


class StrategyKind(str, Enum):
    NONE = "none"
    DELTA_NEUTRAL = "delta_neutral"
    DELTA_GAMMA_NEUTRAL = "delta_gamma_neutral"
    CONSTANT_FRACTION = "constant_fraction"
    RL_POLICY = "rl_policy"


@dataclass(frozen=True)
class Strategy:
    """A hedging policy.

    Attributes:
        kind: Strategy family.
        fraction: Action of a constant-fraction strategy.
        policy: Deterministic actor of an RL strategy.
        source: Where the policy was loaded from, for reports.
    """

    kind: StrategyKind
    fraction: float = 0.0
    policy: Policy | None = None
    source: str = ""

    def __post_init__(self) -> None:
        if self.kind == StrategyKind.CONSTANT_FRACTION and not 0.0 <= self.fraction <= 1.0:
            raise ConfigError("strategy.fraction", "constant fraction must lie in [0, 1]")
        if self.kind == StrategyKind.RL_POLICY and self.policy is None:
            raise ConfigError("strategy.policy", "rl_policy needs a policy")

    @property
    def name(self) -> str:
        if self.kind == StrategyKind.CONSTANT_FRACTION:
            return f"const:{self.fraction:g}"
        if self.kind == StrategyKind.RL_POLICY:
            return f"rl:{self.source}" if self.source else "rl"
        return {
            StrategyKind.NONE: "none",
            StrategyKind.DELTA_NEUTRAL: "delta",
            StrategyKind.DELTA_GAMMA_NEUTRAL: "delta-gamma",
        }[self.kind]


def parse_strategy(text: str, policy_loader: Callable[[str], Policy] | None = None) -> Strategy:
    """Parses the command-line form ``none|delta|delta-gamma|const:<c>|rl:<file>``.

    Args:
        text: Strategy selector.
        policy_loader: Turns a policy file path into an actor; needed for ``rl:``.

    Raises:
        ConfigError: On an unknown selector or a malformed fraction.
    """
    text = text.strip()
    simple = {
        "none": StrategyKind.NONE,
        "delta": StrategyKind.DELTA_NEUTRAL,
        "delta-gamma": StrategyKind.DELTA_GAMMA_NEUTRAL,
    }
    if text in simple:
        return Strategy(simple[text])
    prefix, _, arg = text.partition(":")
    if prefix == "const" and arg:
        try:
            fraction = float(arg)
        except ValueError as e:
            raise ConfigError("strategy", f"invalid constant fraction {arg!r}") from e
        return Strategy(StrategyKind.CONSTANT_FRACTION, fraction=fraction)
    if prefix == "rl" and arg:
        if policy_loader is None:
            raise ConfigError("strategy", "rl strategies need a policy loader")
        return Strategy(StrategyKind.RL_POLICY, policy=policy_loader(arg), source=arg)
    raise ConfigError("strategy", f"unknown strategy {text!r}")


def act(strategy: Strategy, observation: Observation, config: EnvConfig) -> float | None:
    """The action a strategy takes on ``observation``.

    Returns ``None`` for the unhedged strategy, which trades nothing at all.
    """
    kind = strategy.kind
    if kind == StrategyKind.NONE:
        return None
    if kind == StrategyKind.DELTA_NEUTRAL:
        return 0.0
    if kind == StrategyKind.DELTA_GAMMA_NEUTRAL:
        multiplier = config.resolved().max_hedge_multiplier
        assert multiplier is not None
        if multiplier < 1.0:
            logger.warning("max_hedge_multiplier %.3g < 1; delta-gamma action clipped to 1", multiplier)
            return 1.0
        return 1.0 / multiplier
    if kind == StrategyKind.CONSTANT_FRACTION:
        return strategy.fraction
    assert strategy.policy is not None
    return float(strategy.policy(observation.features))


def gamma_ratio(trace: Iterable[TraceRow]) -> float:
    """Mean of ``-hedge gamma / client gamma`` over rebalances with client gamma.

    1.0 means the hedge book offsets the client gamma exactly; 0.0 means no
    gamma hedge (also returned when the client book never had gamma).
    """
    ratios = [-row.gamma_hedge / row.gamma_client for row in trace if abs(row.gamma_client) > 1e-12]
    return float(np.mean(ratios)) if ratios else 0.0


class EpisodeResult(NamedTuple):
    pnl: float
    gamma_ratio: float
    n_steps: int
    trace: list[TraceRow]


def rollout(env: HedgingEnv, strategy: Strategy, seed: int) -> EpisodeResult:
    """Runs one episode; the PnL is the sum of the rewards."""
    obs = env.reset(seed)
    pnl = 0.0
    while not env.done:
        transition = env.step(act(strategy, obs, env.config))
        pnl += transition.reward
        obs = transition.next_obs
    trace = env.trace()
    return EpisodeResult(pnl, gamma_ratio(trace), len(trace), trace)


def run_episodes(
    env_factory: Callable[[], HedgingEnv],
    strategy: Strategy,
    seeds: list[int],
    threads: int = 1,
    progress: bool = False,
) -> list[EpisodeResult]:
    """Rolls out one episode per seed, in seed order.

    Each worker call builds its own environment, so episodes never share state
    and results do not depend on ``threads``.
    """

    def one(seed: int) -> EpisodeResult:
        return rollout(env_factory(), strategy, seed)

    with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        results = pool.map(one, seeds)
        return list(tqdm(results, total=len(seeds), desc=strategy.name, disable=not progress))
