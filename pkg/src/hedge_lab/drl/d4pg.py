# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""Distributional deterministic policy gradients with a quantile critic.

One learner owns the four networks (actor, critic and their targets). ``K``
collector environments step in lockstep: the learner picks all their actions
in one batched forward pass, the environments step (optionally on a thread
pool) and their transitions enter the replay buffer in collector order, which
keeps a seeded run reproducible for any thread count.
"""

import logging
import math
from collections import deque
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, NamedTuple, Protocol

import numpy as np
from tqdm import tqdm

from ..core.env import Observation, Transition
from ..core.market import RngStream
from ..core.risk import PnlSamples, pnl_samples_from_rollouts, var_q
from ..core.strategies import Strategy, StrategyKind, evaluation_seeds, run_episodes, training_seeds
from ..errors import ConfigError, TrainingDivergedError
from ..io.dal import write_json
from .mlp import Adam, Mlp, OutputActivation, mlp_forward, mlp_gradients, soft_update
from .quantiles import ObjectiveKind, actor_objective, critic_target, quantile_huber_loss
from .replay import Batch, ReplayBuffer
from .snapshot import PolicySnapshot

logger = logging.getLogger(__name__)

INIT_STREAM = 11
NOISE_STREAM = 12
REPLAY_STREAM = 13
# Validation rollouts during training use their own seed base.
VALIDATION_SEED_BASE = 999_983


class TrainableEnv(Protocol):
    @property
    def done(self) -> bool: ...

    def reset(self, seed: int) -> Observation: ...

    def step(self, action: float | None) -> Transition: ...

    def normalization(self) -> dict[str, float]: ...


@dataclass(frozen=True)
class TrainerConfig:
    """Hyperparameters of a training run.

    Attributes:
        discount: Reward discount per step.
        batch_size: Transitions per gradient step.
        actor_lr: Actor learning rate.
        critic_lr: Critic learning rate.
        soft_update: Target network tracking rate.
        noise_std: Initial exploration noise.
        noise_final_std: Noise reached half way through training.
        n_step: Length of the multi-step return.
        episodes: Training episodes over all collectors.
        objective: Actor objective over the return distribution.
        actor_hidden: Hidden layer widths of the actor.
        critic_hidden: Hidden layer widths of the critic.
        n_quantiles: Atoms of the critic's distribution.
        collectors: Environments stepped in lockstep.
        warmup_transitions: Transitions collected before learning starts.
        updates_per_round: Gradient steps per lockstep round; defaults to ``collectors``.
        replay_capacity: Replay buffer size.
        eval_interval: Episodes between training-curve rows.
        eval_episodes: Noise-free episodes per training-curve row.
        huber_k: Quantile Huber threshold.
    """

    discount: float = 0.99
    batch_size: int = 256
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    soft_update: float = 0.005
    noise_std: float = 0.1
    noise_final_std: float = 0.01
    n_step: int = 1
    episodes: int = 2000
    objective: ObjectiveKind = ObjectiveKind.MIX_5_95
    actor_hidden: tuple[int, ...] = (256, 256, 256)
    critic_hidden: tuple[int, ...] = (512, 512, 256)
    n_quantiles: int = 100
    collectors: int = 4
    warmup_transitions: int = 1000
    updates_per_round: int | None = None
    replay_capacity: int = 1_000_000
    eval_interval: int = 200
    eval_episodes: int = 100
    huber_k: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.discount <= 1.0:
            raise ConfigError("trainer.discount", "must lie in (0, 1]")
        if not 1 <= self.n_step <= 5:
            raise ConfigError("trainer.n_step", "must lie in 1..5")
        for name in ("batch_size", "episodes", "n_quantiles", "collectors", "replay_capacity", "eval_interval"):
            if getattr(self, name) < 1:
                raise ConfigError(f"trainer.{name}", "must be at least 1")
        for name in ("actor_lr", "critic_lr", "soft_update", "huber_k"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"trainer.{name}", "must be positive")
        if self.noise_std < 0 or self.noise_final_std < 0:
            raise ConfigError("trainer.noise_std", "must be non-negative")
        if self.warmup_transitions < 0 or self.eval_episodes < 0:
            raise ConfigError("trainer.warmup_transitions", "must be non-negative")
        if self.updates_per_round is not None and self.updates_per_round < 0:
            raise ConfigError("trainer.updates_per_round", "must be non-negative")

    def noise_at(self, progress: float) -> float:
        """Exploration std after ``progress`` (0..1) of training; linear over the first half."""
        frac = min(max(progress / 0.5, 0.0), 1.0)
        return self.noise_std + (self.noise_final_std - self.noise_std) * frac

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["objective"] = self.objective.value
        data["actor_hidden"] = list(self.actor_hidden)
        data["critic_hidden"] = list(self.critic_hidden)
        return data


class CurveRow(NamedTuple):
    step: int
    critic_loss: float
    actor_objective: float
    eval_var95: float


class TrainingResult(NamedTuple):
    snapshot: PolicySnapshot
    curve: list[CurveRow]


class D4pgLearner:
    """Networks, optimisers and the gradient step."""

    def __init__(self, obs_dim: int, config: TrainerConfig, rng: RngStream):
        self.config = config
        self.obs_dim = obs_dim
        gen = rng.generator
        self.actor = Mlp.create((obs_dim, *config.actor_hidden, 1), gen, OutputActivation.SIGMOID)
        self.critic = Mlp.create((obs_dim + 1, *config.critic_hidden, config.n_quantiles), gen)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.actor_opt = Adam(self.actor.params(), config.actor_lr)
        self.critic_opt = Adam(self.critic.params(), config.critic_lr)
        self.steps = 0

    def act(self, obs: np.ndarray) -> np.ndarray:
        """Deterministic actions for a batch of observations."""
        return mlp_forward(self.actor, obs)[:, 0]

    def critic_atoms(self, obs: np.ndarray, action: np.ndarray, target: bool = False) -> np.ndarray:
        net = self.target_critic if target else self.critic
        return mlp_forward(net, np.column_stack([obs, action]))

    def update(self, batch: Batch) -> tuple[float, float]:
        """One critic and one actor step followed by the target updates.

        Returns:
            The critic loss and the actor objective before the step.
        """
        cfg = self.config
        next_action = mlp_forward(self.target_actor, batch.next_obs)[:, 0]
        next_atoms = self.critic_atoms(batch.next_obs, next_action, target=True)
        targets = critic_target(batch.reward, batch.done, batch.discount, next_atoms)

        critic_in = np.column_stack([batch.obs, batch.action])
        atoms = mlp_forward(self.critic, critic_in)
        loss, d_atoms = quantile_huber_loss(atoms, targets, cfg.huber_k)
        grads = mlp_gradients(self.critic, critic_in, d_atoms)
        self.critic_opt.step(self.critic.params(), grads.params())

        action = mlp_forward(self.actor, batch.obs)
        actor_in = np.column_stack([batch.obs, action])
        objective, d_obj = actor_objective(mlp_forward(self.critic, actor_in), cfg.objective)
        # Ascend the objective: descend its negation through the frozen critic.
        d_input = mlp_gradients(self.critic, actor_in, -d_obj).inputs
        actor_grads = mlp_gradients(self.actor, batch.obs, d_input[:, -1:])
        self.actor_opt.step(self.actor.params(), actor_grads.params())

        soft_update(self.target_critic, self.critic, cfg.soft_update)
        soft_update(self.target_actor, self.actor, cfg.soft_update)
        self.steps += 1
        return loss, objective


class _Collector:
    """One experience-collecting environment with its n-step accumulator."""

    def __init__(self, env: TrainableEnv, n_step: int, discount: float):
        self.env = env
        self.n_step = n_step
        self.discount = discount
        self.obs = np.zeros(0)
        self.active = False
        self._pending: deque[tuple[np.ndarray, float, float]] = deque()

    def start(self, seed: int) -> None:
        self.obs = np.asarray(self.env.reset(seed).features, dtype=float)
        self._pending.clear()
        self.active = True

    def _emit(self, next_obs: np.ndarray, done: bool) -> tuple[np.ndarray, float, float, np.ndarray, bool, float]:
        obs, action, _ = self._pending[0]
        ret = sum(self.discount**j * r for j, (_, _, r) in enumerate(self._pending))
        discount = self.discount ** len(self._pending)
        self._pending.popleft()
        return obs, action, ret, next_obs, done, discount

    def record(
        self, action: float, transition: Transition
    ) -> list[tuple[np.ndarray, float, float, np.ndarray, bool, float]]:
        """Adds a step; returns the finished n-step transitions."""
        next_obs = np.asarray(transition.next_obs.features, dtype=float)
        self._pending.append((self.obs, action, float(transition.reward)))
        out = []
        if len(self._pending) == self.n_step:
            out.append(self._emit(next_obs, transition.done))
        if transition.done:
            while self._pending:
                out.append(self._emit(next_obs, True))
            self.active = False
        self.obs = next_obs
        return out


def _noise_free_pnl(env: TrainableEnv, learner: D4pgLearner, seed: int) -> float:
    obs = env.reset(seed)
    pnl = 0.0
    while not env.done:
        action = float(learner.act(np.asarray(obs.features, dtype=float)[None, :])[0])
        transition = env.step(action)
        pnl += transition.reward
        obs = transition.next_obs
    return pnl


def make_snapshot(
    learner: D4pgLearner, normalization: dict[str, float], seed: int, config_fingerprint: str = "", mode: str = ""
) -> PolicySnapshot:
    return PolicySnapshot(
        actor=learner.actor.copy(),
        critic=learner.critic.copy(),
        config_fingerprint=config_fingerprint,
        normalization=dict(normalization),
        seed=seed,
        mode=mode,
        trainer=learner.config.to_dict(),
    )


def train(
    env_factory: Callable[[], TrainableEnv],
    config: TrainerConfig,
    seed: int,
    threads: int = 1,
    config_fingerprint: str = "",
    mode: str = "",
    dump_dir: Path | None = None,
    progress: bool = False,
) -> TrainingResult:
    """Trains a policy.

    Args:
        env_factory: Builds one independent environment per call.
        config: Hyperparameters.
        seed: Training seed; fixes initialisation, noise, replay sampling and
            the training episode seeds.
        threads: Worker threads for stepping the collectors.
        config_fingerprint: Recorded in the snapshot.
        mode: Environment mode recorded in the snapshot.
        dump_dir: Where to dump the state if training diverges.
        progress: Show a progress bar.

    Returns:
        The trained snapshot and the training curve.

    Raises:
        TrainingDivergedError: If a loss or objective becomes non-finite.
    """
    collectors = [_Collector(env_factory(), config.n_step, config.discount) for _ in range(config.collectors)]
    seeds = training_seeds(seed, config.episodes)
    started = 0
    for c in collectors:
        if started < config.episodes:
            c.start(seeds[started])
            started += 1
    obs_dim = int(collectors[0].obs.shape[0])
    normalization = collectors[0].env.normalization()

    learner = D4pgLearner(obs_dim, config, RngStream(seed, INIT_STREAM))
    noise_rng = RngStream(seed, NOISE_STREAM).generator
    replay_rng = RngStream(seed, REPLAY_STREAM).generator
    buffer = ReplayBuffer(config.replay_capacity, obs_dim)
    updates = config.updates_per_round if config.updates_per_round is not None else config.collectors
    eval_env = env_factory() if config.eval_episodes > 0 else None
    validation_seeds = evaluation_seeds(VALIDATION_SEED_BASE, config.eval_episodes)

    curve: list[CurveRow] = []
    losses: list[float] = []
    objectives: list[float] = []
    finished = 0
    next_eval = config.eval_interval
    bar = tqdm(total=config.episodes, desc="train", disable=not progress)

    def step_env(pair: tuple[_Collector, float]) -> Transition:
        collector, action = pair
        return collector.env.step(action)

    with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        while finished < config.episodes:
            active = [c for c in collectors if c.active]
            obs = np.stack([c.obs for c in active])
            std = config.noise_at(finished / config.episodes)
            actions = np.clip(learner.act(obs) + std * noise_rng.standard_normal(len(active)), 0.0, 1.0)
            transitions = list(pool.map(step_env, zip(active, actions.tolist(), strict=True)))

            for collector, action, transition in zip(active, actions.tolist(), transitions, strict=True):
                for item in collector.record(action, transition):
                    buffer.add(*item)
                if transition.done:
                    finished += 1
                    bar.update(1)
                    if started < config.episodes:
                        collector.start(seeds[started])
                        started += 1

            if len(buffer) >= max(config.warmup_transitions, 1):
                for _ in range(updates):
                    loss, objective = learner.update(buffer.sample(config.batch_size, replay_rng))
                    if not (math.isfinite(loss) and math.isfinite(objective)):
                        _diverged(learner, normalization, seed, loss, objective, dump_dir)
                    losses.append(loss)
                    objectives.append(objective)

            while finished >= next_eval:
                eval_var95 = float("nan")
                if eval_env is not None:
                    pnl = [_noise_free_pnl(eval_env, learner, s) for s in validation_seeds]
                    eval_var95 = var_q(pnl, 95.0)
                row = CurveRow(
                    step=learner.steps,
                    critic_loss=float(np.mean(losses)) if losses else float("nan"),
                    actor_objective=float(np.mean(objectives)) if objectives else float("nan"),
                    eval_var95=eval_var95,
                )
                logger.info(
                    "episode %d: step %d, critic loss %.5g, objective %.5g, eval 95%%VaR %.5g",
                    next_eval,
                    row.step,
                    row.critic_loss,
                    row.actor_objective,
                    row.eval_var95,
                )
                curve.append(row)
                losses, objectives = [], []
                next_eval += config.eval_interval
    bar.close()

    snapshot = make_snapshot(learner, normalization, seed, config_fingerprint, mode)
    return TrainingResult(snapshot, curve)


def _diverged(
    learner: D4pgLearner,
    normalization: dict[str, float],
    seed: int,
    loss: float,
    objective: float,
    dump_dir: Path | None,
) -> None:
    message = f"training diverged at step {learner.steps}: critic loss {loss}, actor objective {objective}"
    logger.error(message)
    dump_path = None
    if dump_dir is not None:
        dump_path = dump_dir / "diverged_state.json"
        state = make_snapshot(learner, normalization, seed).to_dict()
        state["diverged_at_step"] = learner.steps
        state["critic_loss"] = repr(loss)
        state["actor_objective"] = repr(objective)
        write_json(dump_path, state)
    raise TrainingDivergedError(message, dump_path)


def evaluate(
    snapshot: PolicySnapshot,
    env_factory: Callable[[], Any],
    seeds: list[int],
    threads: int = 1,
    progress: bool = False,
) -> PnlSamples:
    """Noise-free rollouts of a trained policy, one per seed.

    Per-episode PnL is the sum of the episode's rewards.
    """
    strategy = Strategy(StrategyKind.RL_POLICY, policy=snapshot.act, source="snapshot")
    results = run_episodes(env_factory, strategy, seeds, threads, progress)
    return pnl_samples_from_rollouts(results, strategy.name, seeds)
