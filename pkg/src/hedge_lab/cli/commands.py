# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""The ``hedge-lab`` command line.

Each subcommand loads the experiment config, derives every random stream from
the configured seeds and writes its artifacts through :mod:`hedge_lab.io`.
Exit codes: 0 success, 2 configuration error, 3 runtime or numerical error.
"""

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path

import numpy as np

from ..core.env import HedgingEnv, exercise_model_stream, fit_exercise_models
from ..core.instruments import OptionKind, OptionSpec
from ..core.market import RngStream, TimeGrid, sabr_implied_vol, simulate_paths
from ..core.pricing import (
    ContinuationModel,
    Valuation,
    binomial_valuation,
    greeks_profile,
    price_autocallable_mc,
    value_option,
)
from ..core.risk import PnlSamples, RiskReport, compare_table, pnl_samples_from_rollouts, report
from ..core.strategies import Strategy, evaluation_seeds, parse_strategy, run_episodes
from ..drl.d4pg import evaluate, train
from ..drl.snapshot import PolicySnapshot
from ..errors import ConfigError, HedgeLabError
from ..io import artifacts, dal
from .config import ExperimentConfig, load_config, with_overrides

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

PRICE_STREAM = 21
PROFILE_STREAM = 22
SIMULATE_STREAM = 23

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class RunContext:
    """What every subcommand needs: the resolved config, seeds and output directory."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        config = load_config(args.config)
        if args.out is not None:
            config = with_overrides(config, output={"dir": str(args.out)})
        if args.seed is not None:
            config = with_overrides(config, seeds={"train": args.seed, "eval": args.seed})
        self.config: ExperimentConfig = config
        self.fingerprint = config.fingerprint()
        self.out = dal.OutputDir(config.output.dir)
        self.threads = max(int(args.threads), 1)
        self.progress = not args.quiet and logging.getLogger().isEnabledFor(logging.INFO)
        self._models: dict[int, dict[OptionKind, ContinuationModel]] = {}

    def exercise_models(self, tenor: float) -> dict[OptionKind, ContinuationModel]:
        """Exercise rules for ``tenor``-year American options, fitted once per tenor."""
        cfg = self.config
        days = int(round(tenor * cfg.env.substeps_per_year))
        if days not in self._models:
            logger.info("Fitting exercise models for %d-day options on %d paths", days, cfg.pricer.lsmc_training_paths)
            self._models[days] = fit_exercise_models(
                cfg.market,
                cfg.valuation_pricer,
                tenor,
                exercise_model_stream(cfg.seeds.train, days),
                cfg.env.substeps_per_year,
            )
        return self._models[days]

    def env_factory(self) -> Callable[[], HedgingEnv]:
        cfg = self.config
        client = self.exercise_models(cfg.env.client_tenor) if cfg.env.client_exercise else None
        hedge = self.exercise_models(cfg.env.hedge_tenor) if cfg.env.hedge_exercise else None

        def make() -> HedgingEnv:
            return HedgingEnv(cfg.env, cfg.market, cfg.note, cfg.valuation_pricer, client, hedge)

        return make


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(ctx: RunContext) -> int:
    cfg = ctx.config
    grid = TimeGrid(n_steps=ctx.args.steps, dt=ctx.args.dt)
    paths = simulate_paths(cfg.market, grid, ctx.args.paths, RngStream(cfg.seeds.eval, SIMULATE_STREAM))
    out = artifacts.export_paths(ctx.out.file("paths.csv"), paths, ctx.fingerprint)
    logger.info("Wrote %d paths to %s", paths.n_paths, out)
    return EXIT_OK


def _price(ctx: RunContext) -> tuple[str, Valuation]:
    cfg = ctx.config
    args = ctx.args
    pricer = cfg.valuation_pricer
    vol = cfg.market.sigma0 if args.vol is None else args.vol
    spot = cfg.market.spot0 if args.spot is None else args.spot
    if vol < 0 or spot <= 0:
        raise ConfigError("price", "spot must be positive and vol non-negative")
    if args.instrument == "note":
        rng = RngStream(cfg.seeds.eval, PRICE_STREAM)
        return "note", price_autocallable_mc(cfg.note, spot, vol, args.t, cfg.market, pricer, rng)
    kind = OptionKind(args.instrument)
    strike = spot if args.strike is None else args.strike
    spec = OptionSpec(kind, strike, args.t + args.maturity, issue_time=args.t)
    if kind.is_american:
        forward = spot * np.exp(pricer.rate * args.maturity)
        implied = sabr_implied_vol(float(forward), strike, args.maturity, vol, cfg.market)
        return kind.value, binomial_valuation(
            kind, spot, strike, implied, pricer.rate, args.maturity, pricer.binomial_steps
        )
    return kind.value, value_option(spec, spot, vol, args.t, cfg.market, pricer)


def cmd_price(ctx: RunContext) -> int:
    instrument, val = _price(ctx)
    result = {
        "instrument": instrument,
        "price": val.price,
        "delta": val.delta,
        "gamma": val.gamma,
        "std_error": val.std_error,
        "seed": ctx.config.seeds.eval,
        "config_fingerprint": ctx.fingerprint,
    }
    dal.write_json(ctx.out.file(f"price_{instrument}.json"), result)
    print(f"{val.price:.6f}")
    return EXIT_OK


def cmd_greeks_profile(ctx: RunContext) -> int:
    cfg = ctx.config
    args = ctx.args
    spots = np.linspace(args.spot_min, args.spot_max, args.spot_points)
    rng = RngStream(cfg.seeds.eval, PROFILE_STREAM)
    rows = greeks_profile(cfg.note, spots, tuple(args.days), cfg.market, cfg.valuation_pricer, rng)
    out = artifacts.write_greeks_profile(ctx.out.file("greeks_profile.csv"), rows, ctx.fingerprint, cfg.seeds.eval)
    logger.info("Wrote %d profile rows to %s", len(rows), out)
    return EXIT_OK


def _file_tag(strategy: Strategy) -> str:
    return strategy.name.split(":")[0] if strategy.policy is not None else strategy.name.replace(":", "_")


def _emit_pnl(ctx: RunContext, pnl: PnlSamples, tag: str) -> RiskReport:
    rep = report(pnl, ctx.fingerprint)
    seed = ctx.config.seeds.eval
    artifacts.write_pnl(ctx.out.file(f"pnl_{tag}.csv"), pnl.values, pnl.seeds, ctx.fingerprint, pnl.strategy, seed)
    artifacts.write_histogram(
        ctx.out.file(f"histogram_{tag}.csv"), pnl.values, ctx.args.bins, ctx.fingerprint, pnl.strategy, seed
    )
    artifacts.write_report(ctx.out.file(f"report_{tag}.json"), rep)
    logger.info(
        "%s: mean %.4f, std %.4f, 95%%VaR %.4f, gamma ratio %.4f over %d episodes",
        pnl.strategy,
        rep.mean,
        rep.std,
        rep.var95,
        rep.gamma_ratio,
        rep.n,
    )
    return rep


def cmd_simulate_pnl(ctx: RunContext) -> int:
    cfg = ctx.config
    strategy = parse_strategy(ctx.args.strategy, _policy_loader)
    seeds = evaluation_seeds(cfg.seeds.eval, ctx.args.episodes)
    results = run_episodes(ctx.env_factory(), strategy, seeds, ctx.threads, ctx.progress)
    pnl = pnl_samples_from_rollouts(results, strategy.name, seeds)
    tag = _file_tag(strategy)
    for i, result in enumerate(results[: ctx.args.trace_episodes]):
        path = ctx.out.file(f"trace_{tag}_{i}.csv")
        artifacts.write_trace(path, result.trace, ctx.fingerprint, seeds[i], strategy.name)
    _emit_pnl(ctx, pnl, tag)
    return EXIT_OK


def cmd_fit_lsmc(ctx: RunContext) -> int:
    cfg = ctx.config
    models = ctx.exercise_models(ctx.args.tenor or cfg.env.client_tenor)
    data = {
        "config_fingerprint": ctx.fingerprint,
        "seed": cfg.seeds.train,
        "models": {
            kind.value: {
                "times": list(m.times),
                "coefficients": [c.tolist() for c in m.coefficients],
                "degrees": list(m.degrees),
                "degraded": m.degraded,
                "maturity": m.maturity,
                "rate": m.rate,
                "strikes": list(m.strikes),
            }
            for kind, m in models.items()
        },
    }
    dal.write_json(ctx.out.file("lsmc_models.json"), data)
    return EXIT_OK


def cmd_train(ctx: RunContext) -> int:
    cfg = ctx.config
    if ctx.args.episodes is not None:
        cfg = with_overrides(cfg, trainer={"episodes": ctx.args.episodes})
        ctx.config = cfg
        ctx.fingerprint = cfg.fingerprint()
    result = train(
        ctx.env_factory(),
        cfg.trainer,
        cfg.seeds.train,
        threads=ctx.threads,
        config_fingerprint=ctx.fingerprint,
        mode=cfg.env.mode.value,
        dump_dir=ctx.out.path,
        progress=ctx.progress,
    )
    artifacts.save_snapshot(ctx.out.file("policy.json"), result.snapshot)
    artifacts.write_curve(ctx.out.file("training_curve.csv"), result.curve, ctx.fingerprint, cfg.seeds.train)
    logger.info("Training finished; policy written to %s", ctx.out.file("policy.json"))
    return EXIT_OK


def _policy_loader(path: str) -> Callable[[np.ndarray], float]:
    return _load_policy(path).act


def _load_policy(path: str | Path) -> PolicySnapshot:
    if not Path(path).is_file():
        raise ConfigError("policy", f"policy file {path} not found")
    return artifacts.load_snapshot(path)


def cmd_evaluate(ctx: RunContext) -> int:
    cfg = ctx.config
    snapshot = _load_policy(ctx.args.policy)
    if snapshot.mode and snapshot.mode != cfg.env.mode.value:
        raise ConfigError("env.mode", f"policy was trained in {snapshot.mode} mode")
    if snapshot.config_fingerprint and snapshot.config_fingerprint != ctx.fingerprint:
        logger.warning("Policy was trained under config %s", snapshot.config_fingerprint[:16])
    seeds = evaluation_seeds(cfg.seeds.eval, ctx.args.episodes)
    make_env = ctx.env_factory()
    pnl = evaluate(snapshot, make_env, seeds, ctx.threads, ctx.progress)
    rep = _emit_pnl(ctx, pnl, "rl")
    predicted = snapshot.return_distribution(make_env().reset(seeds[0]).features)
    logger.info(
        "Critic at the first start state: mean %.4f, 95%%VaR %.4f (realised %.4f, %.4f)",
        predicted.mean(),
        predicted.quantile(0.05),
        rep.mean,
        rep.var95,
    )
    return EXIT_OK


def _report_name(path: Path) -> str:
    stem = path.stem
    return stem[len("report_") :] if stem.startswith("report_") else stem


def cmd_report(ctx: RunContext) -> int:
    reports = {}
    for path in ctx.args.compare:
        path = Path(path)
        if not path.is_file():
            raise ConfigError("report", f"report file {path} not found")
        data = dal.read_json(path)
        reports[_report_name(path)] = RiskReport(
            mean=data["Mean"],
            std=data["Std"],
            mean_minus=data["mean_minus_1p645_std"],
            var5=data["5%VaR"],
            cvar5=data["5%CVaR"],
            var95=data["95%VaR"],
            cvar95=data["95%CVaR"],
            gamma_ratio=data["Gamma Ratio"],
            skewness=data.get("Skewness", float("nan")),
            n=data["n"],
            seed_set=data.get("seed_set", ""),
            config_fingerprint=data.get("config_fingerprint", ""),
        )
    table = compare_table(reports)
    dal.write_csv(ctx.out.file("compare.csv"), table, {dal.FINGERPRINT: ctx.fingerprint})
    print(table.to_string(index=False, float_format=lambda v: f"{v:.2f}"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="experiment TOML file")
    common.add_argument("--seed", type=int, default=None, help="override both configured seeds")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--quiet", action="store_true", help="disable progress bars")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="hedge-lab", description="Autocallable and vanilla hedging laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate market paths")
    p.add_argument("--paths", type=int, default=10)
    p.add_argument("--steps", type=int, default=84)
    p.add_argument("--dt", type=float, default=1.0 / 12.0)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("price", parents=[common], help="value one instrument")
    p.add_argument("--instrument", default="note", choices=["note", *(k.value for k in OptionKind)])
    p.add_argument("--spot", type=float, default=None)
    p.add_argument("--vol", type=float, default=None)
    p.add_argument("--t", type=float, default=0.0, help="valuation time in years since issue")
    p.add_argument("--strike", type=float, default=None)
    p.add_argument("--maturity", type=float, default=1.0 / 12.0, help="option tenor in years")
    p.set_defaults(handler=cmd_price)

    p = sub.add_parser("greeks-profile", parents=[common], help="note Greeks before the first call date")
    p.add_argument("--days", type=int, nargs="+", default=[60, 5, 1])
    p.add_argument("--spot-min", type=float, default=60.0)
    p.add_argument("--spot-max", type=float, default=140.0)
    p.add_argument("--spot-points", type=int, default=81)
    p.set_defaults(handler=cmd_greeks_profile)

    p = sub.add_parser("simulate-pnl", parents=[common], help="PnL distribution of a strategy")
    p.add_argument("--strategy", required=True, help="none|delta|delta-gamma|const:<c>|rl:<policy-file>")
    p.add_argument("--episodes", type=int, default=1000)
    p.add_argument("--trace-episodes", type=int, default=0, help="write traces of the first N episodes")
    p.add_argument("--bins", type=int, default=50)
    p.set_defaults(handler=cmd_simulate_pnl)

    p = sub.add_parser("fit-lsmc", parents=[common], help="fit early-exercise models")
    p.add_argument("--tenor", type=float, default=None)
    p.set_defaults(handler=cmd_fit_lsmc)

    p = sub.add_parser("train", parents=[common], help="train a D4PG policy")
    p.add_argument("--episodes", type=int, default=None)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="evaluate a trained policy")
    p.add_argument("--policy", type=Path, required=True)
    p.add_argument("--episodes", type=int, default=5000)
    p.add_argument("--bins", type=int, default=50)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("report", parents=[common], help="compare report JSON files")
    p.add_argument("--compare", nargs="+", required=True)
    p.set_defaults(handler=cmd_report)
    return parser


def run_command(argv: Sequence[str]) -> int:
    """Parses ``argv`` and runs the subcommand; returns the exit status."""
    args = build_parser().parse_args(list(argv))
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, stream=sys.stderr, force=True)
    try:
        ctx = RunContext(args)
        return args.handler(ctx)
    except ConfigError as e:
        logger.error("Configuration error: %s", e)
        return EXIT_CONFIG
    except (HedgeLabError, ArithmeticError) as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_RUNTIME


def main(argv: Sequence[str] | None = None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
