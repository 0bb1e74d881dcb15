# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""End-to-end tests of the ``hedge-lab`` subcommands on small settings."""

import logging
import math

import pytest

from hedge_lab.cli.commands import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, run_command
from hedge_lab.core.instruments import OptionKind
from hedge_lab.core.market import SabrParams, sabr_implied_vol
from hedge_lab.core.pricing import binomial_valuation
from hedge_lab.io import artifacts, dal

SMALL_AUTOCALL = """
[env]
horizon = 0.25

[pricer]
n_mc_paths = 32

[trainer]
episodes = 4
collectors = 2
batch_size = 4
warmup_transitions = 4
actor_hidden = [4]
critic_hidden = [4]
n_quantiles = 10
eval_interval = 2
eval_episodes = 1
"""


@pytest.fixture(autouse=True)
def restore_logging():
    """run_command reconfigures the root logger; put it back after each test."""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def config_file(tmp_path):
    """A small autocallable experiment."""
    path = tmp_path / "small.toml"
    path.write_text(SMALL_AUTOCALL)
    return path


def run(*argv) -> int:
    return run_command([*argv, "--quiet", "--log-level", "WARNING"])


def test_price_note_without_volatility(tmp_path, capsys):
    """At zero volatility from spot 100 the note is worth 105.70."""
    # Act
    code = run("price", "--instrument", "note", "--vol", "0", "--spot", "100", "--out", str(tmp_path))

    # Assert
    assert code == EXIT_OK
    assert capsys.readouterr().out.strip() == "105.700000"
    result = dal.read_json(tmp_path / "price_note.json")
    assert result["price"] == pytest.approx(105.70)
    assert result["seed"] == 1
    assert len(result["config_fingerprint"]) == 64


def test_price_american_put(tmp_path, capsys):
    code = run("price", "--instrument", "american_put", "--strike", "100", "--out", str(tmp_path))

    assert code == EXIT_OK
    assert float(capsys.readouterr().out) > 0.0
    assert (tmp_path / "price_american_put.json").is_file()


def test_price_american_put_discounts_at_the_env_rate(tmp_path):
    """American prices use the environment rate, the same one the hedging episodes use."""
    # Arrange
    config = tmp_path / "rate.toml"
    config.write_text("[env]\nrate = 0.05\n\n[pricer]\nbinomial_steps = 200\n")
    market = SabrParams()
    tenor = 1.0 / 12.0
    implied = sabr_implied_vol(100.0 * math.exp(0.05 * tenor), 100.0, tenor, market.sigma0, market)

    # Act
    code = run(
        "price", "--instrument", "american_put", "--strike", "100", "--config", str(config), "--out", str(tmp_path)
    )

    # Assert
    expected = binomial_valuation(OptionKind.AMERICAN_PUT, 100.0, 100.0, implied, 0.05, tenor, 200).price
    at_zero = binomial_valuation(OptionKind.AMERICAN_PUT, 100.0, 100.0, implied, 0.0, tenor, 200).price
    assert code == EXIT_OK
    assert dal.read_json(tmp_path / "price_american_put.json")["price"] == pytest.approx(expected, rel=1e-12)
    assert expected < at_zero


def test_price_past_maturity_is_a_runtime_error(tmp_path):
    code = run("price", "--instrument", "note", "--t", "7.5", "--out", str(tmp_path))

    assert code == EXIT_RUNTIME


def test_seed_flag_is_recorded(tmp_path):
    run("price", "--instrument", "note", "--vol", "0", "--seed", "17", "--out", str(tmp_path))

    assert dal.read_json(tmp_path / "price_note.json")["seed"] == 17


def test_simulate_writes_paths(tmp_path):
    code = run("simulate", "--paths", "3", "--steps", "5", "--out", str(tmp_path))

    table, header = dal.read_csv(tmp_path / "paths.csv")
    assert code == EXIT_OK
    assert len(table) == 18
    assert header["seed"] == 1


def test_simulate_pnl_is_reproducible(tmp_path, config_file):
    """Two runs with the same config and seed write byte-identical PnL files."""
    # Arrange
    argv = ["simulate-pnl", "--strategy", "delta-gamma", "--episodes", "3", "--config", str(config_file)]

    # Act
    first = run(*argv, "--out", str(tmp_path / "a"), "--trace-episodes", "1")
    second = run(*argv, "--out", str(tmp_path / "b"), "--threads", "2")

    # Assert
    assert first == second == EXIT_OK
    a = (tmp_path / "a" / "pnl_delta-gamma.csv").read_bytes()
    b = (tmp_path / "b" / "pnl_delta-gamma.csv").read_bytes()
    assert a == b
    assert (tmp_path / "a" / "trace_delta-gamma_0.csv").is_file()
    assert (tmp_path / "a" / "histogram_delta-gamma.csv").is_file()
    assert dal.read_json(tmp_path / "a" / "report_delta-gamma.json")["n"] == 3
    for name in ("pnl_delta-gamma.csv", "histogram_delta-gamma.csv"):
        _, header = dal.read_csv(tmp_path / "a" / name)
        assert header["seed"] == 1
        assert header["strategy"] == "delta-gamma"


def test_report_compares_strategies(tmp_path, config_file, capsys):
    common = ["--episodes", "2", "--config", str(config_file), "--out", str(tmp_path)]
    for strategy in ("none", "delta"):
        run("simulate-pnl", "--strategy", strategy, *common)
    capsys.readouterr()
    reports = [str(tmp_path / "report_none.json"), str(tmp_path / "report_delta.json")]

    code = run("report", "--compare", *reports, "--out", str(tmp_path / "cmp"))

    table, _ = dal.read_csv(tmp_path / "cmp" / "compare.csv")
    assert code == EXIT_OK
    assert table["Strategy"].tolist() == ["none", "delta"]
    assert "95%VaR" in table.columns
    assert "delta" in capsys.readouterr().out


def test_train_then_evaluate(tmp_path, config_file):
    """A tiny training run writes a policy that evaluate accepts."""
    # Arrange
    common = ["--config", str(config_file), "--out", str(tmp_path)]

    # Act
    trained = run("train", *common)
    evaluated = run("evaluate", "--policy", str(tmp_path / "policy.json"), "--episodes", "2", *common)

    # Assert
    assert trained == evaluated == EXIT_OK
    snapshot = artifacts.load_snapshot(tmp_path / "policy.json")
    assert snapshot.mode == "autocallable"
    curve, _ = dal.read_csv(tmp_path / "training_curve.csv")
    assert len(curve) >= 1
    assert dal.read_json(tmp_path / "report_rl.json")["n"] == 2


def test_policy_mode_must_match(tmp_path, config_file):
    """A policy trained on the autocallable book is refused for vanilla flow."""
    run("train", "--config", str(config_file), "--out", str(tmp_path))
    vanilla = tmp_path / "vanilla.toml"
    vanilla.write_text('[env]\nmode = "vanilla_flow"\n')

    code = run("evaluate", "--policy", str(tmp_path / "policy.json"), "--config", str(vanilla), "--out", str(tmp_path))

    assert code == EXIT_CONFIG


def test_configuration_errors_exit_with_two(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[env]\nkappa = -1.0\n")

    assert run("simulate", "--config", str(bad), "--out", str(tmp_path)) == EXIT_CONFIG
    assert run("evaluate", "--policy", str(tmp_path / "missing.json"), "--out", str(tmp_path)) == EXIT_CONFIG
    assert run("simulate-pnl", "--strategy", "sometimes", "--out", str(tmp_path)) == EXIT_CONFIG


def test_unknown_flag_is_a_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        run_command(["simulate", "--colour", "red"])

    assert excinfo.value.code == 2


def test_greeks_profile_rows(tmp_path):
    spots = ["--spot-min", "90", "--spot-max", "110", "--spot-points", "3"]

    code = run("greeks-profile", "--days", "5", "1", *spots, "--out", str(tmp_path))

    table, _ = dal.read_csv(tmp_path / "greeks_profile.csv")
    assert code == EXIT_OK
    assert len(table) == 6
    assert sorted(set(table["days_before_call"])) == [1, 5]


def test_fit_lsmc_writes_models(tmp_path):
    config = tmp_path / "lsmc.toml"
    config.write_text("[pricer]\nlsmc_training_paths = 400\n")

    code = run("fit-lsmc", "--config", str(config), "--out", str(tmp_path))

    models = dal.read_json(tmp_path / "lsmc_models.json")["models"]
    assert code == EXIT_OK
    assert set(models) == {"american_call", "american_put"}
    assert len(models["american_put"]["times"]) == len(models["american_put"]["coefficients"])


def test_fit_lsmc_for_another_tenor(tmp_path):
    """The tenor flag fits the rules the environment uses for two-month options."""
    config = tmp_path / "lsmc.toml"
    config.write_text("[env]\nrate = 0.03\n\n[pricer]\nlsmc_training_paths = 400\n")

    code = run("fit-lsmc", "--tenor", str(2.0 / 12.0), "--config", str(config), "--out", str(tmp_path))

    put = dal.read_json(tmp_path / "lsmc_models.json")["models"]["american_put"]
    assert code == EXIT_OK
    assert put["maturity"] == pytest.approx(2.0 / 12.0)
    assert len(put["times"]) == 42
    assert put["rate"] == 0.03
    assert not put["degraded"]
