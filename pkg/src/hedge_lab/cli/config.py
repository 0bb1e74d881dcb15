# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""Experiment configuration loaded from TOML.

Sections mirror the modules they configure::

    [market]   SabrParams         [pricer]  PricerConfig
    [note]     AutocallableSpec   [trainer] TrainerConfig
    [env]      EnvConfig          [seeds]   SeedConfig
    [output]   OutputConfig

Unknown sections or keys are rejected. Every value is type checked against the
dataclass field it sets, and the dataclass validates its own invariants.
"""

import dataclasses
import hashlib
import json
import tomllib
import types
import typing
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from ..core.env import EnvConfig
from ..core.instruments import AutocallableSpec
from ..core.market import SabrParams
from ..core.pricing import PricerConfig
from ..drl.d4pg import TrainerConfig
from ..errors import ConfigError


@dataclass(frozen=True)
class SeedConfig:
    """The two named seeds all randomness derives from."""

    train: int = 0
    eval: int = 1

    def __post_init__(self) -> None:
        if self.train < 0 or self.eval < 0:
            raise ConfigError("seeds.train", "seeds must be non-negative")


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "runs"


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved experiment.

    ``env`` always has its mode-dependent defaults filled in.
    """

    market: SabrParams = field(default_factory=SabrParams)
    note: AutocallableSpec = field(default_factory=AutocallableSpec)
    env: EnvConfig = field(default_factory=lambda: EnvConfig().resolved())
    pricer: PricerConfig = field(default_factory=PricerConfig)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    seeds: SeedConfig = field(default_factory=SeedConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict[str, Any]:
        return {f.name: _plain(getattr(self, f.name)) for f in dataclasses.fields(self)}

    def fingerprint(self) -> str:
        """SHA-256 of the canonical JSON of every setting that shapes results.

        Seeds and the output directory are excluded; outputs record the seed
        separately.
        """
        data = self.to_dict()
        del data["seeds"], data["output"]
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @property
    def short_fingerprint(self) -> str:
        return self.fingerprint()[:16]

    @property
    def valuation_pricer(self) -> PricerConfig:
        """Pricer settings discounting at ``env.rate``, the single rate of a run."""
        return dataclasses.replace(self.pricer, rate=self.env.rate)


SECTIONS: dict[str, type] = {
    "market": SabrParams,
    "note": AutocallableSpec,
    "env": EnvConfig,
    "pricer": PricerConfig,
    "trainer": TrainerConfig,
    "seeds": SeedConfig,
    "output": OutputConfig,
}


def _plain(value: Any) -> Any:
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: _plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, tuple | list):
        return [_plain(v) for v in value]
    return value


def _coerce(key: str, hint: Any, value: Any) -> Any:
    origin = typing.get_origin(hint)
    if origin in (typing.Union, types.UnionType):
        options = [a for a in typing.get_args(hint) if a is not type(None)]
        if value is None and len(options) < len(typing.get_args(hint)):
            return None
        return _coerce(key, options[0], value)
    if origin is tuple:
        if not isinstance(value, list | tuple):
            raise ConfigError(key, f"expected a list, got {type(value).__name__}")
        args = typing.get_args(hint)
        item_hints = [args[0]] * len(value) if len(args) == 2 and args[1] is Ellipsis else list(args)
        if len(item_hints) != len(value):
            raise ConfigError(key, f"expected {len(item_hints)} values, got {len(value)}")
        return tuple(_coerce(key, h, v) for h, v in zip(item_hints, value, strict=True))
    if isinstance(hint, type) and issubclass(hint, Enum):
        try:
            return hint(value)
        except ValueError as e:
            allowed = ", ".join(m.value for m in hint)
            raise ConfigError(key, f"{value!r} is not one of {allowed}") from e
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true or false, got {value!r}")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, int | float):
            raise ConfigError(key, f"expected a number, got {value!r}")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    return value


def _build_section(name: str, cls: type, values: Any) -> Any:
    if not isinstance(values, dict):
        raise ConfigError(name, "must be a table")
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in values.items():
        if key not in known:
            raise ConfigError(f"{name}.{key}", "unknown key")
        kwargs[key] = _coerce(f"{name}.{key}", hints[key], value)
    return cls(**kwargs)


def config_from_dict(data: dict[str, Any]) -> ExperimentConfig:
    """Builds a resolved experiment config from parsed TOML data."""
    sections = {}
    for name, values in data.items():
        cls = SECTIONS.get(name)
        if cls is None:
            raise ConfigError(name, "unknown section")
        sections[name] = _build_section(name, cls, values)
    env = sections.get("env", EnvConfig())
    sections["env"] = env.resolved()
    return ExperimentConfig(**sections)


def load_config(path: str | Path | None) -> ExperimentConfig:
    """Loads an experiment config; ``None`` gives the default experiment.

    Raises:
        ConfigError: On unreadable TOML, unknown keys, type mismatches or
            violated invariants, naming the offending key.
    """
    if path is None:
        return config_from_dict({})
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(str(path), f"invalid TOML: {e}") from e
    except FileNotFoundError as e:
        raise ConfigError(str(path), "config file not found") from e
    return config_from_dict(data)


def with_overrides(config: ExperimentConfig, **sections: dict[str, Any]) -> ExperimentConfig:
    """Returns ``config`` with individual section fields replaced."""
    updated = {}
    for name, changes in sections.items():
        current = getattr(config, name)
        updated[name] = dataclasses.replace(current, **changes)
    return dataclasses.replace(config, **updated)
