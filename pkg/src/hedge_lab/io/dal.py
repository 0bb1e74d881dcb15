# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""Data access layer for experiment artifacts.

Domain code never opens files itself; everything written to or read from disk
goes through the functions here. CSV artifacts start with ``# key=value``
header lines that carry the config fingerprint, the seeds and the market
parameters; no timestamps are written so that equal runs produce byte-identical
files.
"""

import json
import logging
from pathlib import Path
from typing import Any, Generic, TypeVar

import numpy as np
import pandas as pd

from ..errors import ContractError

logger = logging.getLogger(__name__)

T = TypeVar("T")


class OutputDir:
    """Reference to an experiment output directory, created on first use."""

    def __init__(self, path: str | Path):
        self._path = Path(path)

    @property
    def path(self) -> Path:
        return self._path

    def file(self, name: str) -> Path:
        self._path.mkdir(parents=True, exist_ok=True)
        return self._path / name


class HeaderField(Generic[T]):
    """A typed ``# key=value`` header line of a CSV artifact."""

    def __init__(self, key: str, parse: type[T]):
        """
        Args:
            key: Name written before ``=``.
            parse: Converts the stored text back to a value.
        """
        self.key = key
        self.parse = parse

    def __repr__(self) -> str:
        return f"HeaderField({self.key!r})"


FINGERPRINT = HeaderField("config_fingerprint", str)
SEED = HeaderField("seed", int)
MARKET = HeaderField("market", str)
STRATEGY = HeaderField("strategy", str)

_FIELDS = {f.key: f for f in (FINGERPRINT, SEED, MARKET, STRATEGY)}


def _format_header(header: dict[HeaderField[Any], Any]) -> str:
    lines = []
    for fld, value in header.items():
        text = str(value)
        if "\n" in text:
            raise ContractError(f"header value for {fld.key} spans lines")
        lines.append(f"# {fld.key}={text}\n")
    return "".join(lines)


def write_csv(path: str | Path, frame: pd.DataFrame, header: dict[HeaderField[Any], Any] | None = None) -> Path:
    """Writes ``frame`` as CSV behind its header lines.

    Floats are written with ``repr`` precision so that values read back are
    bit-identical.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        f.write(_format_header(header or {}))
        frame.to_csv(f, index=False, float_format="%.17g", lineterminator="\n")
    logger.debug("Wrote %d rows to %s", len(frame), path)
    return path


def read_csv_header(path: str | Path) -> dict[str, Any]:
    """Parses the ``# key=value`` lines at the top of a CSV artifact."""
    header: dict[str, Any] = {}
    with Path(path).open(encoding="utf-8") as f:
        for line in f:
            if not line.startswith("# "):
                break
            key, _, value = line[2:].rstrip("\n").partition("=")
            fld = _FIELDS.get(key)
            header[key] = fld.parse(value) if fld else value
    return header


def read_csv(path: str | Path) -> tuple[pd.DataFrame, dict[str, Any]]:
    """Reads a CSV artifact and its header."""
    return pd.read_csv(path, comment="#", float_precision="round_trip"), read_csv_header(path)


def get_header_field(path: str | Path, fld: HeaderField[T]) -> T | None:
    """Returns one header value of a CSV artifact, or None if absent."""
    value = read_csv_header(path).get(fld.key)
    return value if value is None else fld.parse(value)


def write_json(path: str | Path, data: dict[str, Any]) -> Path:
    """Writes ``data`` as indented JSON with sorted keys."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")
    return path


def read_json(path: str | Path) -> dict[str, Any]:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ContractError(f"{path} is not valid JSON: {e}") from e


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialise {type(value).__name__}")
