# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""Domain artifact formats built on :mod:`hedge_lab.io.dal`."""

from collections.abc import Sequence
from dataclasses import asdict
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from ..core.env import TraceRow
from ..core.market import PathSet
from ..core.pricing import GreeksProfileRow
from ..core.risk import RiskReport, histogram_frame
from ..drl.d4pg import CurveRow
from ..drl.snapshot import PolicySnapshot
from . import dal

TRACE_COLUMNS = list(TraceRow._fields)
CURVE_COLUMNS = list(CurveRow._fields)


def export_paths(path: str | Path, paths: PathSet, fingerprint: str = "") -> Path:
    """Writes simulated paths in long form: ``path,step,time,spot,vol``."""
    n, m = paths.spots.shape
    frame = pd.DataFrame(
        {
            "path": np.repeat(np.arange(n), m),
            "step": np.tile(np.arange(m), n),
            "time": np.tile(paths.times, n),
            "spot": paths.spots.ravel(),
            "vol": paths.vols.ravel(),
        }
    )
    header = {dal.FINGERPRINT: fingerprint, dal.SEED: paths.seed, dal.MARKET: _market_text(paths.params)}
    return dal.write_csv(path, frame, header)


def _market_text(params: Any) -> str:
    return ",".join(f"{k}={v!r}" for k, v in asdict(params).items())


def write_trace(path: str | Path, rows: Sequence[TraceRow], fingerprint: str, seed: int, strategy: str) -> Path:
    frame = pd.DataFrame([r._asdict() for r in rows], columns=TRACE_COLUMNS)
    frame["done"] = frame["done"].astype(int)
    header = {dal.FINGERPRINT: fingerprint, dal.SEED: seed, dal.STRATEGY: strategy}
    return dal.write_csv(path, frame, header)


def write_pnl(
    path: str | Path, pnl: np.ndarray, seeds: Sequence[int], fingerprint: str, strategy: str, seed: int
) -> Path:
    """PnL per episode; ``seed`` is the run seed the episode seeds derive from."""
    frame = pd.DataFrame({"episode": np.arange(len(pnl)), "seed": list(seeds), "pnl": pnl})
    header = {dal.FINGERPRINT: fingerprint, dal.SEED: seed, dal.STRATEGY: strategy}
    return dal.write_csv(path, frame, header)


def read_pnl(path: str | Path) -> tuple[np.ndarray, list[int], dict[str, Any]]:
    frame, header = dal.read_csv(path)
    return frame["pnl"].to_numpy(dtype=float), frame["seed"].astype(int).tolist(), header


def write_curve(path: str | Path, rows: Sequence[CurveRow], fingerprint: str, seed: int) -> Path:
    frame = pd.DataFrame([r._asdict() for r in rows], columns=CURVE_COLUMNS)
    return dal.write_csv(path, frame, {dal.FINGERPRINT: fingerprint, dal.SEED: seed})


def write_greeks_profile(path: str | Path, rows: Sequence[GreeksProfileRow], fingerprint: str, seed: int) -> Path:
    frame = pd.DataFrame([r._asdict() for r in rows], columns=list(GreeksProfileRow._fields))
    return dal.write_csv(path, frame, {dal.FINGERPRINT: fingerprint, dal.SEED: seed})


def write_histogram(
    path: str | Path, pnl: np.ndarray, n_bins: int, fingerprint: str, strategy: str, seed: int
) -> Path:
    header = {dal.FINGERPRINT: fingerprint, dal.SEED: seed, dal.STRATEGY: strategy}
    return dal.write_csv(path, histogram_frame(pnl, n_bins), header)


def write_report(path: str | Path, report: RiskReport) -> Path:
    return dal.write_json(path, report.to_json_dict())


def save_snapshot(path: str | Path, snapshot: PolicySnapshot) -> Path:
    return dal.write_json(path, snapshot.to_dict())


def load_snapshot(path: str | Path) -> PolicySnapshot:
    return PolicySnapshot.from_dict(dal.read_json(path))
