# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""Trained policy snapshots.

A snapshot is everything needed to replay a policy: both networks, the
observation normalisation, the seed and the fingerprint of the config it was
trained under. :meth:`PolicySnapshot.to_dict` produces a JSON-ready structure;
floats go through ``repr`` in ``json`` and therefore round-trip exactly.
"""

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import ContractError
from .mlp import Mlp, OutputActivation, mlp_forward
from .quantiles import QuantileDistribution

FORMAT_VERSION = 1


def _net_to_dict(net: Mlp) -> dict[str, Any]:
    return {
        "layer_sizes": list(net.layer_sizes),
        "output": net.output.value,
        "weights": [w.ravel().tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }


def _net_from_dict(data: dict[str, Any]) -> Mlp:
    sizes = tuple(int(n) for n in data["layer_sizes"])
    weights = [
        np.asarray(w, dtype=float).reshape(n_out, n_in)
        for w, n_in, n_out in zip(data["weights"], sizes[:-1], sizes[1:], strict=True)
    ]
    biases = [np.asarray(b, dtype=float) for b in data["biases"]]
    return Mlp(sizes, weights, biases, OutputActivation(data["output"]))


@dataclass
class PolicySnapshot:
    actor: Mlp
    critic: Mlp
    config_fingerprint: str = ""
    normalization: dict[str, float] = field(default_factory=dict)
    seed: int = 0
    mode: str = ""
    trainer: dict[str, Any] = field(default_factory=dict)

    def act(self, features: np.ndarray) -> float:
        """Deterministic action, no exploration noise."""
        return float(mlp_forward(self.actor, features)[0])

    def return_distribution(self, features: np.ndarray) -> QuantileDistribution:
        """The critic's distribution of the remaining episode PnL under the policy's own action."""
        features = np.asarray(features, dtype=float)
        critic_in = np.append(features, self.act(features))
        return QuantileDistribution(mlp_forward(self.critic, critic_in))

    def to_dict(self) -> dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "config_fingerprint": self.config_fingerprint,
            "seed": self.seed,
            "mode": self.mode,
            "normalization": dict(self.normalization),
            "trainer": dict(self.trainer),
            "actor": _net_to_dict(self.actor),
            "critic": _net_to_dict(self.critic),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PolicySnapshot":
        version = data.get("format_version")
        if version != FORMAT_VERSION:
            raise ContractError(f"unsupported policy snapshot version {version!r}")
        return cls(
            actor=_net_from_dict(data["actor"]),
            critic=_net_from_dict(data["critic"]),
            config_fingerprint=data.get("config_fingerprint", ""),
            normalization={k: float(v) for k, v in data.get("normalization", {}).items()},
            seed=int(data.get("seed", 0)),
            mode=data.get("mode", ""),
            trainer=dict(data.get("trainer", {})),
        )
