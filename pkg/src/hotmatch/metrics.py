"""Evaluation metrics and the per-run report record."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .graphs import Alignment
from .gw import TransportPlan

__all__ = ["node_correctness", "MatchReport"]


def node_correctness(plan: TransportPlan, truth: Alignment, k: int) -> float:
    """Percentage of ground-truth pairs whose target ranks in the plan's top k.

    Each source row is ranked by descending plan mass; ties break toward the
    lower target index. The score is normalized by the number of truth pairs.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not truth.pairs:
        raise ValueError("alignment has no pairs")
    matrix = plan.matrix
    ns, nt = matrix.shape
    if truth.source_size > ns or truth.target_size > nt:
        raise ValueError("alignment indices exceed the plan dimensions")
    cols = np.arange(nt)
    hits = 0
    for s, t in truth.pairs:
        row = matrix[s]
        rank = int(np.sum(row > row[t]) + np.sum((row == row[t]) & (cols < t)))
        if rank < k:
            hits += 1
    return 100.0 * hits / len(truth.pairs)


@dataclass
class MatchReport:
    """One harness run: method, noise level, seed, scores, and timing."""

    method: str
    noise_percent: float
    seed: int
    nc_at: dict[int, float]
    runtime_seconds: float
    config: dict

    def __post_init__(self) -> None:
        if not self.nc_at:
            raise ValueError("nc_at must hold at least one cutoff")
        last = 0.0
        for k in sorted(self.nc_at):
            v = float(self.nc_at[k])
            if not 0.0 <= v <= 100.0:
                raise ValueError(f"NC@{k} = {v} outside [0, 100]")
            if v < last - 1e-12:
                raise ValueError("NC@k must be non-decreasing in k")
            last = v
        if self.runtime_seconds < 0.0:
            raise ValueError("runtime must be >= 0")

    def to_json(self) -> str:
        payload = {
            "method": self.method,
            "noise_percent": self.noise_percent,
            "seed": self.seed,
            "nc_at": {str(k): v for k, v in self.nc_at.items()},
            "runtime_seconds": self.runtime_seconds,
            "config": self.config,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "MatchReport":
        data = json.loads(text)
        return cls(
            method=data["method"],
            noise_percent=data["noise_percent"],
            seed=data["seed"],
            nc_at={int(k): float(v) for k, v in data["nc_at"].items()},
            runtime_seconds=data["runtime_seconds"],
            config=data["config"],
        )
