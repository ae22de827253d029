"""Shared domain types: loss vectors, sampling distributions, importance-weighted
estimates, and per-run interaction records.

Every type is immutable after construction (arrays are marked read-only), so
instances can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

__all__ = [
    "LossVector",
    "ProbabilityVector",
    "EstimateVector",
    "RoundRecord",
    "RunRecord",
    "importance_weighted_estimate",
    "random_regret",
]

#: absolute tolerance on a distribution summing to one
SUM_TOL = 1e-10
#: slack allowed below the box floor (pure float round-off)
FLOOR_TOL = 1e-12


def _readonly_vector(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LossVector:
    """Per-arm losses for a single round, each entry in [0, 1]."""

    entries: np.ndarray

    def __post_init__(self):
        arr = _readonly_vector(self.entries)
        if arr.size < 2:
            raise ValueError("a loss vector needs at least two arms")
        if not np.all((arr >= 0.0) & (arr <= 1.0)):
            raise ValueError("loss entries must lie in the closed interval [0, 1]")
        object.__setattr__(self, "entries", arr)

    @property
    def k(self) -> int:
        return self.entries.size


@dataclass(frozen=True)
class ProbabilityVector:
    """A point in the probability simplex, optionally with a box lower bound.

    ``floor`` records the active per-coordinate lower bound (0 when the full
    simplex is feasible).  Point masses are legal when ``floor`` is 0, which is
    what deterministic exploit rounds emit.
    """

    entries: np.ndarray
    floor: float = 0.0

    def __post_init__(self):
        arr = _readonly_vector(self.entries)
        if arr.size < 2:
            raise ValueError("a distribution needs at least two arms")
        if self.floor < 0.0:
            raise ValueError("floor must be nonnegative")
        total = float(np.sum(arr))
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"entries must sum to 1 within {SUM_TOL}, got {total!r}")
        if np.any(arr < self.floor - FLOOR_TOL):
            raise ValueError("an entry lies below the box floor")
        if np.any(arr > 1.0 + FLOOR_TOL):
            raise ValueError("an entry exceeds 1")
        object.__setattr__(self, "entries", arr)

    @property
    def k(self) -> int:
        return self.entries.size


@dataclass(frozen=True)
class EstimateVector:
    """Nonnegative estimated-loss vector (single-round estimate or a running sum)."""

    entries: np.ndarray

    def __post_init__(self):
        arr = _readonly_vector(self.entries)
        if np.any(arr < 0.0):
            raise ValueError("estimated losses are nonnegative")
        object.__setattr__(self, "entries", arr)

    @property
    def k(self) -> int:
        return self.entries.size


@dataclass(frozen=True)
class RoundRecord:
    """Trace entry for one round: what was played, what it cost, and under what
    distribution and learning rate."""

    t: int
    action: int
    loss_incurred: float
    distribution: ProbabilityVector
    learning_rate: float

    def __post_init__(self):
        if self.t < 1:
            raise ValueError("round index starts at 1")
        if not 0 <= self.action < self.distribution.k:
            raise ValueError("action out of range")
        if not self.learning_rate > 0.0:
            raise ValueError("learning rate must be positive")


@dataclass(frozen=True)
class RunRecord:
    """Summary of one completed run.

    The per-round trace is optional and disabled by default: at large horizons
    and replication counts only the realized regret and the best arm's
    cumulative loss are kept.
    """

    seed: int
    horizon: int
    arm_count: int
    random_regret: float
    cumulative_best_arm_loss: float
    trace: Optional[tuple[RoundRecord, ...]] = None
    extras: Mapping[str, float] = field(default_factory=dict, compare=False)


def importance_weighted_estimate(
    loss: LossVector, action: int, dist: ProbabilityVector
) -> EstimateVector:
    """Estimate the full loss vector from bandit feedback.

    Only the played coordinate is nonzero: the incurred loss divided by the
    probability of playing it, which makes the estimate unbiased under ``dist``.
    """
    if loss.k != dist.k:
        raise ValueError("loss and distribution have different arm counts")
    if not 0 <= action < loss.k:
        raise ValueError("action out of range")
    p = dist.entries[action]
    if p <= 0.0:
        raise ValueError(
            "the played arm has zero probability; the estimator is undefined "
            "(every shipped policy keeps sampled coordinates positive)"
        )
    out = np.zeros(loss.k)
    out[action] = loss.entries[action] / p
    return EstimateVector(out)


def random_regret(trace: Sequence[RoundRecord], losses: Sequence[LossVector]) -> float:
    """Realized regret of a run: incurred loss minus the best fixed arm's loss.

    Recomputed directly from the trace and the loss sequence, so it can be used
    to audit a recorded run.
    """
    if len(trace) != len(losses):
        raise ValueError("trace and loss sequence have different lengths")
    if len(trace) == 0:
        raise ValueError("need at least one round")
    loss_matrix = np.stack([lv.entries for lv in losses])
    actions = np.fromiter((r.action for r in trace), dtype=np.intp, count=len(trace))
    incurred = float(loss_matrix[np.arange(len(trace)), actions].sum())
    best = float(loss_matrix.sum(axis=0).min())
    return incurred - best
