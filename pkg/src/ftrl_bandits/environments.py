"""Oblivious loss-sequence generators.

Every environment fixes its whole loss sequence as a pure function of its
descriptor, its seed, and the round index; nothing a learner does can change
what it will be charged.  Stochastic kinds derive their randomness from a
counter-based Philox stream keyed by the seed, and the sequence for rounds
1..m is always a prefix of the sequence for rounds 1..n when m <= n.
"""

from __future__ import annotations

import csv
import math
from typing import Optional, Sequence

import numpy as np

from .core import LossVector

__all__ = [
    "BernoulliEnvironment",
    "VarianceAdversary",
    "LinearlySeparableEnvironment",
    "FileReplayEnvironment",
    "ENVIRONMENT_KINDS",
    "make_environment",
]

ENVIRONMENT_KINDS = (
    "stochastic_bernoulli",
    "variance_adversary",
    "linearly_separable",
    "file_replay",
)


class _Environment:
    """Common machinery: a lazily grown, prefix-stable loss block."""

    kind: str
    k: int
    horizon: Optional[int] = None  # None means unbounded

    def __init__(self):
        self._block = np.empty((0, 0))

    def _generate(self, n: int) -> np.ndarray:
        raise NotImplementedError

    def loss_block(self, n: int) -> np.ndarray:
        """Losses for rounds 1..n as an (n, k) read-only array."""
        if n < 1:
            raise ValueError("need at least one round")
        if self.horizon is not None and n > self.horizon:
            raise ValueError(f"round {n} exceeds the horizon {self.horizon}")
        if self._block.shape[0] < n:
            grow = max(n, 2 * self._block.shape[0])
            if self.horizon is not None:
                grow = min(grow, self.horizon)
            block = self._generate(grow)
            block.setflags(write=False)
            self._block = block
        return self._block[:n]

    def loss_at(self, t: int) -> LossVector:
        """The loss vector of round ``t`` (1-based), pure in (self, t)."""
        if t < 1:
            raise ValueError("round index starts at 1")
        return LossVector(self.loss_block(t)[t - 1])

    def best_arm_cumulative(self, n: int) -> tuple[int, float]:
        """The loss-minimizing arm over rounds 1..n and its cumulative loss.

        Computed by direct summation; ties resolve to the lowest index.
        """
        totals = self.loss_block(n).sum(axis=0)
        arm = int(np.argmin(totals))
        return arm, float(totals[arm])


def _stream(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


class BernoulliEnvironment(_Environment):
    """Independent Bernoulli losses with fixed per-arm means."""

    kind = "stochastic_bernoulli"

    def __init__(self, means: Sequence[float], seed: int = 0):
        super().__init__()
        means = np.asarray(means, dtype=np.float64)
        if means.ndim != 1 or means.size < 2:
            raise ValueError("need means for at least two arms")
        if np.any((means < 0.0) | (means > 1.0)):
            raise ValueError("Bernoulli means must lie in [0, 1]")
        self.means = means
        self.seed = int(seed)
        self.k = means.size

    def _generate(self, n: int) -> np.ndarray:
        u = _stream(self.seed).random((n, self.k))
        return (u < self.means).astype(np.float64)


class VarianceAdversary(_Environment):
    """The two-arm, two-phase sequence that destabilizes fixed-rate FTRL.

    Arm 1 costs ``alpha`` in the first half and nothing afterwards; arm 2 is
    free in the first half and costs 1 afterwards.  Arm 1 is therefore optimal,
    but a learner whose estimate for it inflates early keeps avoiding it for
    the whole expensive second half.  The horizon is rounded down to a multiple
    of four; ``requested_horizon`` records what was asked for.
    """

    kind = "variance_adversary"
    k = 2

    def __init__(self, alpha: float, horizon: int):
        super().__init__()
        if not 0.0 <= alpha <= 0.5:
            raise ValueError("alpha must lie in [0, 1/2]")
        if horizon < 4:
            raise ValueError("horizon must be at least 4")
        self.alpha = float(alpha)
        self.requested_horizon = int(horizon)
        self.horizon = (int(horizon) // 4) * 4

    def _generate(self, n: int) -> np.ndarray:
        half = self.horizon // 2
        t = np.arange(1, n + 1)
        first = np.where(t <= half, self.alpha, 0.0)
        second = np.where(t <= half, 0.0, 1.0)
        return np.column_stack([first, second])


class LinearlySeparableEnvironment(_Environment):
    """Sequences whose suboptimal arms trail arm 1 by a linear-in-n margin.

    With ``noise`` on, arm 1 draws uniformly from [0, 1 - 1.25 * max(gaps)] and
    arm i adds its gap plus uniform noise of amplitude a quarter of the gap;
    the ranges are arranged so the clip to [0, 1] never actually triggers and
    the average per-round margin is exactly the configured gap.  With ``noise``
    off the sequence is the deterministic (0, gaps...) vector every round.
    """

    kind = "linearly_separable"

    def __init__(self, gaps: Sequence[float], noise: bool = True, seed: int = 0):
        super().__init__()
        gaps = np.asarray(gaps, dtype=np.float64)
        if gaps.ndim != 1 or gaps.size < 1:
            raise ValueError("need a gap for every suboptimal arm")
        if np.any((gaps <= 0.0) | (gaps > 1.0)):
            raise ValueError("gaps must lie in (0, 1]")
        if noise and 1.25 * float(gaps.max()) >= 1.0:
            raise ValueError("gaps above 0.8 leave no room for the noisy base loss")
        self.gaps = gaps
        self.noise = bool(noise)
        self.seed = int(seed)
        self.k = gaps.size + 1

    def _generate(self, n: int) -> np.ndarray:
        out = np.empty((n, self.k))
        if not self.noise:
            out[:, 0] = 0.0
            out[:, 1:] = self.gaps
            return out
        u = _stream(self.seed).random((n, self.k))
        base = u[:, 0] * (1.0 - 1.25 * float(self.gaps.max()))
        out[:, 0] = base
        wobble = (u[:, 1:] - 0.5) * (0.5 * self.gaps)
        out[:, 1:] = np.clip(base[:, None] + self.gaps + wobble, 0.0, 1.0)
        return out


class FileReplayEnvironment(_Environment):
    """Replay a recorded loss sequence from a CSV file.

    The file must have a header row and one row per round with k loss columns.
    Out-of-range losses are rejected at load time rather than clipped: a
    silently clipped file would corrupt every bound check run against it.
    """

    kind = "file_replay"

    def __init__(self, path):
        super().__init__()
        with open(path, newline="") as handle:
            rows = list(csv.reader(handle))
        if len(rows) < 2:
            raise ValueError("expected a header row and at least one loss row")
        width = len(rows[0])
        if width < 2:
            raise ValueError("need loss columns for at least two arms")
        data = np.empty((len(rows) - 1, width))
        for lineno, row in enumerate(rows[1:], start=2):
            if len(row) != width:
                raise ValueError(f"line {lineno}: expected {width} columns")
            try:
                data[lineno - 2] = [float(cell) for cell in row]
            except ValueError as exc:
                raise ValueError(f"line {lineno}: non-numeric loss") from exc
        if np.any((data < 0.0) | (data > 1.0)):
            bad = int(np.argwhere((data < 0.0) | (data > 1.0))[0][0]) + 2
            raise ValueError(f"line {bad}: losses must lie in [0, 1]")
        self.k = width
        self.horizon = data.shape[0]
        self._data = data

    def _generate(self, n: int) -> np.ndarray:
        return self._data[:n].copy()


def make_environment(config: dict, seed: Optional[int] = None):
    """Build an environment from a JSON-style config mapping.

    ``seed`` overrides the config's seed; the harness uses this to give every
    replication its own derived stream.
    """
    if "kind" not in config:
        raise ValueError("environment config needs a 'kind' field")
    kind = config["kind"]
    params = {key: value for key, value in config.items() if key != "kind"}
    if seed is not None:
        params["seed"] = seed
    try:
        if kind == "stochastic_bernoulli":
            return BernoulliEnvironment(**params)
        if kind == "variance_adversary":
            params.pop("seed", None)  # deterministic
            return VarianceAdversary(**params)
        if kind == "linearly_separable":
            return LinearlySeparableEnvironment(**params)
        if kind == "file_replay":
            params.pop("seed", None)  # deterministic
            return FileReplayEnvironment(**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for environment kind {kind!r}: {exc}") from exc
    raise ValueError(f"unknown environment kind {kind!r}")
