"""Learning-rate and exploration schedules.

Covers the data-dependent learning rate eta_t = eta0 / sqrt(1 + A_{t-1}) with
accumulator A_t = sum_{s<=t} (incurred loss)^2 / (prob^2 * f_s''(prob)), the
tuned eta0 constants for the hybrid regularizer, the shrinking box floor of
the chopped simplex, the log(t) loglog(t) / t mixing rate, and the sampled
slow-growth exploration sets used by the almost-sure slow-regret policy.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "AdaptiveRateState",
    "ExplorationSchedule",
    "adaptive_rate_update",
    "adaptive_rate_increment",
    "eta_zero_hybrid",
    "eta_zero_known_horizon",
    "chopped_floor",
    "inf_mixing_gamma",
    "loglog_exploration_table",
    "load_exploration_table_csv",
    "slow_set_breakpoints",
    "sample_exploration_events",
    "slow_set_schedule",
    "check_sqrt_sum_inequality",
]


@dataclass(frozen=True)
class AdaptiveRateState:
    """Running state of the data-dependent learning rate.

    ``accumulator`` is the sum so far of squared estimated losses weighted by
    the inverse regularizer curvature at the played coordinate.  It never
    decreases, so the current rate never increases within a run.
    """

    eta0: float
    accumulator: float = 0.0

    def __post_init__(self):
        if not self.eta0 > 0.0:
            raise ValueError("eta0 must be positive")
        if self.accumulator < 0.0:
            raise ValueError("accumulator is a sum of nonnegative terms")

    @property
    def current_rate(self) -> float:
        """The rate to use for the upcoming round (depends on past rounds only)."""
        return self.eta0 / math.sqrt(1.0 + self.accumulator)


def adaptive_rate_increment(incurred_loss, prob, hessian):
    """The accumulator increment loss^2 / (prob^2 * hessian), vectorized."""
    return (incurred_loss * incurred_loss) / ((prob * prob) * hessian)


def adaptive_rate_update(
    state: AdaptiveRateState, incurred_loss: float, prob: float, hessian: float
) -> AdaptiveRateState:
    """Fold one observed round into the rate state and return the new state.

    The rate implied by the returned state applies from the next round onward;
    the round just observed was played at ``state.current_rate``.
    """
    if not 0.0 <= incurred_loss <= 1.0:
        raise ValueError("incurred loss must lie in [0, 1]")
    if not prob > 0.0:
        raise ValueError("played coordinate must have positive probability")
    if not hessian > 0.0:
        raise ValueError("hessian must be positive")
    inc = float(adaptive_rate_increment(incurred_loss, prob, hessian))
    return AdaptiveRateState(state.eta0, state.accumulator + inc)


def eta_zero_hybrid(k: int, q: float) -> float:
    """Tuned initial rate for the hybrid regularizer without a known horizon."""
    if k < 2:
        raise ValueError("need at least two arms")
    if not q > 0.0:
        raise ValueError("q must be positive")
    root2 = math.sqrt(2.0)
    return k ** 0.25 * math.sqrt(13.0 / (3.0 * root2) + 3.0 / (root2 * q))


def eta_zero_known_horizon(k: int) -> float:
    """Tuned initial rate for the hybrid regularizer with a known horizon."""
    if k < 2:
        raise ValueError("need at least two arms")
    return k ** 0.25 * math.sqrt(3.0) / 2 ** 0.25


def chopped_floor(t: int, k: int, known_horizon: Optional[int] = None) -> float:
    """Box lower bound of the feasible set at round ``t``.

    The nominal floor 1/t leaves an empty feasible set for t < k, so the floor
    is capped at 1/k, which keeps the uniform vector feasible, preserves the
    nesting of the feasible sets, and agrees with 1/t from t = k onward.  With
    a known horizon the floor is the constant min(1/n, 1/k).
    """
    if t < 1:
        raise ValueError("round index starts at 1")
    if k < 2:
        raise ValueError("need at least two arms")
    if known_horizon is not None:
        if known_horizon < 1:
            raise ValueError("horizon must be positive")
        return min(1.0 / known_horizon, 1.0 / k)
    return min(1.0 / t, 1.0 / k)


def inf_mixing_gamma(t: int) -> float:
    """Uniform-mixing weight log(t) loglog(t) / t, clamped into (0, 1].

    The formula is undefined or nonpositive for t < 3 (loglog t <= 0), so the
    first two rounds use 1/2; any valid early mixing works, only the tail
    behaviour matters.
    """
    if t < 1:
        raise ValueError("round index starts at 1")
    if t < 3:
        return 0.5
    value = math.log(t) * math.log(math.log(t)) / t
    return min(1.0, max(value, np.nextafter(0.0, 1.0)))


def loglog_exploration_table(n_max: int) -> np.ndarray:
    """Tabulate f(n) = max(1, floor(log2 log2 n) + 1) for n = 1..n_max."""
    if n_max < 1:
        raise ValueError("n_max must be positive")
    n = np.arange(1, n_max + 1, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.floor(np.log2(np.log2(n))) + 1.0
    f = np.where(np.isfinite(f), f, 1.0)
    return np.maximum(f, 1.0).astype(np.int64)


def _validate_table(f_table: np.ndarray) -> np.ndarray:
    f = np.asarray(f_table)
    if f.ndim != 1 or f.size < 1:
        raise ValueError("the exploration table must be a nonempty 1-d sequence")
    if not np.issubdtype(f.dtype, np.integer):
        if not np.all(f == np.floor(f)):
            raise ValueError("exploration targets must be integers")
        f = f.astype(np.int64)
    if f[0] != 1:
        raise ValueError("the exploration target must start at f(1) = 1")
    steps = np.diff(f)
    if np.any(steps < 0):
        raise ValueError("the exploration target must be nondecreasing")
    if np.any(steps > 1):
        raise ValueError(
            "the exploration target must grow in unit steps so every level has "
            "a first-hitting round"
        )
    return f


def load_exploration_table_csv(path) -> np.ndarray:
    """Load a two-column (n, f(n)) CSV tabulating the exploration target.

    Rows must enumerate n = 1, 2, ... consecutively; the header row is
    required.  Validation is strict because a malformed target silently breaks
    the almost-sure regret guarantee.
    """
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    if len(rows) < 2:
        raise ValueError("expected a header row and at least one data row")
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise ValueError(f"line {lineno}: expected two columns (n, f(n))")
        try:
            n, f = int(row[0]), int(row[1])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: non-integer entry") from exc
        if n != lineno - 1:
            raise ValueError(f"line {lineno}: rounds must be consecutive from 1")
        values.append(f)
    return _validate_table(np.asarray(values, dtype=np.int64))


def slow_set_breakpoints(f_table) -> np.ndarray:
    """First-hitting rounds tau(m) = min{t : f(t) = m} for m = 1..max(f)."""
    f = _validate_table(f_table)
    m_max = int(f[-1])
    tau = np.empty(m_max, dtype=np.int64)
    for m in range(1, m_max + 1):
        tau[m - 1] = int(np.argmax(f >= m)) + 1
    return tau


def _check_double_sum_convergence(tau: np.ndarray) -> None:
    """Warn when the tabulated range cannot certify sum_m sum_{j>m} tau(m)/tau(j) < inf.

    The exact condition involves the untabulated tail, so only partial-sum
    stabilization can be checked: the partial sums up to level M must have
    stopped growing (relative increase below 1e-6) since level M // 10.
    """
    m = tau.size
    partial = np.zeros(m + 1)
    for j in range(2, m + 1):
        partial[j] = partial[j - 1] + float(tau[: j - 1].sum()) / float(tau[j - 1])
    total = partial[m]
    reference = partial[max(1, m // 10)]
    if total <= 0.0:
        return
    if (total - reference) / max(total, 1.0) >= 1e-6:
        warnings.warn(
            "the tabulated exploration target is too short to confirm that the "
            "double sum of first-hitting-round ratios converges; the almost-sure "
            "regret guarantee may not apply",
            stacklevel=3,
        )


def sample_exploration_events(f_table, master_seed: int) -> np.ndarray:
    """Sample the exploration rounds E_1, E_2, ... in event order.

    E_m is uniform on {1, ..., tau(m)} minus the earlier events, realized by
    rejection sampling (collisions are rare because the number of events is
    tiny compared to tau(m)).  Only levels whose first-hitting round lies in
    the tabulated range are sampled; later events land inside the table range
    with negligible probability when the growth condition holds.
    """
    f = _validate_table(f_table)
    tau = slow_set_breakpoints(f)
    _check_double_sum_convergence(tau)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(master_seed)))
    chosen: list[int] = []
    taken = set()
    for m in range(1, tau.size + 1):
        bound = int(tau[m - 1])
        while True:
            candidate = int(rng.integers(1, bound + 1))
            if candidate not in taken:
                break
        taken.add(candidate)
        chosen.append(candidate)
    return np.asarray(chosen, dtype=np.int64)


def slow_set_schedule(f_table, master_seed: int, horizon: int) -> np.ndarray:
    """The realized exploration set within the horizon, as a sorted array."""
    if horizon < 1:
        raise ValueError("horizon must be positive")
    events = sample_exploration_events(f_table, master_seed)
    return np.sort(events[events <= horizon])


@dataclass(frozen=True)
class ExplorationSchedule:
    """Descriptor for a policy's exploration behaviour.

    ``none`` means pure FTRL; ``inf_mixing`` mixes the FTRL iterate with the
    uniform distribution at rate ``inf_mixing_gamma``; ``slow_set`` explores
    uniformly exactly on a sampled slow-growth set of rounds.
    """

    kind: str
    f_table: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("none", "inf_mixing", "slow_set"):
            raise ValueError(f"unknown exploration schedule kind {self.kind!r}")
        if self.kind == "slow_set":
            if self.f_table is None:
                raise ValueError("slow_set needs a tabulated target f")
            object.__setattr__(self, "f_table", _validate_table(self.f_table))
        elif self.f_table is not None:
            raise ValueError("only slow_set takes a tabulated target")


def check_sqrt_sum_inequality(x: Sequence[float], bound: float) -> bool:
    """Check sum_t x_t / sqrt(1 + sum_{s<t} x_s) <= 4 sqrt(1 + sum_t x_t / 2) + B.

    Holds for every sequence with x_t in [0, B]; exists as a checkable
    predicate so the property can be fuzzed, and as the step that turns the
    rate accumulator into a regret term.
    """
    arr = np.asarray(x, dtype=np.float64)
    if not bound >= 0.0:
        raise ValueError("B must be nonnegative")
    if np.any((arr < 0.0) | (arr > bound)):
        raise ValueError("every term must lie in [0, B]")
    if arr.size == 0:
        return True
    prefix = np.concatenate(([0.0], np.cumsum(arr)[:-1]))
    lhs = float(np.sum(arr / np.sqrt(1.0 + prefix)))
    rhs = 4.0 * math.sqrt(1.0 + 0.5 * float(arr.sum())) + bound
    return lhs <= rhs
