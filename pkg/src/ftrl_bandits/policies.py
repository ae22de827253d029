"""The policy catalogue.

Seven kinds, each a composition of regularizer, learning-rate schedule,
feasible set, and exploration rule:

* ``exp3_fixed``                negentropy, fixed rate, full simplex
* ``inf_fixed``                 square-root regularizer, fixed rate, full simplex
* ``logbarrier_fixed``          log barrier, fixed rate, full simplex
* ``hybrid_inf_anytime``        hybrid regularizer, adaptive rate, shrinking floor
* ``hybrid_inf_known_horizon``  hybrid frozen at a known horizon, adaptive rate
* ``explored_inf``              square-root regularizer, rate 1/sqrt(t), uniform mixing
* ``slow_explorer``             uniform play on a sampled slow-growth set, greedy otherwise

A policy object advances one round at a time: ``next_distribution`` returns
the sampling distribution for the current round, ``observe`` folds in the
incurred loss of the action that was actually played.  The distribution
kernels below operate on row batches; the batched replication runner calls
exactly the same kernels, so a batched run reproduces sequential runs bit for
bit.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .core import ProbabilityVector
from .potentials import (
    HYBRID,
    LOG_BARRIER,
    NEGENTROPY,
    TSALLIS_HALF,
    Potential,
    hessian_fn,
    tsallis_dual_gradient,
)
from .schedules import (
    AdaptiveRateState,
    adaptive_rate_update,
    chopped_floor,
    eta_zero_hybrid,
    eta_zero_known_horizon,
    inf_mixing_gamma,
    loglog_exploration_table,
    load_exploration_table_csv,
    sample_exploration_events,
    slow_set_breakpoints,
)
from .solver import solve_batch, solve_two_arm_batch

__all__ = [
    "POLICY_KINDS",
    "Exp3Fixed",
    "InfFixed",
    "LogBarrierFixed",
    "HybridInf",
    "ExploredInf",
    "SlowExplorer",
    "make_policy",
    "resolve_policy_config",
    "exp3_distribution",
    "tsallis_two_arm_distribution",
    "inf_premix_distribution",
    "hybrid_distribution",
    "pre_mixing_gap_margin",
    "first_order_regret_bound_anytime",
    "first_order_regret_bound_known_horizon",
    "minimax_regret_bound_anytime",
    "minimax_regret_bound_known_horizon",
]

POLICY_KINDS = (
    "exp3_fixed",
    "inf_fixed",
    "logbarrier_fixed",
    "hybrid_inf_anytime",
    "hybrid_inf_known_horizon",
    "explored_inf",
    "slow_explorer",
)


# ---------------------------------------------------------------------------
# distribution kernels (row-batched; shared with the replication runner)
# ---------------------------------------------------------------------------


def _rate_column(eta):
    eta = np.asarray(eta, dtype=np.float64)
    return eta[:, None] if eta.ndim == 1 else eta


def exp3_distribution(lhat: np.ndarray, eta) -> np.ndarray:
    """Softmax of the negated, rate-scaled cumulative estimates, rowwise."""
    z = lhat - lhat.min(axis=1, keepdims=True)
    w = np.exp(-_rate_column(eta) * z)
    return w / w.sum(axis=1, keepdims=True)


def tsallis_two_arm_distribution(lhat: np.ndarray, eta) -> np.ndarray:
    """Closed-form two-arm square-root FTRL on the full simplex, rowwise."""
    eta = np.asarray(eta, dtype=np.float64)
    p1 = np.asarray(tsallis_dual_gradient(eta * (lhat[:, 1] - lhat[:, 0])))
    return np.stack([p1, 1.0 - p1], axis=1)


def inf_premix_distribution(lhat: np.ndarray, eta) -> np.ndarray:
    """Square-root FTRL on the full simplex, rowwise (any k)."""
    if lhat.shape[1] == 2:
        return tsallis_two_arm_distribution(lhat, eta)
    p, _ = solve_batch(lhat, Potential(TSALLIS_HALF), eta, 0.0, 1)
    return p


def hybrid_distribution(
    lhat: np.ndarray, potential: Potential, eta, floor: float, t: int
) -> np.ndarray:
    """Hybrid-regularizer FTRL over the box-floored simplex, rowwise."""
    b, k = lhat.shape
    if floor * k >= 1.0 - 1e-12:
        return np.full((b, k), 1.0 / k)
    if k == 2:
        p1 = solve_two_arm_batch(potential, eta, lhat[:, 1] - lhat[:, 0], floor, t)
        return np.stack([p1, 1.0 - p1], axis=1)
    p, _ = solve_batch(lhat, potential, eta, floor, t)
    return p


def pre_mixing_gap_margin(ptilde: np.ndarray, lhat: np.ndarray, eta) -> np.ndarray:
    """How far each row is from violating the estimate-gap probability bound.

    Whenever an arm's cumulative estimate exceeds the first arm's, its
    pre-mixing probability must stay below 1 / (eta * gap)^2.  Returns the
    rowwise maximum of (probability - bound) over such arms, -inf when no arm
    trails; nonpositive means the bound holds.
    """
    eta = np.asarray(eta, dtype=np.float64)
    gaps = lhat[:, 1:] - lhat[:, 0:1]
    with np.errstate(divide="ignore"):
        bound = 1.0 / np.square(_rate_column(eta) * gaps)
    margin = np.where(gaps > 0.0, ptilde[:, 1:] - bound, -np.inf)
    return margin.max(axis=1)


# ---------------------------------------------------------------------------
# policy objects
# ---------------------------------------------------------------------------


class _RoundLockstep:
    """Shared round bookkeeping: pending distribution, counters, validation."""

    kind: str = ""

    def __init__(self, k: int):
        if k < 2:
            raise ValueError("need at least two arms")
        self.k = int(k)
        self.t = 1
        self.lhat = np.zeros(self.k)
        self.play_counts = np.zeros(self.k, dtype=np.int64)
        self._pending: Optional[np.ndarray] = None

    def _compute(self) -> np.ndarray:
        raise NotImplementedError

    def _floor_now(self) -> float:
        return 0.0

    def _after_observe(self, action: int, loss: float, dist: np.ndarray) -> None:
        """Kind-specific state update; the default is the importance-weighted one."""
        self.lhat[action] += loss / dist[action]

    def next_distribution(self) -> ProbabilityVector:
        """The sampling distribution for the current round (cached until observed)."""
        if self._pending is None:
            self._pending = self._compute()
        return ProbabilityVector(self._pending, floor=self._floor_now())

    def observe(self, action: int, loss: float) -> None:
        """Fold in the loss incurred by the action sampled this round."""
        if self._pending is None:
            raise RuntimeError(
                "observe called before next_distribution in the same round"
            )
        if not 0 <= action < self.k:
            raise ValueError("action out of range")
        if not 0.0 <= loss <= 1.0:
            raise ValueError("losses lie in [0, 1]")
        self._after_observe(action, loss, self._pending)
        self.play_counts[action] += 1
        self.t += 1
        self._pending = None


class Exp3Fixed(_RoundLockstep):
    """Negentropy FTRL with a fixed learning rate (softmax weights)."""

    kind = "exp3_fixed"

    def __init__(self, k: int, eta: float):
        super().__init__(k)
        if not eta > 0.0:
            raise ValueError("eta must be positive")
        self.eta = float(eta)

    def _compute(self):
        return exp3_distribution(self.lhat[None, :], self.eta)[0]


class InfFixed(_RoundLockstep):
    """Square-root-regularizer FTRL with a fixed learning rate."""

    kind = "inf_fixed"

    def __init__(self, k: int, eta: float):
        super().__init__(k)
        if not eta > 0.0:
            raise ValueError("eta must be positive")
        self.eta = float(eta)

    def _compute(self):
        return inf_premix_distribution(self.lhat[None, :], self.eta)[0]


class LogBarrierFixed(_RoundLockstep):
    """Log-barrier FTRL with a fixed learning rate."""

    kind = "logbarrier_fixed"

    def __init__(self, k: int, eta: float):
        super().__init__(k)
        if not eta > 0.0:
            raise ValueError("eta must be positive")
        self.eta = float(eta)

    def _compute(self):
        p, _ = solve_batch(self.lhat[None, :], Potential(LOG_BARRIER), self.eta, 0.0, 1)
        return p[0]


class HybridInf(_RoundLockstep):
    """Hybrid-regularizer FTRL with the adaptive rate and shrinking floor.

    With ``known_horizon`` set, the barrier weight and the floor are frozen at
    the horizon values and the tuned eta0 for that variant is used.
    """

    def __init__(
        self,
        k: int,
        q: float = 1.0,
        known_horizon: Optional[int] = None,
        eta0: Optional[float] = None,
    ):
        super().__init__(k)
        self.known_horizon = known_horizon
        if known_horizon is None:
            self.kind = "hybrid_inf_anytime"
            self.potential = Potential(HYBRID, q=q, arm_count=k)
            eta0 = eta_zero_hybrid(k, q) if eta0 is None else eta0
        else:
            self.kind = "hybrid_inf_known_horizon"
            self.potential = Potential(HYBRID, q=q, arm_count=k, known_horizon=known_horizon)
            eta0 = eta_zero_known_horizon(k) if eta0 is None else eta0
        self.rate_state = AdaptiveRateState(eta0)

    def _floor_now(self) -> float:
        return chopped_floor(self.t, self.k, self.known_horizon)

    def _compute(self):
        eta = self.rate_state.current_rate
        return hybrid_distribution(
            self.lhat[None, :],
            self.potential,
            np.asarray([eta]),
            self._floor_now(),
            self.t,
        )[0]

    def _after_observe(self, action, loss, dist):
        p = dist[action]
        self.lhat[action] += loss / p
        # the curvature is taken at the solved iterate of this round, before
        # any sampling; the rate implied by the new state starts next round
        hess = float(hessian_fn(self.potential, self.t)(p))
        self.rate_state = adaptive_rate_update(self.rate_state, loss, p, hess)


class ExploredInf(_RoundLockstep):
    """Square-root FTRL at rate sqrt(1/t) mixed with uniform exploration.

    The mixing weight follows ``inf_mixing_gamma``; estimates are importance
    weighted by the mixed (sampling) distribution.  The solved pre-mixing
    distribution and the rate are kept for the round so the estimate-gap bound
    can be audited.
    """

    kind = "explored_inf"

    def __init__(self, k: int):
        super().__init__(k)
        self.last_pre_mixing: Optional[np.ndarray] = None
        self.last_eta: float = math.nan
        self.last_gap_margin: float = -math.inf

    def _compute(self):
        eta = math.sqrt(1.0 / self.t)
        ptilde = inf_premix_distribution(self.lhat[None, :], np.asarray([eta]))
        gamma = inf_mixing_gamma(self.t)
        self.last_pre_mixing = ptilde[0]
        self.last_eta = eta
        self.last_gap_margin = float(
            pre_mixing_gap_margin(ptilde, self.lhat[None, :], np.asarray([eta]))[0]
        )
        return (1.0 - gamma) * ptilde[0] + gamma / self.k


class SlowExplorer(_RoundLockstep):
    """Uniform play on a sampled slow-growth exploration set, greedy otherwise.

    On exploration rounds the policy plays uniformly and stores the
    importance-weighted sample for that event's index.  On every other round
    it plays a point mass on the arm whose mean over the first f(t-1)
    exploration samples is smallest (ties to the lowest index); all those
    samples exist by construction of the first-hitting rounds.
    """

    kind = "slow_explorer"

    def __init__(self, k: int, f_table, schedule_seed: int):
        super().__init__(k)
        self.f_table = np.asarray(f_table, dtype=np.int64)
        self.events = sample_exploration_events(self.f_table, schedule_seed)
        self.breakpoints = slow_set_breakpoints(self.f_table)
        self._event_index = {int(r): j for j, r in enumerate(self.events)}
        self._samples = np.zeros((self.events.size, self.k))

    @property
    def exploration_rounds(self) -> np.ndarray:
        return np.sort(self.events)

    def exploit_arm(self, t: int) -> int:
        """The greedy arm a non-exploration round ``t`` >= 2 would play."""
        m = int(self.f_table[t - 2])
        theta = self._samples[:m].mean(axis=0)
        return int(np.argmin(theta))

    def _compute(self):
        if self.t > self.f_table.size:
            raise ValueError("round exceeds the tabulated exploration target")
        if self.t in self._event_index:
            return np.full(self.k, 1.0 / self.k)
        out = np.zeros(self.k)
        out[self.exploit_arm(self.t)] = 1.0
        return out

    def _after_observe(self, action, loss, dist):
        j = self._event_index.get(self.t)
        if j is not None:
            self._samples[j, :] = 0.0
            self._samples[j, action] = self.k * loss


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------


def resolve_policy_config(
    config: dict, horizon: Optional[int] = None, schedule_seed: Optional[int] = None
) -> dict:
    """Expand a JSON-style policy config into concrete constructor parameters.

    Horizon-coupled values are resolved here: ``"eta": "inv_sqrt_horizon"``
    becomes 1/sqrt(n), ``"known_horizon": "match"`` becomes n, and a slow
    explorer's ``"f": "loglog"`` becomes the tabulated target up to n.
    """
    if "kind" not in config:
        raise ValueError("policy config needs a 'kind' field")
    kind = config["kind"]
    if kind not in POLICY_KINDS:
        raise ValueError(f"unknown policy kind {kind!r}")
    out = dict(config)

    def need_horizon(field):
        if horizon is None:
            raise ValueError(f"policy field {field!r} needs a horizon to resolve")
        return horizon

    if out.get("eta") == "inv_sqrt_horizon":
        out["eta"] = 1.0 / math.sqrt(need_horizon("eta"))
    if out.get("known_horizon") == "match":
        out["known_horizon"] = need_horizon("known_horizon")
    if kind == "slow_explorer":
        f = out.get("f", "loglog")
        if isinstance(f, str) and f == "loglog":
            if "table_max" in out:
                table_max = int(out.pop("table_max"))
            else:
                table_max = need_horizon("f")
            out["f_table"] = loglog_exploration_table(table_max)
        elif isinstance(f, dict) and "csv" in f:
            out["f_table"] = load_exploration_table_csv(f["csv"])
        elif "f_table" not in out:
            out["f_table"] = np.asarray(f, dtype=np.int64)
        out.pop("f", None)
        if "schedule_seed" not in out:
            if schedule_seed is None:
                raise ValueError("slow_explorer needs a schedule_seed")
            out["schedule_seed"] = schedule_seed
    return out


def make_policy(
    config: dict, horizon: Optional[int] = None, schedule_seed: Optional[int] = None
):
    """Construct a policy object from a JSON-style config mapping."""
    cfg = resolve_policy_config(config, horizon, schedule_seed)
    kind = cfg.pop("kind")
    try:
        if kind == "exp3_fixed":
            return Exp3Fixed(**cfg)
        if kind == "inf_fixed":
            return InfFixed(**cfg)
        if kind == "logbarrier_fixed":
            return LogBarrierFixed(**cfg)
        if kind == "hybrid_inf_anytime":
            return HybridInf(**cfg)
        if kind == "hybrid_inf_known_horizon":
            if "known_horizon" not in cfg:
                raise ValueError("hybrid_inf_known_horizon needs 'known_horizon'")
            return HybridInf(**cfg)
        if kind == "explored_inf":
            return ExploredInf(**cfg)
        return SlowExplorer(**cfg)
    except TypeError as exc:
        raise ValueError(f"bad parameters for policy kind {kind!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# regret-bound formulas (acceptance ceilings)
# ---------------------------------------------------------------------------


def first_order_regret_bound_anytime(k: int, n: int, best_arm_loss: float) -> float:
    """First-order regret ceiling for the anytime hybrid policy at q = 1.

    Grows with the best arm's cumulative loss rather than the horizon; loose
    by design at desk scale, so Monte-Carlo means should sit far below it.
    """
    if n < 3:
        raise ValueError("the bound needs n >= 3")
    if best_arm_loss < 0.0:
        raise ValueError("a cumulative loss is nonnegative")
    log_n = math.log(n)
    inner = (
        k * best_arm_loss
        + 19.0 * k ** 3
        + 2.0 * k * k * log_n
        + 11.2 * k * k * log_n * log_n
    )
    return (
        19.0 * k * k
        + 22.0 * k * log_n * log_n
        + 2.0 * k * log_n
        + 6.5 * log_n * math.sqrt(inner)
    )


def first_order_regret_bound_known_horizon(k: int, n: int, best_arm_loss: float) -> float:
    """First-order regret ceiling for the known-horizon hybrid policy."""
    if n < 3:
        raise ValueError("the bound needs n >= 3")
    if best_arm_loss < 0.0:
        raise ValueError("a cumulative loss is nonnegative")
    log_n = math.log(n)
    return (
        k
        + 9.1 * k * log_n
        + 4.2
        * math.sqrt(
            k * best_arm_loss * log_n + 2.0 * math.sqrt(k) + 6.0 * k * k * log_n * log_n
        )
    )


def _second_branch_bound(h1: float, big_b: float, h2: float, c: float, n: int) -> float:
    """Worst-case branch of the generic adaptive-rate regret bound."""
    root_h1 = math.sqrt(h1)
    return (
        (root_h1 / 2 ** 1.25) * big_b
        + h2
        + 2 ** 1.75 * root_h1 * math.sqrt(1.0 + 0.5 * c * n)
    )


def minimax_regret_bound_anytime(k: int, n: int, q: float = 1.0) -> float:
    """Worst-case ceiling for the anytime hybrid policy.

    Divided by sqrt(k n) this approaches 2^{7/4} sqrt(13/3 + 3/q), about 9.11
    at q = 1; the companion to the first-order ceiling, which is the one that
    stays small when the best arm is cheap.
    """
    if n < 3:
        raise ValueError("the bound needs n >= 3")
    root_k = math.sqrt(k)
    log_n = math.log(n)
    h1 = root_k * (13.0 / 3.0 + 3.0 / q)
    big_b = root_k * log_n ** (1.0 + q)
    eta0 = eta_zero_hybrid(k, q)
    h2 = (
        2.0 * k * log_n
        + (5.5 * k / eta0) * math.sqrt(1.0 + 9.0 * k ** 1.5 * math.log(9.0 * k ** 1.5) ** (1.0 + q))
        + (4.1 * root_k / eta0) * math.sqrt(1.0 + 3.0 * root_k * math.log(3.0) ** (1.0 + q))
        + k
    )
    return _second_branch_bound(h1, big_b, h2, 2.0 * root_k, n)


def minimax_regret_bound_known_horizon(k: int, n: int) -> float:
    """Worst-case ceiling for the known-horizon hybrid policy.

    Divided by sqrt(k n) this approaches 2^{7/4} sqrt(3), about 5.83.
    """
    if n < 3:
        raise ValueError("the bound needs n >= 3")
    root_k = math.sqrt(k)
    log_n = math.log(n)
    return _second_branch_bound(3.0 * root_k, root_k * log_n, float(k), 2.0 * root_k, n)
