"""Exact solution of the per-round FTRL subproblem over the box-floored simplex.

The problem is  minimize <p, cost> + (1/eta) * sum_i f_t(p_i)  subject to
sum_i p_i = 1 and floor <= p_i <= 1.  Separability makes the KKT system one
dimensional: for a simplex multiplier lam, each coordinate is the box-clamped
inverse gradient p_i(lam) = clip(f_t'^{-1}(eta * (lam - cost_i)), floor, 1),
and sum_i p_i(lam) is continuous and nondecreasing in lam.  An outer bisection
on lam therefore finds the unique solution; the inner inversion is closed form
for every shipped regularizer, so no inner iteration is needed.

Costs are shifted by their minimum before solving.  The shift leaves the
argmin unchanged but pins the multiplier at O(|f'(1)| / eta) no matter how
large the cumulative estimates grow, which keeps the bisection conditioned
well enough for the 1e-12 simplex tolerance.

All iterative loops run a fixed number of rounds, so solving a batch of
problems reproduces the one-at-a-time results bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EstimateVector, ProbabilityVector
from .potentials import Potential, TwoArmDualMap, gradient_fn, gradient_inverse_fn

__all__ = [
    "FtrlProblem",
    "KktCertificate",
    "solve",
    "solve_batch",
    "solve_two_arm_batch",
    "solve_two_arm_unconstrained",
]

#: fixed outer bisection depth; enough to resolve lam to machine precision
#: from any bracket the doubling stage can produce
_OUTER_ITERATIONS = 96
#: cap on bracket-doubling steps before declaring the inputs pathological
_MAX_BRACKET_DOUBLINGS = 200
#: fixed depth for the direct two-arm bisection on p in [floor, 1 - floor]
_TWO_ARM_ITERATIONS = 52


@dataclass(frozen=True)
class FtrlProblem:
    """One round's subproblem: cumulative estimates, regularizer, rate, floor."""

    cost: EstimateVector
    potential: Potential
    learning_rate: float
    floor: float = 0.0
    round: int = 1

    def __post_init__(self):
        if not self.learning_rate > 0.0:
            raise ValueError("learning rate must be positive")
        if self.floor < 0.0:
            raise ValueError("floor must be nonnegative")
        if self.floor * self.cost.k > 1.0 + 1e-12:
            raise ValueError(
                f"floor {self.floor} with {self.cost.k} arms leaves the feasible set empty"
            )
        if self.round < 1:
            raise ValueError("round index starts at 1")


@dataclass(frozen=True)
class KktCertificate:
    """Verifiable optimality evidence for a solved subproblem.

    Residuals are measured on the min-shifted problem, which is algebraically
    identical to the original but free of the float cancellation that large
    cumulative estimates would otherwise inject into the check itself.
    """

    multiplier: float
    stationarity_residual: float
    complementarity_residual: float
    simplex_residual: float

    def __post_init__(self):
        for name in ("stationarity_residual", "complementarity_residual", "simplex_residual"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")


def solve_batch(costs, potential: Potential, eta, floor: float = 0.0, t: int = 1):
    """Solve a batch of subproblems sharing the potential, floor and round.

    Parameters
    ----------
    costs : (B, k) array of nonnegative cumulative estimates.
    eta : scalar or (B,) array of learning rates.

    Returns
    -------
    p : (B, k) array of solutions.
    lam : (B,) array of simplex multipliers on the original cost scale.
    """
    costs = np.asarray(costs, dtype=np.float64)
    if costs.ndim != 2:
        raise ValueError("costs must be a (B, k) array")
    b, k = costs.shape
    eta = np.broadcast_to(np.asarray(eta, dtype=np.float64), (b,))
    if np.any(eta <= 0.0):
        raise ValueError("learning rates must be positive")
    if floor < 0.0 or floor * k > 1.0 + 1e-12:
        raise ValueError("infeasible floor")

    shift = costs.min(axis=1)
    if floor * k >= 1.0 - 1e-12:
        # the box pins the uniform vector; the multiplier below certifies it
        p = np.full((b, k), 1.0 / k)
        lam = shift + float(potential.gradient(1.0 / k, t)) / eta
        return p, lam

    c0 = costs - shift[:, None]
    inv = gradient_inverse_fn(potential, t)
    grad_unif = float(potential.gradient(1.0 / k, t))
    grad_one = float(potential.gradient(1.0, t))

    def total(lam):
        y = eta[:, None] * (lam[:, None] - c0)
        return np.clip(inv(y), floor, 1.0).sum(axis=1)

    # After min-shifting, the multiplier always lies in
    # [f'(1/k)/eta, f'(1)/eta]: some coordinate carries mass >= 1/k
    # (pigeonhole, giving the lower end), and the zero-shifted coordinate's
    # mass stays <= 1 (giving the upper end).  The bracket is independent of
    # how large the costs are, which caps the bisection depth.
    lo = grad_unif / eta - 1.0
    hi = grad_one / eta + 1.0
    # widen outward in per-element doubling steps if float slop ever breaks
    # the bracket (it should not; this is a guard)
    step = np.ones(b)
    for _ in range(_MAX_BRACKET_DOUBLINGS):
        bad = total(lo) > 1.0
        if not bad.any():
            break
        lo = np.where(bad, lo - step, lo)
        step = np.where(bad, 2.0 * step, step)
    else:
        raise RuntimeError("could not bracket the simplex multiplier from below")
    step = np.ones(b)
    for _ in range(_MAX_BRACKET_DOUBLINGS):
        bad = total(hi) < 1.0
        if not bad.any():
            break
        hi = np.where(bad, hi + step, hi)
        step = np.where(bad, 2.0 * step, step)
    else:
        raise RuntimeError("could not bracket the simplex multiplier from above")

    for _ in range(_OUTER_ITERATIONS):
        mid = 0.5 * (lo + hi)
        below = total(mid) < 1.0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)

    lam = 0.5 * (lo + hi)
    p = np.clip(inv(eta[:, None] * (lam[:, None] - c0)), floor, 1.0)
    return p, lam + shift


def solve(problem: FtrlProblem) -> tuple[ProbabilityVector, KktCertificate]:
    """Solve one subproblem and certify the result.

    The certificate reconstructs the floor multipliers from the stationarity
    defect: coordinates pinned at the floor carry mu_i = max(defect, 0), and
    the reported stationarity residual is what remains after removing them.
    """
    cost = problem.cost.entries
    k = cost.size
    eta = problem.learning_rate
    floor = problem.floor
    t = problem.round

    p_rows, lam_rows = solve_batch(cost[None, :], problem.potential, eta, floor, t)
    p = p_rows[0]
    lam = float(lam_rows[0])

    shift = float(cost.min())
    c0 = cost - shift
    lam0 = lam - shift
    defect = np.asarray(problem.potential.gradient(p, t)) / eta + c0 - lam0
    at_floor = p <= floor + 1e-9 if floor > 0.0 else np.zeros(k, dtype=bool)
    at_top = p >= 1.0 - 1e-9
    mu = np.where(at_floor, np.maximum(defect, 0.0), 0.0)
    nu = np.where(at_top, np.maximum(-defect, 0.0), 0.0)

    certificate = KktCertificate(
        multiplier=lam,
        stationarity_residual=float(np.max(np.abs(defect - mu + nu))),
        complementarity_residual=float(np.max(np.abs(mu * (p - floor)))),
        simplex_residual=abs(float(p.sum()) - 1.0),
    )
    return ProbabilityVector(p, floor=floor), certificate


def solve_two_arm_batch(potential: Potential, eta, gap, floor: float = 0.0, t: int = 1):
    """First-arm probabilities for a batch of two-arm subproblems.

    Solves g_t'(p) = eta * gap by bisection directly on p in [floor, 1 - floor],
    where gap is (second arm's cumulative estimate - first arm's).  With two
    arms the box-clamped root of the strictly increasing g_t' is exactly the
    constrained solution, so no simplex multiplier is needed.
    """
    target = np.asarray(
        np.asarray(eta, dtype=np.float64) * np.asarray(gap, dtype=np.float64),
        dtype=np.float64,
    )
    scalar = target.ndim == 0
    if scalar:
        target = target[None]
    lo = max(floor, 1e-18)
    grad = gradient_fn(potential, t)

    lo_arr = np.full_like(target, lo)
    hi_arr = np.full_like(target, 1.0 - lo)
    for _ in range(_TWO_ARM_ITERATIONS):
        mid = 0.5 * (lo_arr + hi_arr)
        below = grad(mid) - grad(1.0 - mid) < target
        lo_arr = np.where(below, mid, lo_arr)
        hi_arr = np.where(below, hi_arr, mid)
    p1 = 0.5 * (lo_arr + hi_arr)
    return float(p1[0]) if scalar else p1


def solve_two_arm_unconstrained(
    potential: Potential, eta: float, gap: float, round: int = 3
) -> float:
    """Closed two-arm solve on the full simplex via the dual-gradient map.

    Returns the first arm's probability for the given cumulative-estimate gap
    (second arm minus first); cross-checks the general solver on k = 2.
    """
    dual_map = TwoArmDualMap(potential, eta=eta, round=round)
    return float(dual_map.dual_gradient(eta * gap))
