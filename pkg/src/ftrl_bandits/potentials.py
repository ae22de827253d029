"""Per-coordinate convex regularizers and their two-arm dual-gradient maps.

Four kinds are shipped:

* ``negentropy``      f(p) = p (log p - 1)
* ``tsallis_half``    f(p) = -2 sqrt(p)
* ``log_barrier``     f(p) = -log p
* ``hybrid``          f_t(p) = -2 sqrt(p) - c_t log p

The hybrid barrier weight decays with the round, c_t = 1 / (sqrt(k) *
log(max(3, t)) ** (1 + q)); with a known horizon n the weight is frozen at
1 / (sqrt(k) * log n) and q is ignored.  All four are strictly convex on (0, 1]
and, except for nothing relevant here, have a nonincreasing second derivative,
which the adaptive learning-rate accumulator relies on.

``TwoArmDualMap`` inverts the gradient of g(p) = f(p) + f(1 - p): it maps a
scaled cumulative-loss gap directly to the first arm's probability in two-arm
FTRL.  Closed forms are used wherever they are stable; the square-root kind
falls back to bisection near zero where its closed form cancels
catastrophically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

__all__ = [
    "NEGENTROPY",
    "TSALLIS_HALF",
    "LOG_BARRIER",
    "HYBRID",
    "POTENTIAL_KINDS",
    "Potential",
    "TwoArmDualMap",
    "tsallis_dual_gradient",
    "tsallis_tail_constant",
]

NEGENTROPY = "negentropy"
TSALLIS_HALF = "tsallis_half"
LOG_BARRIER = "log_barrier"
HYBRID = "hybrid"
POTENTIAL_KINDS = (NEGENTROPY, TSALLIS_HALF, LOG_BARRIER, HYBRID)

#: below this |x| the square-root closed form loses too many digits (its x^4
#: denominator cancels catastrophically); bisect instead.  Measured error of
#: the closed form at the cutoff is ~6e-14 and falls rapidly beyond it.
_TSALLIS_CLOSED_FORM_CUTOFF = 0.25


def _as_float_array(p):
    return np.asarray(p, dtype=np.float64)


def _maybe_scalar(arr, like):
    if np.isscalar(like) or np.ndim(like) == 0:
        return float(arr)
    return arr


@dataclass(frozen=True)
class Potential:
    """Descriptor of a per-coordinate regularizer.

    The descriptor is stateless: any round dependence enters lazily through the
    ``t`` argument of the evaluation methods.
    """

    kind: str
    q: float = 1.0
    arm_count: int = 2
    known_horizon: Optional[int] = None

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == HYBRID:
            if not self.q > 0.0:
                raise ValueError("hybrid exponent q must be positive")
            if self.arm_count < 2:
                raise ValueError("hybrid potential needs the arm count (k >= 2)")
            if self.known_horizon is not None and self.known_horizon < 3:
                raise ValueError("a known horizon must be at least 3")

    def barrier_weight(self, t: int = 1) -> float:
        """Weight of the log-barrier term at round ``t`` (0 for pure kinds)."""
        if self.kind != HYBRID:
            return 0.0
        if self.known_horizon is not None:
            return 1.0 / (math.sqrt(self.arm_count) * math.log(self.known_horizon))
        return 1.0 / (
            math.sqrt(self.arm_count) * math.log(max(3, t)) ** (1.0 + self.q)
        )

    def _check_domain(self, p: np.ndarray) -> None:
        if np.any(p <= 0.0):
            raise ValueError("p must be positive (Legendre domain)")
        if np.any(p > 1.0 + 1e-12):
            raise ValueError("p must not exceed 1")

    def value(self, p, t: int = 1):
        """f_t(p), elementwise over ``p`` in (0, 1]."""
        arr = _as_float_array(p)
        self._check_domain(arr)
        if self.kind == NEGENTROPY:
            out = arr * (np.log(arr) - 1.0)
        elif self.kind == TSALLIS_HALF:
            out = -2.0 * np.sqrt(arr)
        elif self.kind == LOG_BARRIER:
            out = -np.log(arr)
        else:
            out = -2.0 * np.sqrt(arr) - self.barrier_weight(t) * np.log(arr)
        return _maybe_scalar(out, p)

    def gradient(self, p, t: int = 1):
        """f_t'(p), strictly increasing on (0, 1]."""
        arr = _as_float_array(p)
        self._check_domain(arr)
        if self.kind == NEGENTROPY:
            out = np.log(arr)
        elif self.kind == TSALLIS_HALF:
            out = -1.0 / np.sqrt(arr)
        elif self.kind == LOG_BARRIER:
            out = -1.0 / arr
        else:
            out = -1.0 / np.sqrt(arr) - self.barrier_weight(t) / arr
        return _maybe_scalar(out, p)

    def hessian(self, p, t: int = 1):
        """f_t''(p) > 0; nonincreasing in p for every kind."""
        arr = _as_float_array(p)
        self._check_domain(arr)
        if self.kind == NEGENTROPY:
            out = 1.0 / arr
        elif self.kind == TSALLIS_HALF:
            out = 0.5 / (arr * np.sqrt(arr))
        elif self.kind == LOG_BARRIER:
            out = 1.0 / (arr * arr)
        else:
            out = 0.5 / (arr * np.sqrt(arr)) + self.barrier_weight(t) / (arr * arr)
        return _maybe_scalar(out, p)

    def gradient_inverse(self, y, t: int = 1):
        """Inverse of f_t' with the result clamped into (0, 1].

        Arguments above f_t'(1) map to 1, matching the upper box bound of the
        feasible sets the solver works with.  Every kind has an exact closed
        form, so no inner iteration is needed.
        """
        arr = _as_float_array(y)
        out = gradient_inverse_fn(self, t)(arr)
        return _maybe_scalar(out, y)


def gradient_fn(potential: Potential, t: int = 1):
    """Return a vectorized, validation-free closure computing f_t' for fixed ``t``.

    Solver inner loops evaluate the gradient tens of millions of times on
    points they construct inside (0, 1); skipping the domain checks there
    matters.
    """
    kind = potential.kind
    if kind == NEGENTROPY:
        return np.log
    if kind == TSALLIS_HALF:
        return lambda p: -1.0 / np.sqrt(p)
    if kind == LOG_BARRIER:
        return lambda p: -1.0 / p
    c = potential.barrier_weight(t)
    return lambda p: -1.0 / np.sqrt(p) - c / p


def hessian_fn(potential: Potential, t: int = 1):
    """Vectorized, validation-free closure computing f_t'' for fixed ``t``."""
    kind = potential.kind
    if kind == NEGENTROPY:
        return lambda p: 1.0 / p
    if kind == TSALLIS_HALF:
        return lambda p: 0.5 / (p * np.sqrt(p))
    if kind == LOG_BARRIER:
        return lambda p: 1.0 / (p * p)
    c = potential.barrier_weight(t)
    return lambda p: 0.5 / (p * np.sqrt(p)) + c / (p * p)


def gradient_inverse_fn(potential: Potential, t: int = 1):
    """Return a vectorized closure computing ``gradient_inverse`` for fixed ``t``.

    Hoisting the barrier weight out of the per-coordinate math keeps the solver
    inner loop allocation-light.
    """
    kind = potential.kind
    if kind == NEGENTROPY:
        return lambda y: np.exp(np.minimum(y, 0.0))
    if kind == TSALLIS_HALF:
        return lambda y: 1.0 / np.square(np.minimum(y, -1.0))
    if kind == LOG_BARRIER:
        return lambda y: -1.0 / np.minimum(y, -1.0)
    c = potential.barrier_weight(t)

    def inv(y):
        # positive root of c u^2 + u + y = 0 with u = 1/sqrt(p), in the
        # cancellation-free form -2y / (1 + sqrt(1 - 4cy))
        yc = np.minimum(y, -(1.0 + c))
        u = -2.0 * yc / (1.0 + np.sqrt(1.0 - 4.0 * c * yc))
        return 1.0 / np.square(u)

    return inv


def bisect_increasing(fn, target, lo, hi, iterations: int):
    """Vectorized bisection solving ``fn(p) = target`` for increasing ``fn``.

    Runs a fixed number of iterations so a batched call reproduces a scalar
    call bit for bit.  If the root lies outside [lo, hi] the nearer endpoint is
    returned, which is exactly the box-clamped solution.
    """
    target = _as_float_array(target)
    lo = np.full_like(target, lo, dtype=np.float64)
    hi = np.full_like(target, hi, dtype=np.float64)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        below = fn(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _tsallis_closed_form_nonpositive(x):
    """The explicit two-arm dual gradient of -2 sqrt(p) for x <= 0."""
    x2 = x * x
    inner = 2.0 * np.sqrt(1.0 + x2) - 2.0 - x2
    return 0.5 * (1.0 - np.sqrt(1.0 + 4.0 * inner / (x2 * x2)))


def _tsallis_gap_gradient(p):
    return 1.0 / np.sqrt(1.0 - p) - 1.0 / np.sqrt(p)


def tsallis_dual_gradient(x):
    """Two-arm dual gradient for the square-root regularizer, any finite x.

    Uses the closed form away from zero and bisection inside |x| < 1e-3 where
    the x^4 denominator cancels catastrophically; positive arguments go through
    the symmetry of g(p) = f(p) + f(1 - p).
    """
    arr = _as_float_array(x)
    ax = np.abs(arr)
    safe = np.maximum(ax, _TSALLIS_CLOSED_FORM_CUTOFF)
    low_branch = _tsallis_closed_form_nonpositive(-safe)
    closed = np.where(arr <= 0.0, low_branch, 1.0 - low_branch)
    small = ax < _TSALLIS_CLOSED_FORM_CUTOFF
    if np.any(small):
        bis = bisect_increasing(_tsallis_gap_gradient, arr, 0.25, 0.75, 60)
        closed = np.where(small, bis, closed)
    return _maybe_scalar(closed, x)


@dataclass(frozen=True)
class TwoArmDualMap:
    """Inverse gradient of g(p) = f_t(p) + f_t(1 - p) for a two-arm game.

    ``dual_gradient(x)`` is the unique minimizer of ``-x p + g(p)`` over [0, 1];
    in particular the first arm's FTRL probability is ``dual_gradient(eta *
    (second arm's cumulative estimate - first arm's))``.  The map is
    nondecreasing, satisfies ``dual_gradient(0) = 1/2``, and is symmetric:
    ``dual_gradient(x) + dual_gradient(-x) = 1``.
    """

    potential: Potential
    eta: float = 1.0
    round: int = 3

    def __post_init__(self):
        if not self.eta > 0.0:
            raise ValueError("learning rate must be positive")

    def gap_gradient(self, p):
        """g'(p) = f_t'(p) - f_t'(1 - p), strictly increasing on (0, 1)."""
        arr = _as_float_array(p)
        out = self.potential.gradient(arr, self.round) - self.potential.gradient(
            1.0 - arr, self.round
        )
        return _maybe_scalar(out, p)

    def dual_gradient(self, x):
        """The probability in (0, 1) with g'(p) = x."""
        arr = _as_float_array(x)
        kind = self.potential.kind
        if kind == NEGENTROPY:
            out = expit(arr)
        elif kind == LOG_BARRIER:
            # root of x p^2 + (2 - x) p - 1 = 0 in rationalized form
            out = 2.0 / (np.sqrt(arr * arr + 4.0) + 2.0 - arr)
        elif kind == TSALLIS_HALF:
            out = _as_float_array(tsallis_dual_gradient(arr))
        else:
            out = bisect_increasing(
                lambda p: self.gap_gradient(p), arr, 1e-18, 1.0 - 1e-12, 90
            )
        return _maybe_scalar(out, x)

    def probability_for_gap(self, gap):
        """First-arm probability given the cumulative-estimate gap (arm 2 - arm 1)."""
        return self.dual_gradient(self.eta * _as_float_array(gap))


def tsallis_tail_constant(a: float, n: int) -> float:
    """n times the square-root dual gradient at -a sqrt(n).

    As n grows this approaches 1 / a**2, which is the constant governing how
    slowly the square-root regularizer lets a trailing arm's probability decay.
    """
    if not a > 0.0:
        raise ValueError("a must be positive")
    if n < 1:
        raise ValueError("n must be at least 1")
    dual_map = TwoArmDualMap(Potential(TSALLIS_HALF))
    return n * float(dual_map.dual_gradient(-a * math.sqrt(n)))
