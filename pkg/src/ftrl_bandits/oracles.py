"""Independent verification oracles.

The solver is checked against exhaustive search that never touches gradients:
a uniform grid over the box-floored simplex, re-centered and shrunk around the
incumbent until the requested resolution is reached.  Convexity of the
objective keeps the argmin inside the refined box (each level keeps a two-cell
margin), so the final point is a genuine global minimizer up to grid
resolution.
"""

from __future__ import annotations

import numpy as np

from .potentials import Potential

__all__ = ["grid_search_minimum"]


def _points_per_dim(k: int) -> int:
    if k == 2:
        return 41
    if k == 3:
        return 21
    return 9


def grid_search_minimum(
    cost,
    potential: Potential,
    eta: float,
    floor: float = 0.0,
    t: int = 1,
    final_step: float = 1e-7,
) -> np.ndarray:
    """Brute-force minimizer of <p, cost> + sum_i f_t(p_i) / eta over the
    floored simplex, to within ``final_step`` per coordinate.

    Scans the first k - 1 coordinates on a uniform grid (the last coordinate
    is pinned by the simplex constraint), evaluating objective values only.
    """
    cost = np.asarray(cost, dtype=np.float64)
    k = cost.size
    # the slack coordinate (pinned by the simplex constraint) must be the one
    # carrying the largest mass, i.e. the cheapest arm: tiny coordinates then
    # refine independently instead of having to exchange mass between two
    # already-narrowed boxes
    order = np.argsort(cost, kind="stable")
    slack = int(order[0])
    free_dims = [j for j in range(k) if j != slack]
    cost_perm = np.concatenate([cost[free_dims], cost[slack : slack + 1]])

    lo_bound = max(floor, 1e-12)
    hi_bound = 1.0 - (k - 1) * lo_bound
    grid_points = _points_per_dim(k)

    lo = np.full(k - 1, lo_bound)
    hi = np.full(k - 1, hi_bound)
    best = np.full(k, 1.0 / k)

    def objective(points: np.ndarray) -> np.ndarray:
        values = points @ cost_perm
        reg = np.zeros(points.shape[0])
        for j in range(k):
            col = points[:, j]
            if potential.kind == "negentropy":
                reg += col * (np.log(col) - 1.0)
            elif potential.kind == "tsallis_half":
                reg += -2.0 * np.sqrt(col)
            elif potential.kind == "log_barrier":
                reg += -np.log(col)
            else:
                reg += -2.0 * np.sqrt(col) - potential.barrier_weight(t) * np.log(col)
        return values + reg / eta

    for _ in range(200):
        axes = [np.linspace(lo[d], hi[d], grid_points) for d in range(k - 1)]
        mesh = np.meshgrid(*axes, indexing="ij")
        free = np.stack([m.ravel() for m in mesh], axis=1)
        last = 1.0 - free.sum(axis=1)
        feasible = last >= lo_bound - 1e-15
        if not feasible.any():
            # over-shrunk against the simplex face; widen back out
            lo = np.maximum(lo_bound, lo - (hi - lo))
            continue
        points = np.concatenate([free[feasible], last[feasible, None]], axis=1)
        np.clip(points, lo_bound, None, out=points)
        values = objective(points)
        best = points[int(np.argmin(values))]

        step = (hi - lo) / (grid_points - 1)
        if np.all(step <= final_step):
            break
        center = best[: k - 1]
        lo = np.maximum(lo_bound, center - 3.0 * step)
        hi = np.minimum(hi_bound, center + 3.0 * step)

    out = np.empty(k)
    out[free_dims] = best[: k - 1]
    out[slack] = best[k - 1]
    return out
