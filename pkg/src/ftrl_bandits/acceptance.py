"""The built-in acceptance suite.

Thirteen criteria cover the solver against brute force, the closed-form
cross-checks, Monte-Carlo reproductions of the first-order, variance, and
separation phenomena, and end-to-end determinism.  ``run_criteria`` executes
any subset and prints one pass/fail line per criterion; the ``verify`` CLI
subcommand and ``tests/test_acceptance.py`` both drive it.

Monte-Carlo criteria write their runs/summary CSV files into the output
directory, so a ``verify`` invocation leaves a complete, reproducible artifact
trail.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .core import EstimateVector
from .environments import make_environment
from .harness import ExperimentConfig, fit_loglog_slope, run_experiment
from .oracles import grid_search_minimum
from .policies import (
    first_order_regret_bound_anytime,
    first_order_regret_bound_known_horizon,
)
from .potentials import (
    HYBRID,
    LOG_BARRIER,
    NEGENTROPY,
    POTENTIAL_KINDS,
    TSALLIS_HALF,
    Potential,
    TwoArmDualMap,
    tsallis_tail_constant,
)
from .runner import simulate_replications
from .schedules import check_sqrt_sum_inequality, loglog_exploration_table
from .solver import FtrlProblem, solve, solve_two_arm_unconstrained

__all__ = ["CriterionResult", "run_criteria", "CRITERIA"]

_MASTER = 20_260_811  # master seed of every Monte-Carlo criterion
_ALPHA_GRID = tuple(round(0.05 * i, 2) for i in range(1, 11))
_VARIANCE_HORIZONS = (2 ** 8, 2 ** 10, 2 ** 12, 2 ** 14)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    status: str  # PASS | FAIL | INFO
    detail: str

    @property
    def line(self) -> str:
        return f"[{self.status}] criterion {self.number:2d} ({self.name}): {self.detail}"


def _result(number: int, name: str, ok: bool, detail: str, informational: bool = False):
    if ok:
        status = "PASS"
    else:
        status = "INFO" if informational else "FAIL"
    return CriterionResult(number, name, status, detail)


# ---------------------------------------------------------------------------
# 1-3: solver and dual-map oracles
# ---------------------------------------------------------------------------


def criterion_01_solver_oracle(out_dir: str) -> CriterionResult:
    """500 random subproblems match multilevel grid search; KKT residuals tiny."""
    rng = np.random.default_rng(101)
    worst_coord = 0.0
    worst_kkt = 0.0
    for i in range(500):
        k = int(rng.choice([2, 3, 5]))
        kind = POTENTIAL_KINDS[i % 4]
        pot = Potential(kind, q=1.0, arm_count=k)
        cost = rng.uniform(0.0, 50.0, k)
        eta = float(rng.uniform(0.01, 2.0))
        floor = float(rng.choice([0.0, 0.01, 1.0 / (2 * k)]))
        t = int(rng.integers(1, 1000))
        p, cert = solve(FtrlProblem(EstimateVector(cost), pot, eta, floor, t))
        reference = grid_search_minimum(cost, pot, eta, floor, t)
        worst_coord = max(worst_coord, float(np.abs(p.entries - reference).max()))
        worst_kkt = max(worst_kkt, cert.stationarity_residual)
    ok = worst_coord <= 1e-5 and worst_kkt <= 1e-8
    return _result(
        1,
        "solver-grid-oracle",
        ok,
        f"max coordinate gap {worst_coord:.2e} (tol 1e-5), "
        f"max KKT residual {worst_kkt:.2e} (tol 1e-8) over 500 problems",
    )


def criterion_02_closed_forms(out_dir: str) -> CriterionResult:
    """Softmax, two-arm dual-map agreement, and the half point."""
    rng = np.random.default_rng(102)
    worst_softmax = 0.0
    for _ in range(200):
        k = int(rng.choice([2, 3, 5]))
        cost = rng.uniform(0.0, 50.0, k)
        eta = float(rng.uniform(0.01, 2.0))
        p, _ = solve(FtrlProblem(EstimateVector(cost), Potential(NEGENTROPY), eta))
        w = np.exp(-eta * (cost - cost.min()))
        worst_softmax = max(worst_softmax, float(np.abs(p.entries - w / w.sum()).max()))

    worst_two_arm = 0.0
    pot = Potential(TSALLIS_HALF)
    dual = TwoArmDualMap(pot)
    for _ in range(1000):
        gap = float(rng.uniform(-50.0, 50.0))
        eta = float(rng.uniform(0.05, 2.0))
        cost = np.array([max(0.0, -gap), max(0.0, gap)])
        p, _ = solve(FtrlProblem(EstimateVector(cost), pot, eta))
        closed = float(dual.dual_gradient(eta * gap))
        worst_two_arm = max(worst_two_arm, abs(p.entries[0] - closed))

    worst_half = max(
        abs(float(TwoArmDualMap(Potential(kind, q=1.0, arm_count=2)).dual_gradient(0.0)) - 0.5)
        for kind in POTENTIAL_KINDS
    )
    ok = worst_softmax <= 1e-10 and worst_two_arm <= 1e-8 and worst_half <= 1e-12
    return _result(
        2,
        "closed-form-cross-checks",
        ok,
        f"softmax gap {worst_softmax:.2e} (1e-10), two-arm gap {worst_two_arm:.2e} "
        f"(1e-8), half-point gap {worst_half:.2e} (1e-12)",
    )


def criterion_03_tail_constant(out_dir: str) -> CriterionResult:
    """n times the square-root dual gradient at -a sqrt(n) approaches 1/a^2."""
    n = 10 ** 8
    worst_rel = 0.0
    for a in (0.5, 1.0, 2.0):
        value = tsallis_tail_constant(a, n)
        worst_rel = max(worst_rel, abs(value - 1.0 / a ** 2) * a ** 2)
    ok = worst_rel <= 0.10
    return _result(
        3,
        "tail-constant-identity",
        ok,
        f"max relative gap to 1/a^2 at n=1e8 is {worst_rel:.4f} (tol 0.10)",
    )


# ---------------------------------------------------------------------------
# 4-6: first-order behaviour of the hybrid policies
# ---------------------------------------------------------------------------

_BERNOULLI_MEANS = {2: [0.4, 0.6], 5: [0.4, 0.5, 0.55, 0.6, 0.65]}


def _first_order_grid(kind: str, out_dir: str, tag: str):
    rows = []
    for k, means in _BERNOULLI_MEANS.items():
        policy = {"kind": kind, "k": k}
        if kind == "hybrid_inf_known_horizon":
            policy["known_horizon"] = "match"
        cfg = ExperimentConfig(
            policy=policy,
            environment={"kind": "stochastic_bernoulli", "means": means},
            horizons=(1000, 10000),
            replications=200,
            master_seed=_MASTER,
            output_prefix=os.path.join(out_dir, f"{tag}_k{k}"),
        )
        summary = run_experiment(cfg)
        for row in summary.rows:
            rows.append((k, row))
    return rows


def criterion_04_first_order_containment(out_dir: str) -> CriterionResult:
    """Mean regret sits below the first-order ceiling at every grid point."""
    rows = _first_order_grid("hybrid_inf_anytime", out_dir, "c04_anytime")
    checks = []
    for k, row in rows:
        bound = first_order_regret_bound_anytime(k, row.n, row.mean_best_arm_loss)
        checks.append((k, row.n, row.mean_regret, bound, row.mean_regret <= bound))
    ok = all(c[-1] for c in checks)
    detail = "; ".join(f"k={k} n={n}: {m:.1f} <= {b:.0f}" for k, n, m, b, _ in checks)
    return _result(4, "first-order-containment-anytime", ok, detail)


def criterion_05_first_order_known_horizon(out_dir: str) -> CriterionResult:
    rows = _first_order_grid("hybrid_inf_known_horizon", out_dir, "c05_known")
    checks = []
    for k, row in rows:
        bound = first_order_regret_bound_known_horizon(k, row.n, row.mean_best_arm_loss)
        checks.append((k, row.n, row.mean_regret, bound, row.mean_regret <= bound))
    ok = all(c[-1] for c in checks)
    detail = "; ".join(f"k={k} n={n}: {m:.1f} <= {b:.0f}" for k, n, m, b, _ in checks)
    return _result(5, "first-order-containment-known-horizon", ok, detail)


def criterion_06_first_order_scaling(out_dir: str) -> CriterionResult:
    """A cheap best arm should cut regret well below the expensive-arm run."""
    means = {}
    for mu in (0.05, 0.5):
        cfg = ExperimentConfig(
            policy={"kind": "hybrid_inf_anytime", "k": 2},
            environment={"kind": "stochastic_bernoulli", "means": [mu, mu + 0.2]},
            horizons=(10000,),
            replications=500,
            master_seed=_MASTER,
            output_prefix=os.path.join(out_dir, f"c06_mu{mu}"),
        )
        means[mu] = run_experiment(cfg).rows[0].mean_regret
    ratio = means[0.05] / means[0.5]
    ok = ratio <= 0.6
    return _result(
        6,
        "first-order-scaling",
        ok,
        f"mean regret {means[0.05]:.1f} (mu=0.05) vs {means[0.5]:.1f} (mu=0.5), "
        f"ratio {ratio:.3f} (tol 0.6)",
    )


# ---------------------------------------------------------------------------
# 7-8: regret variance on the two-phase adversary
# ---------------------------------------------------------------------------


def _adversary_sweep(policy_kind: str, out_dir: str, tag: str, replications: int = 2000):
    """Per-alpha variance and tail statistics over the horizon grid."""
    stats = {}
    for alpha in _ALPHA_GRID:
        cfg = ExperimentConfig(
            policy={"kind": policy_kind, "k": 2}
            if policy_kind.startswith("hybrid")
            else {"kind": policy_kind, "k": 2, "eta": "inv_sqrt_horizon"},
            environment={"kind": "variance_adversary", "alpha": alpha, "horizon": "match"},
            horizons=_VARIANCE_HORIZONS,
            replications=replications,
            master_seed=_MASTER,
            output_prefix=os.path.join(out_dir, f"{tag}_alpha{int(round(alpha * 100)):03d}"),
        )
        summary = run_experiment(cfg)
        stats[alpha] = summary.rows
    return stats


def _variance_slope(rows) -> Optional[float]:
    pairs = [(row.n, row.var_regret) for row in rows]
    if any(v <= 0.0 for _, v in pairs):
        return None
    return fit_loglog_slope(pairs)


def criterion_07_quadratic_variance(out_dir: str) -> CriterionResult:
    """Fixed-rate policies show quadratic regret variance and a constant tail."""
    details = []
    ok = True
    for policy_kind in ("inf_fixed", "exp3_fixed"):
        stats = _adversary_sweep(policy_kind, out_dir, f"c07_{policy_kind}")
        # best alpha: the one whose worst-horizon tail probability is largest,
        # breaking ties toward the steeper variance growth
        def score(alpha):
            rows = stats[alpha]
            slope = _variance_slope(rows)
            return (min(r.tail_prob for r in rows), -1.0 if slope is None else slope)

        best_alpha = max(_ALPHA_GRID, key=score)
        rows = stats[best_alpha]
        slope = _variance_slope(rows)
        min_tail = min(r.tail_prob for r in rows)
        good = slope is not None and slope >= 1.7 and min_tail >= 0.01
        ok = ok and good
        details.append(
            f"{policy_kind}: alpha*={best_alpha:.2f}, var slope "
            f"{float('nan') if slope is None else slope:.2f} (>=1.7), "
            f"min tail {min_tail:.3f} (>=0.01)"
        )
    return _result(7, "quadratic-variance", ok, "; ".join(details))


def criterion_08_variance_contrast(out_dir: str) -> CriterionResult:
    """The adaptive hybrid policy's variance growth stays subquadratic.

    Informational: nothing is proven about this contrast, so a miss is
    reported but does not fail the suite.
    """
    stats = _adversary_sweep("hybrid_inf_anytime", out_dir, "c08_hybrid")
    slopes = {}
    for alpha, rows in stats.items():
        slope = _variance_slope(rows)
        if slope is not None:
            slopes[alpha] = slope
    worst_alpha = max(slopes, key=lambda a: slopes[a])
    worst = slopes[worst_alpha]
    ok = worst <= 1.3
    return _result(
        8,
        "variance-contrast",
        ok,
        f"max var slope over alphas {worst:.2f} at alpha={worst_alpha:.2f} (target <=1.3)",
        informational=True,
    )


# ---------------------------------------------------------------------------
# 9-12: inequalities and asymptotic-regime reproductions
# ---------------------------------------------------------------------------


def criterion_09_sqrt_sum_fuzz(out_dir: str) -> CriterionResult:
    rng = np.random.default_rng(109)
    failures = 0
    for i in range(10_000):
        bound = (0.5, 1.0, 10.0)[i % 3]
        length = int(rng.integers(1, 1001))
        x = rng.uniform(0.0, bound, length)
        if not check_sqrt_sum_inequality(x, bound):
            failures += 1
    return _result(
        9,
        "sqrt-sum-inequality-fuzz",
        failures == 0,
        f"{failures} violations in 10000 random sequences",
    )


def criterion_10_gap_bound_margin(out_dir: str) -> CriterionResult:
    """The pre-mixing probability bound holds at every audited round."""
    worst = -math.inf
    runs = 0
    grids = [
        ({"kind": "variance_adversary", "alpha": 0.3, "horizon": "match"}, 1024, 200),
        ({"kind": "stochastic_bernoulli", "means": [0.2, 0.5, 0.8]}, 1000, 100),
        ({"kind": "linearly_separable", "gaps": [0.3], "noise": True}, 2000, 100),
    ]
    for env, n, reps in grids:
        k = len(env.get("means", env.get("gaps", [0]))) + (1 if env["kind"] == "linearly_separable" else 0)
        k = 2 if env["kind"] == "variance_adversary" else k
        records = simulate_replications(
            {"kind": "explored_inf", "k": k}, env, n, _MASTER, reps
        )
        for record in records:
            worst = max(worst, record.extras["gap_bound_margin"])
            runs += 1
    ok = worst <= 1e-9
    return _result(
        10,
        "pre-mixing-gap-bound",
        ok,
        f"max margin {worst:.2e} over {runs} runs, every round audited (tol 1e-9)",
    )


def criterion_11_separable_regime(out_dir: str) -> CriterionResult:
    """Uniform-mixed square-root FTRL reaches polylog regret under separation."""
    cfg = ExperimentConfig(
        policy={"kind": "explored_inf", "k": 2},
        environment={"kind": "linearly_separable", "gaps": [0.3], "noise": True},
        horizons=(1000, 10000, 100000),
        replications=200,
        master_seed=_MASTER,
        output_prefix=os.path.join(out_dir, "c11_separable"),
    )
    summary = run_experiment(cfg)
    ratios = [
        row.mean_regret / (math.log(row.n) ** 2 * math.log(math.log(row.n)))
        for row in summary.rows
    ]
    nonincreasing = all(b <= a * 1.2 for a, b in zip(ratios, ratios[1:]))
    final_ok = summary.rows[-1].mean_regret <= 0.2 * math.sqrt(2 * 100000)
    ok = nonincreasing and final_ok
    return _result(
        11,
        "separable-regime",
        ok,
        f"ratios {', '.join(f'{r:.3f}' for r in ratios)} (20% slack), final mean "
        f"{summary.rows[-1].mean_regret:.1f} <= {0.2 * math.sqrt(2 * 100000):.1f}",
    )


def criterion_12_slow_explorer(out_dir: str) -> CriterionResult:
    """Regret decomposes into the exploration count plus the wrong-leader span."""
    n, seeds = 10 ** 6, 100
    f_n = int(loglog_exploration_table(n)[-1])
    with warnings.catch_warnings():
        # the tabulated range is too short to certify the double-sum growth
        # condition; expected here and not what this criterion measures
        warnings.simplefilter("ignore", UserWarning)
        records = simulate_replications(
            {"kind": "slow_explorer", "k": 2},
            {"kind": "linearly_separable", "gaps": [0.3], "noise": True},
            n,
            _MASTER,
            seeds,
        )
    decompose_ok = sum(
        r.random_regret <= 3.0 * f_n + r.extras["kappa"] for r in records
    )
    density_ok = sum(r.extras["exploration_rounds"] <= 2.0 * f_n for r in records)
    ok = decompose_ok >= 0.9 * seeds and density_ok >= 0.95 * seeds
    return _result(
        12,
        "slow-explorer",
        ok,
        f"regret <= 3 f(n) + kappa in {decompose_ok}/{seeds} seeds (>=90), "
        f"|E| <= 2 f(n) in {density_ok}/{seeds} seeds (>=95), f(n)={f_n}",
    )


# ---------------------------------------------------------------------------
# 13: determinism
# ---------------------------------------------------------------------------


def criterion_13_determinism(out_dir: str) -> CriterionResult:
    """Re-running the verify pipeline's probe configs reproduces CSVs byte for byte."""
    probes = [
        (
            "det_hybrid",
            {"kind": "hybrid_inf_anytime", "k": 3},
            {"kind": "stochastic_bernoulli", "means": [0.3, 0.5, 0.7]},
            (50, 100),
        ),
        (
            "det_exp3",
            {"kind": "exp3_fixed", "k": 2, "eta": "inv_sqrt_horizon"},
            {"kind": "variance_adversary", "alpha": 0.25, "horizon": "match"},
            (64, 128),
        ),
    ]
    identical = True
    for tag, policy, env, horizons in probes:
        blobs = []
        for attempt in ("a", "b"):
            prefix = os.path.join(out_dir, f"c13_{tag}_{attempt}")
            cfg = ExperimentConfig(
                policy=policy,
                environment=env,
                horizons=horizons,
                replications=20,
                master_seed=_MASTER,
                output_prefix=prefix,
            )
            run_experiment(cfg)
            with open(f"{prefix}_runs.csv", "rb") as runs_file:
                runs = runs_file.read()
            with open(f"{prefix}_summary.csv", "rb") as summary_file:
                summary = summary_file.read()
            blobs.append((runs, summary))
        identical = identical and blobs[0] == blobs[1]
    return _result(
        13,
        "determinism",
        identical,
        "rerun CSVs byte-identical for both probe configs"
        if identical
        else "rerun CSVs differ",
    )


CRITERIA: Sequence[Callable[[str], CriterionResult]] = (
    criterion_01_solver_oracle,
    criterion_02_closed_forms,
    criterion_03_tail_constant,
    criterion_04_first_order_containment,
    criterion_05_first_order_known_horizon,
    criterion_06_first_order_scaling,
    criterion_07_quadratic_variance,
    criterion_08_variance_contrast,
    criterion_09_sqrt_sum_fuzz,
    criterion_10_gap_bound_margin,
    criterion_11_separable_regime,
    criterion_12_slow_explorer,
    criterion_13_determinism,
)


def run_criteria(
    out_dir: str,
    numbers: Optional[Iterable[int]] = None,
    echo: Optional[Callable[[str], None]] = print,
) -> list[CriterionResult]:
    """Run the selected criteria (all by default), printing one line each."""
    os.makedirs(out_dir, exist_ok=True)
    wanted = set(numbers) if numbers is not None else set(range(1, len(CRITERIA) + 1))
    results = []
    for index, criterion in enumerate(CRITERIA, start=1):
        if index not in wanted:
            continue
        result = criterion(out_dir)
        results.append(result)
        if echo is not None:
            echo(result.line)
    return results
