"""Solver correctness: closed forms, the grid oracle, KKT certificates."""

import math

import numpy as np
import pytest

from ftrl_bandits.core import EstimateVector
from ftrl_bandits.oracles import grid_search_minimum
from ftrl_bandits.potentials import (
    HYBRID,
    LOG_BARRIER,
    NEGENTROPY,
    TSALLIS_HALF,
    Potential,
    TwoArmDualMap,
)
from ftrl_bandits.solver import (
    FtrlProblem,
    solve,
    solve_batch,
    solve_two_arm_batch,
    solve_two_arm_unconstrained,
)

KINDS = [
    Potential(NEGENTROPY),
    Potential(TSALLIS_HALF),
    Potential(LOG_BARRIER),
    Potential(HYBRID, q=1.0, arm_count=3),
]


def _problem(cost, potential, eta, floor=0.0, t=1):
    return FtrlProblem(EstimateVector(np.asarray(cost, float)), potential, eta, floor, t)


class TestClosedFormAgreement:
    def test_zero_cost_gives_uniform(self):
        for pot in KINDS:
            p, cert = solve(_problem(np.zeros(4), Potential(pot.kind, arm_count=4), 0.8))
            np.testing.assert_allclose(p.entries, 0.25, atol=1e-12)
            assert cert.simplex_residual <= 1e-10

    def test_negentropy_equals_softmax(self):
        rng = np.random.default_rng(41)
        for _ in range(60):
            k = int(rng.choice([2, 3, 5]))
            cost = rng.uniform(0, 50, k)
            eta = float(rng.uniform(0.01, 2.0))
            p, _ = solve(_problem(cost, Potential(NEGENTROPY), eta))
            w = np.exp(-eta * (cost - cost.min()))
            np.testing.assert_allclose(p.entries, w / w.sum(), atol=1e-10)

    def test_exp3_two_arm_spec_point(self):
        p, _ = solve(_problem([0.0, math.log(2.0)], Potential(NEGENTROPY), 1.0))
        np.testing.assert_allclose(p.entries, [2.0 / 3.0, 1.0 / 3.0], atol=1e-10)

    def test_two_arm_matches_dual_map(self):
        rng = np.random.default_rng(42)
        for pot in KINDS:
            for _ in range(40):
                gap = float(rng.uniform(-40, 40))
                eta = float(rng.uniform(0.05, 2.0))
                cost = np.array([max(0.0, -gap), max(0.0, gap)])
                p, _ = solve(_problem(cost, pot, eta, t=3))
                direct = solve_two_arm_unconstrained(pot, eta, gap)
                assert p.entries[0] == pytest.approx(direct, abs=1e-8)

    def test_two_arm_batch_matches_general(self):
        rng = np.random.default_rng(43)
        pot = Potential(HYBRID, q=1.0, arm_count=2)
        gaps = rng.uniform(-30, 30, 50)
        etas = rng.uniform(0.05, 1.5, 50)
        floor = 0.02
        p1 = solve_two_arm_batch(pot, etas, gaps, floor, t=9)
        for i in range(50):
            cost = np.array([max(0.0, -gaps[i]), max(0.0, gaps[i])])
            full, _ = solve(_problem(cost, pot, float(etas[i]), floor, t=9))
            assert p1[i] == pytest.approx(full.entries[0], abs=1e-8)

    def test_dual_map_zero_point(self):
        assert solve_two_arm_unconstrained(Potential(TSALLIS_HALF), 0.7, 0.0) == pytest.approx(
            0.5, abs=1e-12
        )


class TestGridOracle:
    def test_spec_example_hybrid_k3(self):
        # exhaustive two-stage search over the constrained simplex
        pot = Potential(HYBRID, q=1.0, arm_count=3)
        cost = np.array([0.0, 1.0, 5.0])
        p, cert = solve(_problem(cost, pot, 0.3, floor=0.05, t=10))
        oracle = grid_search_minimum(cost, pot, 0.3, floor=0.05, t=10)
        np.testing.assert_allclose(p.entries, oracle, atol=1e-5)
        assert cert.stationarity_residual <= 1e-8

    def test_random_problems_against_oracle(self):
        rng = np.random.default_rng(44)
        for i in range(60):
            k = int(rng.choice([2, 3, 5]))
            pot = Potential(KINDS[i % 4].kind, q=1.0, arm_count=k)
            cost = rng.uniform(0, 50, k)
            eta = float(rng.uniform(0.01, 2.0))
            floor = float(rng.choice([0.0, 0.01, 1.0 / (2 * k)]))
            t = int(rng.integers(1, 500))
            p, cert = solve(_problem(cost, pot, eta, floor, t))
            oracle = grid_search_minimum(cost, pot, eta, floor, t)
            np.testing.assert_allclose(p.entries, oracle, atol=1e-5)
            assert cert.stationarity_residual <= 1e-8
            assert cert.complementarity_residual <= 1e-10
            assert cert.simplex_residual <= 1e-10


class TestStructuralProperties:
    def test_monotone_in_cost(self):
        rng = np.random.default_rng(45)
        for pot in KINDS:
            for _ in range(20):
                k = 3
                cost = rng.uniform(0, 10, k)
                eta = float(rng.uniform(0.05, 1.0))
                p0, _ = solve(_problem(cost, pot, eta, t=2))
                bumped = cost.copy()
                bumped[1] += rng.uniform(0.1, 5.0)
                p1, _ = solve(_problem(bumped, pot, eta, t=2))
                assert p1.entries[1] <= p0.entries[1] + 1e-9

    def test_floor_activation_under_huge_cost(self):
        for pot in KINDS:
            cost = np.array([0.0, 1.0, 1e6])
            p, cert = solve(_problem(cost, Potential(pot.kind, arm_count=3), 0.5, floor=0.01, t=4))
            assert p.entries[2] == pytest.approx(0.01, abs=1e-10)
            assert cert.stationarity_residual <= 1e-8

    def test_sum_and_floor_respected(self):
        rng = np.random.default_rng(46)
        for _ in range(50):
            k = int(rng.choice([2, 3, 5]))
            pot = Potential(str(rng.choice([p.kind for p in KINDS])), arm_count=k)
            floor = float(rng.choice([0.0, 0.01, 1.0 / (2 * k)]))
            p, cert = solve(
                _problem(rng.uniform(0, 50, k), pot, float(rng.uniform(0.01, 2.0)), floor)
            )
            assert abs(p.entries.sum() - 1.0) <= 1e-10
            assert np.all(p.entries >= floor - 1e-12)
            assert cert.simplex_residual <= 1e-10

    def test_full_floor_pins_uniform(self):
        pot = Potential(HYBRID, q=1.0, arm_count=4)
        p, _ = solve(_problem([3.0, 1.0, 0.5, 9.0], pot, 0.7, floor=0.25, t=1))
        np.testing.assert_allclose(p.entries, 0.25, atol=0)

    def test_batch_equals_sequential_bitwise(self):
        rng = np.random.default_rng(47)
        costs = rng.uniform(0, 20, (30, 4))
        etas = rng.uniform(0.05, 1.5, 30)
        pot = Potential(HYBRID, q=1.0, arm_count=4)
        batch_p, batch_lam = solve_batch(costs, pot, etas, 0.01, 6)
        for i in range(30):
            single_p, single_lam = solve_batch(costs[i : i + 1], pot, etas[i], 0.01, 6)
            assert np.array_equal(batch_p[i], single_p[0])
            assert batch_lam[i] == single_lam[0]

    def test_huge_cumulative_costs_stay_conditioned(self):
        # shifting by the minimum keeps the multiplier O(1/eta) even when the
        # estimates have grown enormous
        pot = Potential(TSALLIS_HALF)
        cost = np.array([3.0e8, 3.0e8 + 2.0, 3.0e8 + 50.0])
        p, cert = solve(_problem(cost, pot, 0.5))
        assert cert.simplex_residual <= 1e-12
        assert cert.stationarity_residual <= 1e-8
        reference, _ = solve(_problem(cost - 3.0e8, pot, 0.5))
        np.testing.assert_allclose(p.entries, reference.entries, atol=1e-9)


class TestValidation:
    def test_infeasible_floor_rejected(self):
        with pytest.raises(ValueError):
            _problem([0.0, 1.0], Potential(TSALLIS_HALF), 1.0, floor=0.6)

    def test_nonpositive_rate_rejected(self):
        with pytest.raises(ValueError):
            _problem([0.0, 1.0], Potential(TSALLIS_HALF), 0.0)

    def test_certificate_rejects_negative_residuals(self):
        from ftrl_bandits.solver import KktCertificate

        with pytest.raises(ValueError):
            KktCertificate(0.0, -1e-3, 0.0, 0.0)
