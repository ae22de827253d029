"""Learning-rate and exploration schedule behaviour."""

import math

import mpmath
import numpy as np
import pytest

from ftrl_bandits.schedules import (
    AdaptiveRateState,
    ExplorationSchedule,
    adaptive_rate_update,
    check_sqrt_sum_inequality,
    chopped_floor,
    eta_zero_hybrid,
    eta_zero_known_horizon,
    inf_mixing_gamma,
    load_exploration_table_csv,
    loglog_exploration_table,
    sample_exploration_events,
    slow_set_breakpoints,
    slow_set_schedule,
)


class TestAdaptiveRate:
    def test_fresh_state_uses_eta_zero(self):
        state = AdaptiveRateState(eta0=1.7)
        assert state.current_rate == pytest.approx(1.7, abs=0)

    def test_increment_arithmetic(self):
        state = adaptive_rate_update(AdaptiveRateState(1.0), 1.0, 0.5, 4.0)
        assert state.accumulator == pytest.approx(1.0, abs=0)
        assert state.current_rate == pytest.approx(1.0 / math.sqrt(2.0))

    def test_rate_nonincreasing_over_updates(self):
        rng = np.random.default_rng(51)
        state = AdaptiveRateState(2.0)
        last = state.current_rate
        for _ in range(200):
            state = adaptive_rate_update(
                state,
                float(rng.uniform(0, 1)),
                float(rng.uniform(0.01, 1.0)),
                float(rng.uniform(0.1, 50.0)),
            )
            assert state.current_rate <= last
            last = state.current_rate

    def test_hybrid_increment_respects_curvature_cap(self):
        # with the hybrid regularizer each increment is at most
        # sqrt(k) log^{1+q} max(3, t)
        from ftrl_bandits.potentials import HYBRID, Potential

        rng = np.random.default_rng(52)
        k, q = 5, 1.0
        pot = Potential(HYBRID, q=q, arm_count=k)
        for t in (1, 3, 7, 100):
            cap = math.sqrt(k) * math.log(max(3, t)) ** (1 + q)
            for _ in range(100):
                p = float(rng.uniform(1e-4, 1.0))
                loss = float(rng.uniform(0, 1))
                state = adaptive_rate_update(
                    AdaptiveRateState(1.0), loss, p, float(pot.hessian(p, t))
                )
                assert state.accumulator <= cap * (1 + 1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            AdaptiveRateState(0.0)
        with pytest.raises(ValueError):
            adaptive_rate_update(AdaptiveRateState(1.0), 1.5, 0.5, 1.0)
        with pytest.raises(ValueError):
            adaptive_rate_update(AdaptiveRateState(1.0), 0.5, 0.0, 1.0)


class TestEtaZero:
    def test_q_one_matches_reduced_constant(self):
        # at q = 1 the radical collapses to 22 / (3 sqrt(2))
        for k in (2, 5, 16):
            expected = k ** 0.25 * math.sqrt(22.0 / (3.0 * math.sqrt(2.0)))
            assert eta_zero_hybrid(k, 1.0) == pytest.approx(expected, rel=1e-15)

    def test_k16_against_arbitrary_precision(self):
        with mpmath.workdps(50):
            expected = float(2 * mpmath.sqrt(mpmath.mpf(22) / (3 * mpmath.sqrt(2))))
        assert eta_zero_hybrid(16, 1.0) == pytest.approx(expected, rel=1e-14)

    def test_known_horizon_constant(self):
        with mpmath.workdps(50):
            expected = float(2 ** 0.25 * mpmath.sqrt(3) / 2 ** mpmath.mpf("0.25"))
        assert eta_zero_known_horizon(2) == pytest.approx(expected, rel=1e-12)

    def test_general_q_formula(self):
        root2 = math.sqrt(2.0)
        for k, q in ((2, 0.5), (7, 3.0)):
            expected = k ** 0.25 * math.sqrt(13 / (3 * root2) + 3 / (root2 * q))
            assert eta_zero_hybrid(k, q) == pytest.approx(expected, rel=1e-15)


class TestChoppedFloor:
    def test_early_rounds_capped_at_uniform(self):
        assert chopped_floor(1, 2) == pytest.approx(0.5)
        assert chopped_floor(2, 5) == pytest.approx(0.2)

    def test_matches_one_over_t_later(self):
        assert chopped_floor(100, 5) == pytest.approx(0.01)

    def test_known_horizon(self):
        assert chopped_floor(7, 4, known_horizon=1000) == pytest.approx(0.001)

    def test_nonincreasing_so_feasible_sets_nest(self):
        floors = [chopped_floor(t, 4) for t in range(1, 500)]
        assert all(b <= a for a, b in zip(floors, floors[1:]))
        assert all(f * 4 <= 1.0 + 1e-12 for f in floors)


class TestMixingRate:
    def test_first_two_rounds_default(self):
        assert inf_mixing_gamma(1) == 0.5
        assert inf_mixing_gamma(2) == 0.5

    def test_round_three_value(self):
        with mpmath.workdps(40):
            expected = float(mpmath.log(3) * mpmath.log(mpmath.log(3)) / 3)
        assert inf_mixing_gamma(3) == pytest.approx(expected, rel=1e-14)

    def test_round_sixteen_value(self):
        expected = math.log(16) * math.log(math.log(16)) / 16
        assert inf_mixing_gamma(16) == pytest.approx(expected, rel=1e-14)

    def test_always_in_unit_interval(self):
        for t in range(1, 5000):
            g = inf_mixing_gamma(t)
            assert 0.0 < g <= 1.0

    def test_cumulative_growth_matches_polylog(self):
        # sum_{t<=n} gamma_t / (log^2 n loglog n) stays bounded
        ratios = []
        total = 0.0
        t = 0
        for n in (10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6):
            while t < n:
                t += 1
                total += inf_mixing_gamma(t)
            ratios.append(total / (math.log(n) ** 2 * math.log(math.log(n))))
        assert max(ratios) <= 1.0  # the integral comparison gives ~1/2


class TestSqrtSumInequality:
    def test_singleton_at_cap(self):
        assert check_sqrt_sum_inequality([10.0], 10.0)

    def test_all_zeros(self):
        assert check_sqrt_sum_inequality(np.zeros(100), 1.0)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            check_sqrt_sum_inequality([0.5, 1.5], 1.0)

    def test_fuzz_never_violated(self):
        rng = np.random.default_rng(53)
        for i in range(2000):
            bound = [0.5, 1.0, 10.0][i % 3]
            length = int(rng.integers(1, 1000))
            x = rng.uniform(0.0, bound, length)
            assert check_sqrt_sum_inequality(x, bound)


class TestSlowSet:
    def test_loglog_table_values(self):
        f = loglog_exploration_table(70000)
        assert f[0] == 1 and f[2] == 1
        assert f[3] == 2  # n = 4
        assert f[15] == 3  # n = 16
        assert f[255] == 4  # n = 256
        assert f[65535] == 5  # n = 65536

    def test_breakpoints(self):
        f = loglog_exploration_table(70000)
        tau = slow_set_breakpoints(f)
        assert list(tau) == [1, 4, 16, 256, 65536]

    def test_first_event_is_round_one(self):
        f = loglog_exploration_table(1000)
        for seed in range(20):
            with pytest.warns(UserWarning):
                events = sample_exploration_events(f, seed)
            assert events[0] == 1

    def test_events_distinct_and_within_breakpoints(self):
        f = loglog_exploration_table(100000)
        tau = slow_set_breakpoints(f)
        with pytest.warns(UserWarning):
            events = sample_exploration_events(f, 99)
        assert len(set(events.tolist())) == events.size
        assert np.all(events <= tau)

    def test_same_seed_reproduces_bit_identically(self):
        f = loglog_exploration_table(100000)
        with pytest.warns(UserWarning):
            a = slow_set_schedule(f, 7, 100000)
        with pytest.warns(UserWarning):
            b = slow_set_schedule(f, 7, 100000)
        assert np.array_equal(a, b)

    def test_different_seeds_differ(self):
        f = loglog_exploration_table(100000)
        with pytest.warns(UserWarning):
            a = slow_set_schedule(f, 1, 100000)
        with pytest.warns(UserWarning):
            b = slow_set_schedule(f, 2, 100000)
        assert not np.array_equal(a, b)

    def test_set_size_stays_within_twice_target(self):
        # Monte-Carlo check of the density property |E ∩ [n]| <= 2 f(n) for
        # all n past a burn-in, on at least 95% of seeds
        f = loglog_exploration_table(10 ** 6)
        tau = slow_set_breakpoints(f)
        good = 0
        seeds = 200
        checkpoints = np.unique(np.concatenate([tau, tau - 1, [10 ** 6]]))
        checkpoints = checkpoints[checkpoints >= 16]
        for seed in range(seeds):
            with pytest.warns(UserWarning):
                events = sample_exploration_events(f, seed)
            ok = True
            for n in checkpoints:
                count = int(np.sum(events <= n))
                if count > 2 * int(f[n - 1]):
                    ok = False
                    break
            good += ok
        assert good >= 0.95 * seeds

    def test_table_validation(self):
        with pytest.raises(ValueError):
            slow_set_breakpoints(np.array([2, 3, 4]))  # must start at 1
        with pytest.raises(ValueError):
            slow_set_breakpoints(np.array([1, 3]))  # must not skip levels
        with pytest.raises(ValueError):
            slow_set_breakpoints(np.array([1, 2, 1]))  # must be nondecreasing

    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text("n,f\n1,1\n2,1\n3,2\n4,2\n5,3\n")
        f = load_exploration_table_csv(path)
        assert list(f) == [1, 1, 2, 2, 3]

    def test_csv_rejects_gaps_and_junk(self, tmp_path):
        bad_rows = tmp_path / "bad1.csv"
        bad_rows.write_text("n,f\n1,1\n3,2\n")
        with pytest.raises(ValueError):
            load_exploration_table_csv(bad_rows)
        bad_value = tmp_path / "bad2.csv"
        bad_value.write_text("n,f\n1,1\n2,x\n")
        with pytest.raises(ValueError):
            load_exploration_table_csv(bad_value)

    def test_schedule_kind_validation(self):
        with pytest.raises(ValueError):
            ExplorationSchedule("sometimes")
        with pytest.raises(ValueError):
            ExplorationSchedule("slow_set")
        ExplorationSchedule("none")
