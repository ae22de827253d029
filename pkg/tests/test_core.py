"""Domain-type invariants and the estimator/regret operations."""

import numpy as np
import pytest

from ftrl_bandits.core import (
    EstimateVector,
    LossVector,
    ProbabilityVector,
    RoundRecord,
    RunRecord,
    importance_weighted_estimate,
    random_regret,
)


def _dist(entries, floor=0.0):
    return ProbabilityVector(np.asarray(entries, dtype=float), floor=floor)


class TestTypes:
    def test_loss_vector_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            LossVector([0.2, 1.2])
        with pytest.raises(ValueError):
            LossVector([-0.1, 0.5])
        with pytest.raises(ValueError):
            LossVector([0.5])

    def test_loss_vector_is_immutable(self):
        lv = LossVector([0.1, 0.9])
        with pytest.raises(ValueError):
            lv.entries[0] = 0.5

    def test_probability_vector_sum_tolerance(self):
        _dist([0.5, 0.5 + 5e-11])
        with pytest.raises(ValueError):
            _dist([0.5, 0.6])

    def test_probability_vector_floor(self):
        _dist([0.1, 0.9], floor=0.1)
        with pytest.raises(ValueError):
            _dist([0.05, 0.95], floor=0.1)

    def test_point_mass_is_legal_without_floor(self):
        pm = _dist([0.0, 1.0, 0.0])
        assert pm.entries[1] == 1.0

    def test_estimate_vector_nonnegative(self):
        with pytest.raises(ValueError):
            EstimateVector([1.0, -0.25])

    def test_round_record_validation(self):
        d = _dist([0.5, 0.5])
        RoundRecord(t=1, action=0, loss_incurred=0.3, distribution=d, learning_rate=0.1)
        with pytest.raises(ValueError):
            RoundRecord(t=0, action=0, loss_incurred=0.3, distribution=d, learning_rate=0.1)
        with pytest.raises(ValueError):
            RoundRecord(t=1, action=2, loss_incurred=0.3, distribution=d, learning_rate=0.1)
        with pytest.raises(ValueError):
            RoundRecord(t=1, action=0, loss_incurred=0.3, distribution=d, learning_rate=0.0)


class TestImportanceWeightedEstimate:
    def test_division_by_half_doubles(self):
        est = importance_weighted_estimate(LossVector([0.5, 0.2]), 0, _dist([0.5, 0.5]))
        assert est.entries == pytest.approx([1.0, 0.0], abs=0)

    def test_one_over_tenth(self):
        est = importance_weighted_estimate(LossVector([0.0, 1.0]), 1, _dist([0.9, 0.1]))
        assert est.entries == pytest.approx([0.0, 10.0], abs=1e-15)

    def test_rejects_zero_probability_action(self):
        with pytest.raises(ValueError):
            importance_weighted_estimate(LossVector([0.0, 1.0]), 0, _dist([0.0, 1.0]))

    def test_unbiasedness_identity(self):
        # sum_a dist[a] * estimate(loss, a, dist) recovers the loss exactly
        rng = np.random.default_rng(11)
        for _ in range(200):
            k = int(rng.integers(2, 6))
            loss = LossVector(rng.random(k))
            raw = rng.random(k) + 0.05
            dist = _dist(raw / raw.sum())
            mixed = np.zeros(k)
            for a in range(k):
                mixed += dist.entries[a] * importance_weighted_estimate(loss, a, dist).entries
            np.testing.assert_allclose(mixed, loss.entries, atol=1e-12, rtol=0)

    def test_single_support_unless_zero_loss(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            k = int(rng.integers(2, 6))
            loss = LossVector(np.clip(rng.random(k), 0.01, 1.0))
            dist = _dist(np.full(k, 1.0 / k))
            a = int(rng.integers(k))
            est = importance_weighted_estimate(loss, a, dist)
            assert np.count_nonzero(est.entries) == 1
            assert est.entries[a] > 0


class TestRandomRegret:
    def _trace(self, actions, losses):
        d = _dist(np.full(losses[0].k, 1.0 / losses[0].k))
        return [
            RoundRecord(
                t=i + 1,
                action=a,
                loss_incurred=float(losses[i].entries[a]),
                distribution=d,
                learning_rate=1.0,
            )
            for i, a in enumerate(actions)
        ]

    def test_playing_the_best_arm_gives_zero(self):
        losses = [LossVector([0.2, 0.9]) for _ in range(5)]
        trace = self._trace([0] * 5, losses)
        assert random_regret(trace, losses) == pytest.approx(0.0, abs=1e-9)

    def test_worst_arm_twice(self):
        losses = [LossVector([1.0, 0.0]), LossVector([1.0, 0.0])]
        trace = self._trace([0, 0], losses)
        assert random_regret(trace, losses) == pytest.approx(2.0)

    def test_matches_brute_force_recomputation(self):
        rng = np.random.default_rng(13)
        losses = [LossVector(rng.random(2)) for _ in range(100)]
        actions = [int(a) for a in rng.integers(0, 2, 100)]
        trace = self._trace(actions, losses)
        # independent recomputation with plain python loops
        incurred = sum(losses[t].entries[actions[t]] for t in range(100))
        totals = [sum(losses[t].entries[i] for t in range(100)) for i in range(2)]
        expected = incurred - min(totals)
        assert random_regret(trace, losses) == pytest.approx(expected, abs=1e-12)

    def test_length_mismatch_rejected(self):
        losses = [LossVector([0.1, 0.2])]
        with pytest.raises(ValueError):
            random_regret([], losses)

    def test_invariant_under_arm_relabeling(self):
        rng = np.random.default_rng(14)
        losses = [LossVector(rng.random(3)) for _ in range(50)]
        actions = [int(a) for a in rng.integers(0, 3, 50)]
        trace = self._trace(actions, losses)
        perm = [2, 0, 1]
        losses_p = [LossVector(lv.entries[perm]) for lv in losses]
        inverse = np.argsort(perm)
        trace_p = self._trace([int(inverse[a]) for a in actions], losses_p)
        assert random_regret(trace, losses) == pytest.approx(
            random_regret(trace_p, losses_p), abs=1e-12
        )


class TestRunRecord:
    def test_regret_recomputable_from_trace(self):
        rng = np.random.default_rng(15)
        losses = [LossVector(rng.random(2)) for _ in range(20)]
        actions = [int(a) for a in rng.integers(0, 2, 20)]
        d = _dist([0.5, 0.5])
        trace = tuple(
            RoundRecord(
                t=i + 1,
                action=a,
                loss_incurred=float(losses[i].entries[a]),
                distribution=d,
                learning_rate=1.0,
            )
            for i, a in enumerate(actions)
        )
        regret = random_regret(trace, losses)
        record = RunRecord(
            seed=1,
            horizon=20,
            arm_count=2,
            random_regret=regret,
            cumulative_best_arm_loss=min(
                float(sum(lv.entries[i] for lv in losses)) for i in range(2)
            ),
            trace=trace,
        )
        assert random_regret(record.trace, losses) == pytest.approx(record.random_regret)
