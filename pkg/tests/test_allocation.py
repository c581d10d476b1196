import numpy as np
import pytest

from rartrial.allocation import (
    AllocationResult,
    ComparatorConfig,
    apply_suspension,
    assign_stage,
    fixed_randomization,
    rule1,
    rule2,
    rule3,
    thompson,
    trippa,
)

EXACT = 1e-12


class TestSuspension:
    def test_flags_and_rescales(self):
        active, scaled = apply_suspension(np.array([0.02, 0.50, 0.48]), 0.05)
        np.testing.assert_array_equal(active, [False, True, True])
        np.testing.assert_allclose(scaled, [0.510204, 0.489796], atol=5e-7)

    def test_no_flags_above_threshold(self):
        active, scaled = apply_suspension(np.array([0.4, 0.3, 0.3]), 0.05)
        assert active.all()
        np.testing.assert_allclose(scaled, [0.4, 0.3, 0.3], atol=EXACT)

    def test_all_below_threshold_keeps_everyone(self):
        active, scaled = apply_suspension(np.array([0.3, 0.3, 0.4]), 0.5)
        assert active.all()
        np.testing.assert_allclose(scaled, [0.3, 0.3, 0.4], atol=EXACT)

    def test_idempotent(self):
        p = np.array([0.02, 0.50, 0.48])
        active, scaled = apply_suspension(p, 0.05)
        active2, scaled2 = apply_suspension(scaled, 0.05)
        assert active2.all()
        np.testing.assert_allclose(scaled2, scaled, atol=EXACT)


class TestRule1:
    def test_worked_example(self):
        res = rule1(np.array([0.5, 0.3, 0.2]), 3)
        np.testing.assert_allclose(res.probs, [0.25, 0.375, 0.225, 0.150],
                                   atol=EXACT)

    def test_uniform_input_reproduces_fixed(self):
        res = rule1(np.full(3, 1 / 3), 3)
        np.testing.assert_allclose(res.probs, np.full(4, 0.25), atol=EXACT)

    def test_suspended_arm_gets_zero_control_unchanged(self):
        active = np.array([True, True, False])
        res = rule1(np.array([0.6, 0.4]), 3, active)
        np.testing.assert_allclose(res.probs, [0.25, 0.45, 0.30, 0.0], atol=EXACT)
        np.testing.assert_array_equal(res.suspended, [False, False, True])


class TestRule2:
    def test_capped_example(self):
        res = rule2(np.array([0.9, 0.07, 0.03]), 0.8, 3)
        np.testing.assert_allclose(
            res.probs, [0.2 / 3, 0.8, 0.2 / 3 * 2 * 0.7, 0.2 / 3 * 2 * 0.3],
            atol=EXACT)
        np.testing.assert_allclose(res.probs, [0.066667, 0.8, 0.093333, 0.04],
                                   atol=5e-7)

    def test_uncapped_example(self):
        res = rule2(np.array([0.5, 0.3, 0.2]), 0.8, 3)
        np.testing.assert_allclose(res.probs, [1 / 6, 0.5, 0.2, 2 / 15],
                                   atol=EXACT)

    def test_degenerate_weights_split_equally(self):
        res = rule2(np.array([1.0, 0.0, 0.0]), 0.8, 3)
        np.testing.assert_allclose(res.probs, [0.2 / 3, 0.8, 0.2 / 3, 0.2 / 3],
                                   atol=EXACT)

    def test_cap_is_respected(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            p = rng.dirichlet(np.ones(4))
            res = rule2(p, 0.8, 4)
            assert res.probs[1:].max() <= 0.8 + EXACT

    def test_single_active_arm_remainder_to_control(self):
        active = np.array([True, False, False])
        res = rule2(np.array([1.0]), 0.8, 3, active)
        assert res.probs[1] == pytest.approx(0.8, abs=EXACT)
        assert res.probs[0] == pytest.approx(0.2, abs=EXACT)
        assert res.probs.sum() == pytest.approx(1.0, abs=EXACT)


class TestRule3:
    def test_worked_example(self):
        res = rule3(np.array([0.6, 0.3, 0.1]))
        np.testing.assert_allclose(res.probs, [0.375, 0.375, 0.1875, 0.0625],
                                   atol=EXACT)

    def test_uniform(self):
        res = rule3(np.full(3, 1 / 3))
        np.testing.assert_allclose(res.probs, np.full(4, 0.25), atol=EXACT)

    def test_degenerate(self):
        res = rule3(np.array([1.0, 0.0, 0.0]))
        np.testing.assert_allclose(res.probs, [0.5, 0.5, 0.0, 0.0], atol=EXACT)


class TestComparators:
    def test_fixed(self):
        np.testing.assert_allclose(fixed_randomization(3).probs, np.full(4, 0.25),
                                   atol=EXACT)
        np.testing.assert_allclose(fixed_randomization(1).probs, [0.5, 0.5],
                                   atol=EXACT)

    def test_thompson_worked_example(self):
        res = thompson(np.array([0.64, 0.16, 0.16, 0.04]), 0.5)
        np.testing.assert_allclose(res.probs, [4 / 9, 2 / 9, 2 / 9, 1 / 9],
                                   atol=EXACT)

    def test_thompson_degenerate_and_symmetric(self):
        res = thompson(np.array([1.0, 0.0, 0.0, 0.0]), 0.3)
        np.testing.assert_allclose(res.probs, [1, 0, 0, 0], atol=EXACT)
        res = thompson(np.full(4, 0.25), 0.7)
        np.testing.assert_allclose(res.probs, np.full(4, 0.25), atol=EXACT)

    def test_thompson_exponent_uses_cumulative_fraction(self):
        assert ComparatorConfig.thompson_exponent(500, 2000) == pytest.approx(0.125)

    def test_trippa_symmetric(self):
        cfg = ComparatorConfig()
        res = trippa(np.full(3, 0.5), np.array([100, 100, 100, 100]), 1.0, cfg)
        np.testing.assert_allclose(res.probs, np.full(4, 0.25), atol=EXACT)

    def test_trippa_exponents_at_full_information(self):
        cfg = ComparatorConfig()
        assert cfg.trippa_gamma_scale * 1.0**cfg.trippa_gamma_power == 10.0
        assert cfg.trippa_eta_scale * 1.0 == 0.25

    def test_trippa_control_weight(self):
        # imbalance of 8 at t=0.5: control raw weight (1/3) e^{0.125*8}
        cfg = ComparatorConfig()
        counts = np.array([100, 108, 90, 95])
        res = trippa(np.full(3, 0.5), counts, 0.5, cfg)
        raw_control = (1 / 3) * np.exp(0.125 * 8)
        assert raw_control == pytest.approx(0.906094, abs=1e-6)
        expected = np.concatenate([[raw_control], np.full(3, 1 / 3)])
        np.testing.assert_allclose(res.probs, expected / expected.sum(), atol=EXACT)

    def test_trippa_rejects_bad_fraction(self):
        with pytest.raises(ValueError):
            trippa(np.full(3, 0.5), np.array([1, 1, 1, 1]), 0.0, ComparatorConfig())


class TestProperties:
    def test_results_are_simplices_with_positive_control(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            p = rng.dirichlet(np.ones(3))
            for res in (rule1(p, 3), rule2(p, 0.8, 3), rule3(p),
                        fixed_randomization(3)):
                assert res.probs.sum() == pytest.approx(1.0, abs=1e-9)
                assert np.all(res.probs >= 0)
                assert res.probs[0] > 0

    def test_trippa_control_positive(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            probs = rng.random(3)
            counts = rng.integers(0, 200, size=4)
            res = trippa(probs, counts, rng.random() * 0.99 + 0.01,
                         ComparatorConfig())
            assert res.probs[0] > 0

    def test_scale_invariance_of_rules(self):
        rng = np.random.default_rng(3)
        p = rng.dirichlet(np.ones(3))
        for rule, args in ((rule1, (3,)), (rule2, (0.8, 3)), (rule3, ())):
            base = rule(p, *args).probs
            # feeding a rescaled copy after renormalization changes nothing
            again = rule(4.2 * p / (4.2 * p).sum(), *args).probs
            np.testing.assert_allclose(base, again, atol=EXACT)

    def test_invalid_result_rejected(self):
        with pytest.raises(ValueError):
            AllocationResult(np.array([0.5, 0.4]))
        with pytest.raises(ValueError):
            AllocationResult(np.array([1.2, -0.2]))


class TestAssignStage:
    def test_degenerate(self):
        alloc = AllocationResult(np.array([1.0, 0.0, 0.0, 0.0]))
        counts = assign_stage(alloc, 200, np.random.default_rng(0))
        np.testing.assert_array_equal(counts, [200, 0, 0, 0])

    def test_counts_sum_to_stage_size(self):
        rng = np.random.default_rng(1)
        alloc = AllocationResult(np.array([0.1, 0.5, 0.2, 0.2]))
        for _ in range(20):
            assert assign_stage(alloc, 173, rng).sum() == 173

    def test_frequency_oracle(self):
        alloc = AllocationResult(np.full(4, 0.25))
        rng = np.random.default_rng(2)
        draws = rng.multinomial(200, alloc.probs, size=100_000)
        freq = draws.mean(axis=0) / 200
        np.testing.assert_allclose(freq, 0.25, atol=0.001)

    def test_suspended_arm_receives_zero(self):
        alloc = rule1(np.array([0.6, 0.4]), 3, np.array([True, True, False]))
        counts = assign_stage(alloc, 500, np.random.default_rng(3))
        assert counts[3] == 0
