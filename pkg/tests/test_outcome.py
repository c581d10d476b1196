import math

import numpy as np
import pytest

from rartrial.outcome import (
    CONSTANTS,
    LOWER,
    UPPER,
    ArmModel,
    PatientRecord,
    build_scenario,
    osfd_days,
    simulate_outcomes,
    simulate_patient,
    transform_osfd,
)


class TestTransform:
    def test_ceiling_day_maps_to_upper(self):
        assert transform_osfd(28, 0) == pytest.approx(4 - math.log(2), abs=1e-9)
        assert transform_osfd(28, 0) == pytest.approx(3.306853, abs=1e-6)

    def test_death_maps_to_zero(self):
        for y in (1, 15, 28, 999):
            assert transform_osfd(y, 1) == 0.0

    def test_first_day(self):
        assert transform_osfd(1, 0) == pytest.approx(4 - math.log(29), abs=1e-9)
        assert transform_osfd(1, 0) == pytest.approx(0.632704, abs=1e-6)

    def test_strictly_increasing_and_roundtrip(self):
        values = [transform_osfd(y, 0) for y in range(1, 29)]
        assert all(a < b for a, b in zip(values, values[1:]))
        for y in range(1, 29):
            assert round(osfd_days(transform_osfd(y, 0))) == y

    @pytest.mark.parametrize("bad", [0, 29, -3, 100])
    def test_rejects_out_of_range_days(self, bad):
        with pytest.raises(ValueError):
            transform_osfd(bad, 0)

    def test_constants(self):
        assert CONSTANTS.l_ceiling == 4
        assert LOWER == pytest.approx(0.5988026, abs=1e-6)
        assert UPPER == pytest.approx(3.3068528, abs=1e-6)


class TestRecordInvariants:
    def test_death_must_carry_zero(self):
        with pytest.raises(ValueError):
            PatientRecord(1, None, 1.0)

    def test_alive_response_must_be_in_range(self):
        with pytest.raises(ValueError):
            PatientRecord(0, 5, 0.1)
        with pytest.raises(ValueError):
            PatientRecord(0, 5, UPPER + 0.2)

    def test_tau_binary(self):
        with pytest.raises(ValueError):
            PatientRecord(2, 5, 1.0)


class TestArmModel:
    def test_probability_bounds(self):
        with pytest.raises(ValueError):
            ArmModel(1.2, 0.3, 0.0, 1.0)
        with pytest.raises(ValueError):
            ArmModel(0.2, -0.1, 0.0, 1.0)

    def test_positive_scale(self):
        with pytest.raises(ValueError):
            ArmModel(0.2, 0.3, 0.0, 0.0)


class TestSimulate:
    def test_degenerate_mortality(self):
        arm = ArmModel(1.0, 0.3, -2.3, 0.64)
        rng = np.random.default_rng(0)
        for _ in range(20):
            rec = simulate_patient(arm, CONSTANTS, rng)
            assert rec.tau == 1 and rec.d == 0.0 and rec.y_days is None

    def test_degenerate_censoring(self):
        arm = ArmModel(0.0, 1.0, -2.3, 0.64)
        rng = np.random.default_rng(0)
        for _ in range(20):
            rec = simulate_patient(arm, CONSTANTS, rng)
            assert rec.tau == 0 and rec.d == UPPER and rec.y_days == 28

    def test_marginal_frequencies(self):
        # mortality and censor-mass frequencies at one million draws
        arm = ArmModel(0.2, 0.3, -2.3, 0.64)
        rng = np.random.default_rng(123)
        tau, d = simulate_outcomes(arm, 1_000_000, rng)
        assert tau.mean() == pytest.approx(0.200, abs=0.002)
        alive = d[tau == 0]
        assert (alive == UPPER).mean() == pytest.approx(0.300, abs=0.003)

    def test_every_record_satisfies_invariants(self):
        rng = np.random.default_rng(5)
        for arm in (ArmModel(0.2, 0.3, -2.3, 0.64), ArmModel(0.15, 0.2, -1.66, 0.64)):
            tau, d = simulate_outcomes(arm, 100_000, rng)
            alive = d[tau == 0]
            assert np.all(d[tau == 1] == 0.0)
            assert np.all((alive > LOWER) & (alive <= UPPER))

    def test_patient_record_fields(self):
        arm = ArmModel(0.2, 0.3, -2.3, 0.64)
        rng = np.random.default_rng(17)
        seen_interior = False
        for _ in range(200):
            rec = simulate_patient(arm, CONSTANTS, rng)
            if rec.tau == 0 and rec.d < UPPER:
                seen_interior = True
                assert 1 <= rec.y_days <= 28
        assert seen_interior

    def test_empirical_mean_matches_estimand(self):
        from rartrial.posterior import theta_of, var_of

        arm = ArmModel(0.2, 0.3, -2.3, 0.64)
        rng = np.random.default_rng(99)
        n = 400_000
        _, d = simulate_outcomes(arm, n, rng)
        tol = 3 * math.sqrt(var_of(arm) / n)
        assert d.mean() == pytest.approx(theta_of(arm), abs=tol)


class TestScenarios:
    def test_snn_at_omega_03(self):
        spec = build_scenario("SNN", 0.3)
        expected = [
            (0.20, 0.3, -2.30, 0.64),
            (0.15, 0.3, -1.66, 0.64),
            (0.20, 0.3, -2.30, 0.64),
            (0.20, 0.3, -2.30, 0.64),
        ]
        for arm, (lam, om, mu, s2) in zip(spec.arms, expected):
            assert arm.lambda_ == pytest.approx(lam)
            assert arm.omega == pytest.approx(om)
            assert arm.mu == pytest.approx(mu)
            assert arm.sigma2 == pytest.approx(s2)

    def test_mnn_at_omega_02(self):
        spec = build_scenario("MNN", 0.2)
        assert spec.arms[1].mu == pytest.approx(-1.90)
        assert spec.arms[1].lambda_ == pytest.approx(0.18)
        for arm in spec.arms[2:]:
            assert arm.mu == pytest.approx(-2.3)
            assert arm.lambda_ == pytest.approx(0.20)

    def test_ssm_has_two_strong_arms(self):
        spec = build_scenario("SSM", 0.3)
        strong = [a for a in spec.arms[1:] if a.lambda_ == pytest.approx(0.15)]
        medium = [a for a in spec.arms[1:] if a.lambda_ == pytest.approx(0.18)]
        assert len(strong) == 2 and len(medium) == 1
        assert spec.best_arm_indices() == [1, 2]

    def test_unknown_label_rejected(self):
        with pytest.raises(ValueError):
            build_scenario("XYZ", 0.3)
        with pytest.raises(ValueError):
            build_scenario("SNN", 0.25)
