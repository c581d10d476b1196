import math

import numpy as np
import pytest

from rartrial.outcome import CONSTANTS, LOWER, UPPER, ArmModel, simulate_outcomes
from rartrial.posterior import (
    PosteriorSample,
    censoring_responsibility,
    cond_lambda,
    cond_mu,
    cond_omega,
    cond_sigma2,
    cond_z,
    estimate_theta,
    estimate_xi,
    prob_best,
    prob_best_draws,
    prob_superiority_draws,
    theta_of,
    tn_moments,
    var_of,
)


class TestTnMoments:
    def test_symmetric_truncation_cancels(self):
        mid = (LOWER + UPPER) / 2
        for sigma2 in (0.04, 0.64, 4.0):
            mom = tn_moments(mid, sigma2)
            assert mom.r_tn == pytest.approx(0.0, abs=1e-12)
            assert mom.mean == pytest.approx(mid, abs=1e-12)

    def test_degenerate_scale_limit(self):
        mom = tn_moments(2.0, 1e-10)
        assert mom.mean == pytest.approx(2.0, abs=1e-6)
        assert mom.variance == pytest.approx(0.0, abs=1e-9)

    def test_monte_carlo_oracle_exterior_location(self):
        from rartrial import truncnorm

        rng = np.random.default_rng(314)
        draws = truncnorm.sample(-2.3, 0.64, LOWER, UPPER, 10_000_000, rng)
        mom = tn_moments(-2.3, 0.64)
        assert mom.mean == pytest.approx(draws.mean(), abs=1e-3)

    def test_variance_nonnegative_on_grid(self):
        for mu in np.linspace(-10, 10, 81):
            for sigma in (0.1, 0.5, 0.8, 2.0):
                assert tn_moments(mu, sigma**2).variance >= 0.0

    def test_rejects_bad_scale(self):
        with pytest.raises(ValueError):
            tn_moments(1.0, -1.0)


class TestEstimand:
    def test_all_deaths(self):
        assert theta_of(ArmModel(1.0, 0.3, -2.3, 0.64)) == 0.0
        assert var_of(ArmModel(1.0, 0.3, -2.3, 0.64)) == 0.0

    def test_all_censored(self):
        arm = ArmModel(0.0, 1.0, -2.3, 0.64)
        assert theta_of(arm) == pytest.approx(UPPER, abs=1e-12)
        assert var_of(arm) == pytest.approx(0.0, abs=1e-9)

    def test_monte_carlo_oracle_control(self):
        arm = ArmModel(0.20, 0.30, -2.3, 0.64)
        rng = np.random.default_rng(11)
        _, d = simulate_outcomes(arm, 10_000_000, rng)
        assert theta_of(arm) == pytest.approx(d.mean(), abs=2e-3)
        assert var_of(arm) == pytest.approx(d.var(), rel=0.01)

    def test_theta_continuous_in_parameters(self):
        arm = ArmModel(0.2, 0.3, -2.3, 0.64)
        base = theta_of(arm)
        for i, eps in enumerate([1e-7, 1e-7, 1e-7, 1e-7]):
            vals = list(arm.astuple())
            vals[i] += eps
            assert abs(theta_of(ArmModel(*vals)) - base) < 1e-5


class TestConditionals:
    @pytest.mark.parametrize("n,deaths,expected", [
        (10, 3, (4, 8)), (0, 0, (1, 1)), (5, 0, (1, 6)),
    ])
    def test_mortality_conditional(self, n, deaths, expected):
        assert cond_lambda(n, deaths) == pytest.approx(expected)

    @pytest.mark.parametrize("alive,censored,expected", [
        (10, 4, (5, 7)), (0, 0, (1, 1)), (6, 6, (7, 1)),
    ])
    def test_censor_conditional(self, alive, censored, expected):
        assert cond_omega(alive, censored) == pytest.approx(expected)

    def test_conditional_count_validation(self):
        with pytest.raises(ValueError):
            cond_lambda(3, 5)
        with pytest.raises(ValueError):
            cond_omega(3, 5)

    def test_latent_interior_is_never_censored(self):
        arm = ArmModel(0.2, 0.3, 2.0, 0.64)
        assert cond_z(2.0, arm) == 0.0

    def test_latent_responsibility_equal_weights(self):
        assert censoring_responsibility(0.5, 1.0) == pytest.approx(0.5)

    def test_latent_responsibility_formula(self):
        assert censoring_responsibility(0.3, 0.7) == pytest.approx(0.379747, abs=1e-6)

    def test_latent_at_upper_uses_truncated_density(self):
        from rartrial import truncnorm

        arm = ArmModel(0.2, 0.3, 2.0, 0.64)
        psi = truncnorm.pdf(UPPER, 2.0, 0.64, LOWER, UPPER)
        assert cond_z(UPPER, arm) == pytest.approx(
            0.3 / (0.3 + 0.7 * psi), abs=1e-12)

    def test_location_conditional(self):
        got = cond_mu([2.0] * 5, 1.0)
        assert got.mean == pytest.approx(10 / 5.0001, abs=1e-9)
        assert got.variance == pytest.approx(1 / 5.0001, abs=1e-9)
        prior = cond_mu([], 1.0)
        assert prior.mean == 0.0
        assert prior.variance == pytest.approx(1e4)
        got = cond_mu([0.0] * 4, 2.0)
        assert got.mean == 0.0
        assert got.variance == pytest.approx(1 / 2.0001, abs=1e-9)

    def test_scale_conditional(self):
        r = math.sqrt(0.5)
        got = cond_sigma2([2 - r, 2 - r, 2 + r, 2 + r], 2.0)  # m=4, Q=2
        assert got.shape == pytest.approx(2.0001)
        assert got.scale == pytest.approx(1.0001, abs=1e-9)
        got = cond_sigma2([], 1.0)
        assert got == pytest.approx((1e-4, 1e-4))
        got = cond_sigma2([5.0, 5.0], 5.0)  # m=2, Q=0
        assert got.shape == pytest.approx(1.0001)
        assert got.scale == pytest.approx(1e-4)


def _sample_with_thetas(target_thetas):
    """Build a PosteriorSample whose per-draw expected responses hit the
    requested values exactly (pure death/censor mixtures: theta = (1-lam)*UPPER)."""
    rows = []
    for t in target_thetas:
        lam = 1.0 - t / UPPER
        rows.append([lam, 1.0, 0.0, 1.0])
    return PosteriorSample(np.array(rows))


class TestEstimators:
    def test_estimate_theta_is_draw_mean(self):
        sample = _sample_with_thetas([1.0, 2.0, 3.0])
        assert estimate_theta(sample) == pytest.approx(2.0, abs=1e-12)

    def test_estimate_theta_identical_draws(self):
        arm = ArmModel(0.2, 0.3, -2.3, 0.64)
        sample = PosteriorSample(np.tile(arm.astuple(), (5, 1)))
        assert estimate_theta(sample) == pytest.approx(theta_of(arm), abs=1e-12)

    def test_contrast_enumerates_pairs(self):
        k = _sample_with_thetas([2.0, 4.0])
        c = _sample_with_thetas([1.0, 3.0])
        pairs = [2 - 1, 2 - 3, 4 - 1, 4 - 3]
        assert estimate_xi(k, c) == pytest.approx(np.mean(pairs), abs=1e-12)

    def test_contrast_antisymmetric(self):
        k = _sample_with_thetas([2.0, 4.0, 1.5])
        c = _sample_with_thetas([1.0, 3.0, 2.5])
        assert estimate_xi(k, c) == pytest.approx(-estimate_xi(c, k), abs=1e-12)

    def test_contrast_of_identical_samples_is_zero(self):
        k = _sample_with_thetas([2.0, 4.0])
        assert estimate_xi(k, k) == 0.0

    def test_superiority_enumerates_pairs(self):
        tk = np.array([2.0, 4.0])
        t0 = np.array([1.0, 3.0])
        assert prob_superiority_draws(tk, t0, 0.0) == pytest.approx(3 / 4)

    def test_superiority_strict_inequality(self):
        t = np.array([1.0, 3.0])
        assert prob_superiority_draws(t, t, 0.0) == pytest.approx(1 / 4)

    def test_superiority_margin_beyond_support(self):
        tk = np.array([UPPER, UPPER])
        t0 = np.array([0.0, 0.0])
        assert prob_superiority_draws(tk, t0, UPPER + 1.0) == 0.0

    def test_best_arm_dominance(self):
        thetas = np.array([[2.0, 2.0], [1.0, 1.0]])
        np.testing.assert_allclose(prob_best_draws(thetas), [1.0, 0.0])

    def test_best_arm_matched_draws(self):
        thetas = np.array([[1.0, 3.0], [2.0, 2.0]])
        np.testing.assert_allclose(prob_best_draws(thetas), [0.5, 0.5])

    def test_best_arm_tie_split(self):
        thetas = np.array([[2.0], [2.0], [1.0]])
        np.testing.assert_allclose(prob_best_draws(thetas), [0.5, 0.5, 0.0])

    def test_best_arm_exchangeable(self):
        rng = np.random.default_rng(3)
        thetas = rng.normal(size=(4, 20_000))
        np.testing.assert_allclose(prob_best_draws(thetas), np.full(4, 0.25),
                                   atol=0.01)

    def test_best_arm_requires_matched_draw_counts(self):
        a = _sample_with_thetas([1.0, 2.0])
        b = _sample_with_thetas([1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            prob_best([a, b])

    def test_prob_best_is_simplex(self):
        rng = np.random.default_rng(8)
        thetas = rng.normal(size=(3, 500))
        p = prob_best_draws(thetas)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(p >= 0)


class TestSerialization:
    def test_columnar_roundtrip(self):
        sample = PosteriorSample(np.array([[0.1, 0.2, -1.0, 0.5],
                                           [0.3, 0.4, 2.0, 1.5]]), 0.25)
        text = sample.to_text()
        assert text.splitlines()[0] == "lambda omega mu sigma2"
        back = PosteriorSample.from_text(text)
        np.testing.assert_array_equal(back.draws, sample.draws)
