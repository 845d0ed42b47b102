import math

import mpmath
import numpy as np
import pytest

from defaultprior import (
    DomainError,
    Estimate,
    PriorSpec,
    conditional_coverage,
    coverage_curve,
    credible_interval,
    implied_se,
    posterior,
    prior_data_conflict,
    sign_probability,
    two_sided_p,
)

mpmath.mp.dps = 40
SQRT2 = math.sqrt(2.0)


def mp_cdf(x):
    return float(mpmath.ncdf(x))


def mp_quantile(p):
    return float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(p) - 1))


class TestEstimate:
    def test_invariants(self):
        with pytest.raises(DomainError):
            Estimate(1.0, 0.0)
        with pytest.raises(DomainError):
            Estimate(math.inf, 1.0)


class TestPosteriorMoments:
    def test_default_prior(self):
        s = posterior(Estimate(3.0, 1.0))
        assert s.post_mean == 1.5
        assert s.post_sd == pytest.approx(0.7071067811865476, abs=1e-16)

    def test_symmetric_case(self):
        s = posterior(Estimate(0.0, 2.0))
        assert s.post_mean == 0.0
        assert s.post_sd == pytest.approx(SQRT2, abs=1e-15)

    def test_flat_prior(self):
        s = posterior(Estimate(3.0, 1.0), PriorSpec.flat())
        assert s.post_mean == 3.0
        assert s.post_sd == 1.0

    def test_randomized_tau_one_formulas(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            b = float(rng.uniform(-10, 10))
            se = float(rng.uniform(0.01, 5))
            s = posterior(Estimate(b, se))
            assert s.post_mean == pytest.approx(b / 2, abs=1e-12)
            assert s.post_sd == pytest.approx(se / SQRT2, abs=1e-12)

    def test_large_tau_converges_to_flat(self):
        est = Estimate(2.3, 0.7)
        big = posterior(est, PriorSpec.scaled(1e6))
        flat = posterior(est, PriorSpec.flat())
        assert abs(big.post_mean - flat.post_mean) < 1e-6
        assert abs(big.post_sd - flat.post_sd) < 1e-6
        assert abs(big.sign_prob_positive - flat.sign_prob_positive) < 1e-6
        assert abs(big.credible_interval[0] - flat.credible_interval[0]) < 1e-6
        assert abs(big.credible_interval[1] - flat.credible_interval[1]) < 1e-6

    def test_post_sd_never_exceeds_se(self):
        est = Estimate(1.0, 2.0)
        for tau in (0.1, 0.5, 1.0, 3.0, 100.0):
            assert posterior(est, PriorSpec.scaled(tau)).post_sd <= est.se


class TestSignProbability:
    def test_at_zero(self):
        assert sign_probability(Estimate(0.0, 3.7)) == 0.5

    def test_default_prior_oracle(self):
        got = sign_probability(Estimate(1.96, 1.0))
        assert got == pytest.approx(mp_cdf(1.96 / SQRT2), abs=1e-14)
        assert got == pytest.approx(0.9171, abs=5e-5)

    def test_flat_oracle(self):
        got = sign_probability(Estimate(1.96, 1.0), PriorSpec.flat())
        assert got == pytest.approx(0.9750021048517795, abs=1e-14)

    def test_shrinkage_reduces_sign_confidence(self):
        for b in np.linspace(0.1, 5, 20):
            est = Estimate(float(b), 1.0)
            flat = sign_probability(est, PriorSpec.flat())
            for tau in (0.1, 0.5, 1.0, 2.0, 10.0):
                assert sign_probability(est, PriorSpec.scaled(tau)) <= flat


class TestConditionalCoverage:
    def test_at_zero_oracle(self):
        z = mp_quantile(0.975)
        expected = mp_cdf(z * SQRT2) - mp_cdf(-z * SQRT2)
        got = conditional_coverage(Estimate(0.0, 1.0))
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(0.99442, abs=5e-5)

    def test_at_significance_boundary(self):
        assert conditional_coverage(Estimate(1.96, 1.0)) == pytest.approx(0.9171, abs=5e-4)

    def test_symmetry_in_b(self):
        for b in (0.3, 1.0, 2.5):
            assert conditional_coverage(Estimate(b, 1.0)) == pytest.approx(
                conditional_coverage(Estimate(-b, 1.0)), abs=1e-15
            )

    def test_decreasing_in_abs_b(self):
        vals = [conditional_coverage(Estimate(float(b), 1.0)) for b in np.linspace(0, 6, 40)]
        assert all(vals[i + 1] < vals[i] for i in range(len(vals) - 1))


class TestCoverageCurve:
    def test_endpoints(self):
        curve = coverage_curve([0.05, 1.0])
        assert curve.coverage[1] == pytest.approx(0.99442, abs=5e-5)
        assert curve.coverage[0] == pytest.approx(0.9171, abs=5e-4)

    def test_monotone(self):
        grid = np.logspace(-3, 0, 60)
        curve = coverage_curve(grid.tolist())
        covs = curve.coverage
        assert all(covs[i + 1] > covs[i] for i in range(len(covs) - 1))

    @pytest.mark.parametrize("p", [0.0, -0.1, 1.0001])
    def test_domain(self, p):
        with pytest.raises(DomainError):
            coverage_curve([p])


class TestCredibleInterval:
    def test_against_quantile_oracle(self):
        # b/2 +/- Phi^{-1}(0.975) * se / sqrt(2)
        half_width = mp_quantile(0.975) / SQRT2
        lo, hi = credible_interval(Estimate(2.0, 1.0), 0.95)
        assert lo == pytest.approx(1.0 - half_width, abs=1e-12)
        assert hi == pytest.approx(1.0 + half_width, abs=1e-12)
        assert lo == pytest.approx(-0.38590382434967796, abs=1e-12)

    def test_symmetric_about_zero(self):
        lo, hi = credible_interval(Estimate(0.0, 1.0), 0.95)
        assert lo == -hi

    def test_width_independent_of_b(self):
        w1 = np.diff(credible_interval(Estimate(0.0, 1.0), 0.95))[0]
        w2 = np.diff(credible_interval(Estimate(17.0, 1.0), 0.95))[0]
        assert w1 == pytest.approx(w2, abs=1e-12)
        assert w1 == pytest.approx(2 * mp_quantile(0.975) / SQRT2, abs=1e-10)

    @pytest.mark.parametrize("level", [0.0, 1.0, -0.5, 2.0])
    def test_domain(self, level):
        with pytest.raises(DomainError):
            credible_interval(Estimate(1.0, 1.0), level)


class TestPriorDataConflict:
    def test_two_percent_rule(self):
        _, tail = prior_data_conflict(Estimate(3.29, 1.0))
        assert tail == pytest.approx(2 * mp_cdf(-3.29 / SQRT2), abs=1e-14)
        assert tail == pytest.approx(0.0200, abs=5e-4)

    def test_threshold_crossing(self):
        flag, _ = prior_data_conflict(Estimate(3.3, 1.0))
        assert flag is True
        flag, _ = prior_data_conflict(Estimate(3.29, 1.0))
        assert flag is False  # p(3.29) = 0.001001... is not below 0.001

    def test_null(self):
        flag, tail = prior_data_conflict(Estimate(0.0, 1.0))
        assert flag is False
        assert tail == 1.0


class TestImpliedSe:
    def test_unit_case(self):
        assert implied_se(1.96, 0.05) == pytest.approx(1.96 / abs(mp_quantile(0.025)),
                                                       abs=1e-10)
        assert implied_se(1.96, 0.05) == pytest.approx(1.0, abs=1e-3)

    def test_sign_invariance(self):
        assert implied_se(-1.96, 0.05) == implied_se(1.96, 0.05)

    def test_linearity(self):
        assert implied_se(2 * 0.7, 0.2) == pytest.approx(2 * implied_se(0.7, 0.2), rel=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            implied_se(0.0, 0.05)
        with pytest.raises(DomainError):
            implied_se(1.0, 0.0)
        with pytest.raises(DomainError):
            implied_se(1.0, 1.0)


class TestSummaryReporting:
    def test_two_sided_p(self):
        assert two_sided_p(Estimate(1.96, 1.0)) == pytest.approx(0.05, abs=1e-4)

    def test_summary_conflict_flag(self):
        assert posterior(Estimate(4.0, 1.0)).conflict is True
        assert posterior(Estimate(1.0, 1.0)).conflict is False
