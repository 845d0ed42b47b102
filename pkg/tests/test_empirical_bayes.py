import math

import numpy as np
import pytest
from scipy import integrate

from defaultprior import (
    DataValidationError,
    DomainError,
    FitConfig,
    StudyGroup,
    ZRecord,
    fit_marginal,
    fit_mixed,
    gamma_log_density,
    ingest,
    marginal_loglik,
    simulate_dataset,
    std_normal_pdf,
    std_normal_quantile,
    study_conditional_loglik,
    z_from_p,
)
from defaultprior.empirical_bayes import LOG_SENTINEL, dataset_to_records


def make_group(study_id, z_sq_values):
    recs = tuple(
        ZRecord(study_id, float("nan"), math.sqrt(z2), z2) for z2 in z_sq_values
    )
    return StudyGroup(study_id, recs)


class TestIngest:
    def test_z_conversion(self):
        groups, dropped = ingest([("s1", 0.05)])
        assert not dropped
        rec = groups[0].records[0]
        assert rec.z_abs == pytest.approx(1.959963984540054, abs=1e-10)
        assert rec.z_sq == pytest.approx(rec.z_abs**2)

    def test_censoring_rule(self):
        groups, dropped = ingest([("s1", 0.0005), ("s1", 0.001), ("s1", 0.5)])
        assert len(dropped) == 2
        assert all(d.reason == "censored-by-protocol" for d in dropped)
        assert len(groups[0].records) == 1

    def test_invalid_p(self):
        groups, dropped = ingest([("s1", 0.0), ("s1", 1.0), ("s1", -3.0), ("s1", "x")])
        assert not groups
        assert [d.reason for d in dropped] == ["invalid"] * 4

    def test_near_one_p_retained_with_floor(self):
        groups, dropped = ingest([("s1", 1 - 1e-9)])
        assert not dropped
        assert groups[0].records[0].z_abs == pytest.approx(1e-8)

    def test_deterministic_grouping(self):
        rows = [("b", 0.2), ("a", 0.3), ("b", 0.4), ("a", 0.5)]
        groups, _ = ingest(rows)
        assert [g.study_id for g in groups] == ["a", "b"]
        assert [r.p_value for r in groups[0].records] == [0.3, 0.5]
        assert [r.p_value for r in groups[1].records] == [0.2, 0.4]


class TestStudyConditionalLoglik:
    def test_single_record_chi2_identity(self):
        g = make_group("s", [1.0])
        assert study_conditional_loglik(g, 0.0) == pytest.approx(
            math.log(std_normal_pdf(1.0)), rel=1e-12
        )

    def test_boundary_sentinel(self):
        g = make_group("s", [1.0])
        assert study_conditional_loglik(g, -1.0) == LOG_SENTINEL

    def test_additivity(self):
        single = study_conditional_loglik(make_group("s", [2.3]), 0.5)
        double = study_conditional_loglik(make_group("s", [2.3, 2.3]), 0.5)
        assert double == pytest.approx(2 * single, rel=1e-12)


class TestMarginalLoglik:
    def test_sigma_zero_is_pooled(self):
        ds = simulate_dataset(1.0, 0.4, 10, 8, seed=5)
        phi = 1.2
        pooled = sum(
            gamma_log_density(r.z_sq, 0.5, phi + 1.0)
            for g in ds for r in g.records
        )
        assert marginal_loglik(phi, 0.0, ds) == pytest.approx(pooled, rel=1e-12)

    def test_node_doubling(self):
        ds = simulate_dataset(1.6384, 0.3, 50, 12, seed=9)
        a = marginal_loglik(1.6, 0.3, ds, FitConfig(gh_nodes=40))
        b = marginal_loglik(1.6, 0.3, ds, FitConfig(gh_nodes=80))
        assert abs(a - b) < 1e-6

    def test_single_study_matches_adaptive_quadrature(self):
        ds = simulate_dataset(1.0, 0.0, 1, 12, seed=2)
        phi, sigma = 1.1, 0.15

        def integrand(phi_j):
            ll = study_conditional_loglik(ds[0], phi_j)
            return math.exp(ll) * std_normal_pdf((phi_j - phi) / sigma) / sigma

        oracle, _ = integrate.quad(integrand, phi - 10 * sigma, phi + 10 * sigma,
                                   limit=400)
        got = marginal_loglik(phi, sigma, ds)
        assert got == pytest.approx(math.log(oracle), abs=1e-6)

    def test_negative_sigma_rejected(self):
        ds = simulate_dataset(1.0, 0.0, 2, 5, seed=1)
        with pytest.raises(DomainError):
            marginal_loglik(1.0, -0.1, ds)


class TestFitMarginal:
    def test_null_calibration(self):
        ds = [make_group("a", [1.0] * 6), make_group("b", [1.0] * 6)]
        fit = fit_marginal(ds)
        assert fit.phi == pytest.approx(0.0, abs=1e-12)
        assert fit.sqrt_phi == 0.0

    def test_mean_minus_one(self):
        # mean z^2 of 2.6384 gives phi = 1.6384, sqrt(phi) = 1.28
        vals = [2.6384 - 0.5, 2.6384 + 0.5] * 6
        ds = [make_group("a", vals[:6]), make_group("b", vals[6:])]
        fit = fit_marginal(ds)
        assert fit.phi == pytest.approx(1.6384, abs=1e-12)
        assert fit.sqrt_phi == pytest.approx(1.28, abs=1e-12)

    def test_underdispersed_flagged(self):
        ds = [make_group("a", [0.5] * 6), make_group("b", [0.5] * 6)]
        fit = fit_marginal(ds)
        assert fit.phi < 0
        assert fit.sqrt_phi == 0.0
        assert "nonpositive-phi" in fit.flags

    def test_single_study_still_computable(self):
        ds = [make_group("a", list(np.linspace(0.5, 3.5, 12)))]
        fit = fit_marginal(ds)
        assert math.isfinite(fit.se_phi)
        assert fit.n_studies == 1

    def test_sandwich_variance_known_case(self):
        # two clusters of one record each: sandwich = sum of squared deviations / N^2
        ds = [make_group("a", [1.0] * 5 + [3.0] * 5), make_group("b", [2.0] * 10)]
        fit = fit_marginal(ds)
        m = np.mean([1.0] * 5 + [3.0] * 5 + [2.0] * 10)
        var = ((20.0 - 10 * m) ** 2 + (20.0 - 10 * m) ** 2) / 20**2
        assert fit.vcov[0][0] == pytest.approx(var, rel=1e-12)

    def test_too_few_records(self):
        with pytest.raises(DataValidationError):
            fit_marginal([make_group("a", [1.0, 2.0])])


class TestFitMixed:
    def test_recovery_single_seed(self):
        ds = simulate_dataset(1.6384, 0.5, 50, 12, seed=100)
        fit = fit_mixed(ds)
        assert fit.converged
        assert abs(fit.sqrt_phi - 1.28) <= 3 * fit.sqrt_phi_se

    def test_sigma_zero_matches_marginal(self):
        ds = simulate_dataset(1.6384, 0.5, 30, 10, seed=4)
        fixed = fit_mixed(ds, fix_sigma=0.0)
        closed = fit_marginal(ds)
        assert fixed.phi == pytest.approx(closed.phi, abs=1e-6)

    def test_pooled_mle_identity(self):
        # argmax of the pooled shape-1/2 Gamma likelihood is mean(z^2) - 1
        ds = simulate_dataset(2.0, 0.0, 20, 10, seed=8)
        fixed = fit_mixed(ds, fix_sigma=0.0)
        z2 = np.concatenate([g.z_sq() for g in ds])
        assert fixed.phi == pytest.approx(float(np.mean(z2)) - 1.0, abs=1e-6)

    def test_local_optimality(self):
        ds = simulate_dataset(1.6384, 0.5, 30, 10, seed=4)
        fit = fit_mixed(ds)
        best = marginal_loglik(fit.phi, fit.sigma, ds)
        for dphi in (-1e-3, 1e-3):
            for dlogsig in (-1e-3, 0.0, 1e-3):
                if dphi == 0.0 and dlogsig == 0.0:
                    continue
                ll = marginal_loglik(
                    fit.phi + dphi, fit.sigma * math.exp(dlogsig), ds
                )
                assert ll <= best + 1e-7

    def test_single_study_rejected(self):
        ds = simulate_dataset(1.0, 0.0, 1, 20, seed=3)
        with pytest.raises(DataValidationError):
            fit_mixed(ds)

    def test_vcov_psd(self):
        ds = simulate_dataset(1.6384, 0.5, 30, 10, seed=4)
        fit = fit_mixed(ds)
        v = np.array(fit.vcov)
        assert np.all(np.linalg.eigvalsh(v) >= -1e-10)

    def test_ci_ordering(self):
        ds = simulate_dataset(1.6384, 0.5, 30, 10, seed=4)
        fit = fit_mixed(ds)
        lo, hi = fit.sqrt_phi_ci
        assert lo <= fit.sqrt_phi <= hi


class TestSimulate:
    def test_determinism(self):
        a = simulate_dataset(1.0, 0.3, 5, 7, seed=42)
        b = simulate_dataset(1.0, 0.3, 5, 7, seed=42)
        assert a == b

    def test_null_moments(self):
        ds = simulate_dataset(0.0, 0.0, 100, 50, seed=13)
        z2 = np.concatenate([g.z_sq() for g in ds])
        se = float(np.std(z2, ddof=1)) / math.sqrt(len(z2))
        assert abs(float(np.mean(z2)) - 1.0) <= 3 * se

    def test_inflated_moments(self):
        ds = simulate_dataset(1.6384, 0.0, 100, 50, seed=14)
        z2 = np.concatenate([g.z_sq() for g in ds])
        se = float(np.std(z2, ddof=1)) / math.sqrt(len(z2))
        assert abs(float(np.mean(z2)) - 2.6384) <= 3 * se

    def test_roundtrip_through_p(self):
        ds = simulate_dataset(1.0, 0.2, 5, 10, seed=21)
        for g in ds:
            for r in g.records:
                assert z_from_p(r.p_value) == pytest.approx(r.z_abs, abs=1e-9)

    def test_ingest_roundtrip(self):
        ds = simulate_dataset(1.0, 0.2, 5, 10, seed=21)
        groups, dropped = ingest(dataset_to_records(ds))
        kept = {(r.study_id, r.p_value) for g in groups for r in g.records}
        for g in ds:
            for r in g.records:
                if r.p_value > 0.001:
                    assert (r.study_id, r.p_value) in kept
        assert all(d.reason == "censored-by-protocol" for d in dropped)

    def test_drop_censored_flag(self):
        full = simulate_dataset(10.0, 0.0, 20, 20, seed=6)
        trimmed = simulate_dataset(10.0, 0.0, 20, 20, seed=6, drop_censored=True)
        n_full = sum(len(g.records) for g in full)
        n_trim = sum(len(g.records) for g in trimmed)
        assert n_trim < n_full
        assert all(r.p_value > 0.001 for g in trimmed for r in g.records)

    def test_domain(self):
        with pytest.raises(DomainError):
            simulate_dataset(1.0, -0.1, 5, 5, seed=0)
        with pytest.raises(DomainError):
            simulate_dataset(-1.5, 0.0, 5, 5, seed=0)
        with pytest.raises(DomainError):
            simulate_dataset(1.0, 0.1, 0, 5, seed=0)


class TestFitConfig:
    def test_gh_nodes_floor(self):
        with pytest.raises(DomainError):
            FitConfig(gh_nodes=5)

    def test_quantile_consistency(self):
        # the z-conversion uses the same quantile as the kernel
        assert z_from_p(0.05) == abs(std_normal_quantile(0.025))
