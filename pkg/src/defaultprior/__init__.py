"""Shrinkage-default Bayesian inference for regression coefficients.

Given an approximately normal, unbiased estimate b with standard error se,
the default prior N(0, se^2) yields the posterior N(b/2, se^2/2). This
package provides that posterior inference, diagnostics for the flat prior's
magnitude/sign pathologies, a numerically computed Jeffreys prior under the
sign/magnitude reparameterization, and an empirical-Bayes fit of a
hierarchical Gamma model to collections of two-sided p-values.
"""

from .errors import DataValidationError, DomainError, NumericalError
from .kernel import (
    folded_normal_mean,
    gamma_log_density,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
)
from .posterior import (
    CoverageCurve,
    Estimate,
    PosteriorSummary,
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
from .flatprior import (
    SymmetricPrior,
    abs_estimator_bias,
    flat_abs_posterior_mean,
    sign_agreement_under_prior,
)
from .jeffreys import (
    JeffreysCurve,
    QuadratureConfig,
    fisher_information,
    jeffreys_curve,
    mixture_density,
    score_theta,
)
from .empirical_bayes import (
    EBFit,
    FitConfig,
    StudyGroup,
    ZRecord,
    fit_marginal,
    fit_mixed,
    ingest,
    marginal_loglik,
    simulate_dataset,
    study_conditional_loglik,
    z_from_p,
)
from .verification import SimulationReport, run_all

__version__ = "0.1.0"

__all__ = [
    "CoverageCurve",
    "DataValidationError",
    "DomainError",
    "EBFit",
    "Estimate",
    "FitConfig",
    "JeffreysCurve",
    "NumericalError",
    "PosteriorSummary",
    "PriorSpec",
    "QuadratureConfig",
    "SimulationReport",
    "StudyGroup",
    "SymmetricPrior",
    "ZRecord",
    "abs_estimator_bias",
    "conditional_coverage",
    "coverage_curve",
    "credible_interval",
    "fisher_information",
    "fit_marginal",
    "fit_mixed",
    "flat_abs_posterior_mean",
    "folded_normal_mean",
    "gamma_log_density",
    "implied_se",
    "ingest",
    "jeffreys_curve",
    "marginal_loglik",
    "mixture_density",
    "posterior",
    "prior_data_conflict",
    "run_all",
    "score_theta",
    "sign_agreement_under_prior",
    "sign_probability",
    "simulate_dataset",
    "std_normal_cdf",
    "std_normal_pdf",
    "std_normal_quantile",
    "study_conditional_loglik",
    "two_sided_p",
    "z_from_p",
]
