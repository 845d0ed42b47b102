"""Conjugate normal-normal posterior inference under the shrinkage default prior.

The default prior for a coefficient beta with estimate (b, se) is
N(0, (tau*se)^2) with tau = 1, giving the posterior N(b/2, se^2/2).
The improper flat prior is supported for comparison and reproduces the
sampling distribution N(b, se^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .kernel import std_normal_cdf, std_normal_quantile

_SQRT2 = math.sqrt(2.0)

#: two-sided p-value below which the default prior is in conflict with the data
CONFLICT_P_THRESHOLD = 0.001


@dataclass(frozen=True)
class Estimate:
    """An observed coefficient estimate b with its standard error se."""

    b: float
    se: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.b):
            raise DomainError(f"b must be finite, got {self.b}")
        if not (self.se > 0.0) or not math.isfinite(self.se):
            raise DomainError(f"se must be positive and finite, got {self.se}")

    @property
    def z(self) -> float:
        return self.b / self.se


@dataclass(frozen=True)
class PriorSpec:
    """A zero-mean normal prior with sd = tau * se, or the improper flat prior."""

    kind: str = "zero-mean-normal"
    tau: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("zero-mean-normal", "flat"):
            raise DomainError(f"unknown prior kind {self.kind!r}")
        if self.kind == "zero-mean-normal" and (
            not (self.tau > 0.0) or not math.isfinite(self.tau)
        ):
            raise DomainError(f"tau must be positive and finite, got {self.tau}")

    @classmethod
    def default(cls) -> "PriorSpec":
        return cls("zero-mean-normal", 1.0)

    @classmethod
    def flat(cls) -> "PriorSpec":
        return cls("flat")

    @classmethod
    def scaled(cls, tau: float) -> "PriorSpec":
        return cls("zero-mean-normal", tau)


@dataclass(frozen=True)
class PosteriorSummary:
    post_mean: float
    post_sd: float
    sign_prob_positive: float
    credible_interval: tuple[float, float]
    level: float
    conditional_coverage_95: float
    conflict: bool
    two_sided_p: float


@dataclass(frozen=True)
class CoverageCurve:
    p_values: tuple[float, ...]
    coverage: tuple[float, ...]

    def rows(self):
        return zip(self.p_values, self.coverage)


def _posterior_moments(est: Estimate, prior: PriorSpec) -> tuple[float, float]:
    if prior.kind == "flat":
        return est.b, est.se
    t2 = prior.tau * prior.tau
    shrink = t2 / (1.0 + t2)
    return est.b * shrink, est.se * math.sqrt(shrink)


def sign_probability(est: Estimate, prior: PriorSpec | None = None) -> float:
    """P(beta > 0 | B = b) under the given prior (default: tau = 1)."""
    prior = prior or PriorSpec.default()
    if prior.kind == "flat":
        return std_normal_cdf(est.z)
    t = prior.tau
    return std_normal_cdf(est.z * t / math.sqrt(1.0 + t * t))


def credible_interval(
    est: Estimate, level: float = 0.95, prior: PriorSpec | None = None
) -> tuple[float, float]:
    """Equal-tailed posterior interval; at tau=1 and level 0.95 this is
    b/2 +/- z_{0.975} * se / sqrt(2)."""
    if not (0.0 < level < 1.0):
        raise DomainError(f"level must be in (0, 1), got {level}")
    prior = prior or PriorSpec.default()
    m, s = _posterior_moments(est, prior)
    zcrit = std_normal_quantile(0.5 * (1.0 + level))
    return (m - zcrit * s, m + zcrit * s)


def conditional_coverage(est: Estimate, prior: PriorSpec | None = None) -> float:
    """Posterior probability that the standard 95% interval [b +/- z se]
    contains beta, under the given prior (default: tau = 1).

    At tau = 1 this equals Phi(b/(sqrt(2) se) + z sqrt(2)) - Phi(b/(sqrt(2) se) - z sqrt(2)).
    """
    prior = prior or PriorSpec.default()
    m, s = _posterior_moments(est, prior)
    zcrit = std_normal_quantile(0.975)
    lo = est.b - zcrit * est.se
    hi = est.b + zcrit * est.se
    return std_normal_cdf((hi - m) / s) - std_normal_cdf((lo - m) / s)


def coverage_curve(p_grid) -> CoverageCurve:
    """Conditional coverage of the standard interval as a function of the
    observed two-sided p-value, under the default prior.

    Each p in (0, 1] maps to |b|/se = |Phi^{-1}(p/2)| (p = 1 means b = 0).
    """
    ps = []
    covs = []
    for p in p_grid:
        if not (0.0 < p <= 1.0):
            raise DomainError(f"p must be in (0, 1], got {p}")
        z_abs = 0.0 if p == 1.0 else abs(std_normal_quantile(p / 2.0))
        covs.append(conditional_coverage(Estimate(z_abs, 1.0)))
        ps.append(p)
    return CoverageCurve(tuple(ps), tuple(covs))


def two_sided_p(est: Estimate) -> float:
    """Frequentist two-sided p-value 2 Phi(-|b|/se)."""
    return 2.0 * std_normal_cdf(-abs(est.z))


def prior_data_conflict(est: Estimate) -> tuple[bool, float]:
    """Flag prior-data conflict and return the marginal tail probability.

    The flag is set when the two-sided p-value is below 0.001 (|z| > 3.29).
    Marginally B ~ N(0, 2 se^2) under the default prior, so the tail
    probability of the observed |z| is 2 Phi(-|z|/sqrt(2)); at the threshold
    it is about 2%.
    """
    z_abs = abs(est.z)
    flag = two_sided_p(est) < CONFLICT_P_THRESHOLD
    marginal_tail = 2.0 * std_normal_cdf(-z_abs / _SQRT2)
    return flag, marginal_tail


def implied_se(b: float, p: float) -> float:
    """Standard error implied by an estimate and its two-sided p-value:
    se = |b| / |Phi^{-1}(p/2)|."""
    if not math.isfinite(b) or b == 0.0:
        raise DomainError(f"b must be finite and nonzero, got {b}")
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must be in (0, 1), got {p}")
    return abs(b) / abs(std_normal_quantile(p / 2.0))


def posterior(
    est: Estimate, prior: PriorSpec | None = None, level: float = 0.95
) -> PosteriorSummary:
    """Full posterior summary for an estimate under the given prior."""
    prior = prior or PriorSpec.default()
    m, s = _posterior_moments(est, prior)
    flag, _tail = prior_data_conflict(est)
    return PosteriorSummary(
        post_mean=m,
        post_sd=s,
        sign_prob_positive=sign_probability(est, prior),
        credible_interval=credible_interval(est, level, prior),
        level=level,
        conditional_coverage_95=conditional_coverage(est, prior),
        conflict=flag,
        two_sided_p=two_sided_p(est),
    )
