"""Diagnostics for the pathologies of the improper flat prior.

Under the flat prior the posterior mean of |beta| is the folded-normal mean
at (b, se), which exceeds |b| and so inflates magnitude. For sign inference,
among all unimodal priors symmetric about zero the perceived agreement
P(sgn beta = sgn B | B=b) is bounded by Phi(|b|/se), a bound attained in the
flat limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from .errors import DomainError
from .kernel import folded_normal_mean, std_normal_pdf
from .posterior import Estimate

_FAMILIES = ("normal", "laplace", "uniform")


@dataclass(frozen=True)
class SymmetricPrior:
    """A unimodal density symmetric about zero, from a closed family.

    family: "normal" (sd = scale), "laplace" (Laplace scale), or
    "uniform" (uniform on [-scale, scale]).
    """

    family: str
    scale: float

    def __post_init__(self) -> None:
        if self.family not in _FAMILIES:
            raise DomainError(f"unknown prior family {self.family!r}")
        if not (self.scale > 0.0) or not math.isfinite(self.scale):
            raise DomainError(f"scale must be positive and finite, got {self.scale}")

    def density(self, x: float) -> float:
        s = self.scale
        if self.family == "normal":
            return std_normal_pdf(x / s) / s
        if self.family == "laplace":
            return math.exp(-abs(x) / s) / (2.0 * s)
        return 1.0 / (2.0 * s) if abs(x) <= s else 0.0


def flat_abs_posterior_mean(est: Estimate) -> float:
    """E(|beta| | B=b) under the flat prior: the folded-normal mean at (b, se)."""
    return folded_normal_mean(est.b, est.se)


def abs_estimator_bias(beta: float, se: float) -> float:
    """Bias E_beta|B| - |beta| of |B| as an estimator of |beta|.

    Nonnegative everywhere, maximal at beta = 0 where it equals sqrt(2/pi) se.
    """
    return folded_normal_mean(beta, se) - abs(beta)


def sign_agreement_under_prior(prior: SymmetricPrior, est: Estimate) -> float:
    """P_pi(sgn beta = sgn B | B=b) by adaptive quadrature of the posterior
    over the half-line containing b.

    Requires b != 0 (the sign of the estimate must be defined).
    """
    b, se = est.b, est.se
    if b == 0.0:
        raise DomainError("b must be nonzero; the sign of the estimate is undefined at 0")

    half = abs(b) + 12.0 * se * (1.0 + prior.scale / se)

    def integrand(beta: float) -> float:
        return prior.density(beta) * std_normal_pdf((b - beta) / se) / se

    # quad needs the uniform prior's jump points flagged explicitly
    def _quad(lo: float, hi: float) -> float:
        pts = None
        if prior.family == "uniform":
            pts = [p for p in (-prior.scale, prior.scale) if lo < p < hi]
        val, _err = integrate.quad(
            integrand, lo, hi, points=pts or None, epsabs=1e-13, epsrel=1e-11, limit=400
        )
        return val

    if b > 0:
        num = _quad(0.0, half)
    else:
        num = _quad(-half, 0.0)
    den = _quad(-half, 0.0) + _quad(0.0, half)
    if den <= 0.0 or not math.isfinite(den):
        raise DomainError("posterior normalizer vanished; prior and likelihood do not overlap")
    return num / den
