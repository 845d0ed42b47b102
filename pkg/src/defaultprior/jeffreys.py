"""Jeffreys prior for theta = |beta| under the sign/magnitude split.

With a Bernoulli(1/2) prior on the sign, the likelihood for theta is the
two-component normal mixture
    f(b | theta) = (1/2se) [phi((b+theta)/se) + phi((b-theta)/se)],
and the Jeffreys prior is sqrt of the Fisher information
    I(theta) = E_theta [ (d/dtheta log f(b|theta))^2 ],
which has no closed form and is computed here by quadrature. I(0) = 0 and
se^2 I(theta) -> 1 as theta grows, so the (unnormalized) prior sqrt(I)
rises from 0 toward 1/se.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class QuadratureConfig:
    """Fixed Gauss-Legendre quadrature settings for the information integral."""

    nodes: int = 300

    def __post_init__(self) -> None:
        if self.nodes < 10:
            raise DomainError(f"nodes must be >= 10, got {self.nodes}")


@dataclass(frozen=True)
class JeffreysCurve:
    se: float
    theta_grid: tuple[float, ...]
    density_values: tuple[float, ...]

    def rows(self):
        return zip(self.theta_grid, self.density_values)


def _check_args(theta: float, se: float) -> None:
    if not (theta >= 0.0) or not math.isfinite(theta):
        raise DomainError(f"theta must be nonnegative and finite, got {theta}")
    if not (se > 0.0) or not math.isfinite(se):
        raise DomainError(f"se must be positive and finite, got {se}")


def mixture_density(b: float, theta: float, se: float) -> float:
    """Density of the sign-mixed estimate: (1/2se)[phi((b+theta)/se) + phi((b-theta)/se)]."""
    _check_args(theta, se)
    a = (b + theta) / se
    c = (b - theta) / se
    return (0.5 / se) * _INV_SQRT_2PI * (math.exp(-0.5 * a * a) + math.exp(-0.5 * c * c))


def score_theta(b: float, theta: float, se: float) -> float:
    """d/dtheta log f(b | theta), evaluated analytically.

    Equals [-(b+theta) phi((b+theta)/se) + (b-theta) phi((b-theta)/se)]
    / (se^2 [phi((b+theta)/se) + phi((b-theta)/se)]); even in b and
    identically zero at theta = 0.
    """
    _check_args(theta, se)
    a = (b + theta) / se
    c = (b - theta) / se
    la = -0.5 * a * a
    lc = -0.5 * c * c
    m = max(la, lc)
    wa = math.exp(la - m)
    wc = math.exp(lc - m)
    return (-a * wa + c * wc) / (se * (wa + wc))


def _score_theta_vec(b: np.ndarray, theta: float, se: float) -> np.ndarray:
    a = (b + theta) / se
    c = (b - theta) / se
    la = -0.5 * a * a
    lc = -0.5 * c * c
    m = np.maximum(la, lc)
    wa = np.exp(la - m)
    wc = np.exp(lc - m)
    return (-a * wa + c * wc) / (se * (wa + wc))


def _mixture_density_vec(b: np.ndarray, theta: float, se: float) -> np.ndarray:
    a = (b + theta) / se
    c = (b - theta) / se
    return (0.5 / se) * _INV_SQRT_2PI * (np.exp(-0.5 * a * a) + np.exp(-0.5 * c * c))


def fisher_information(
    theta: float, se: float, quad: QuadratureConfig | None = None
) -> float:
    """Fisher information I(theta) of the sign mixture, by Gauss-Legendre
    quadrature over b.

    The integrand is even in b, so only [0, theta + 12 se] is integrated
    (split at theta where the mixture peak sits), covering all but ~1e-30
    of the mass.
    """
    _check_args(theta, se)
    quad = quad or QuadratureConfig()
    x, w = np.polynomial.legendre.leggauss(quad.nodes)
    b_max = theta + 12.0 * se

    total = 0.0
    panels = [(0.0, theta), (theta, b_max)] if theta > 0.0 else [(0.0, b_max)]
    for lo, hi in panels:
        if hi <= lo:
            continue
        mid = 0.5 * (lo + hi)
        halfwidth = 0.5 * (hi - lo)
        nodes = mid + halfwidth * x
        weights = halfwidth * w
        s = _score_theta_vec(nodes, theta, se)
        f = _mixture_density_vec(nodes, theta, se)
        total += float(np.sum(weights * s * s * f))
    info = 2.0 * total
    if not math.isfinite(info):
        raise NumericalError(
            f"Fisher information quadrature failed at theta={theta}, se={se}: got {info}"
        )
    return max(info, 0.0)


def jeffreys_curve(
    se: float,
    theta_max: float | None = None,
    n_points: int = 201,
    quad: QuadratureConfig | None = None,
) -> JeffreysCurve:
    """Unnormalized Jeffreys prior sqrt(I(theta)) on a uniform theta grid.

    Defaults to 201 points on [0, 6 se]. The curve starts at 0 and
    approaches 1/se.
    """
    if not (se > 0.0) or not math.isfinite(se):
        raise DomainError(f"se must be positive and finite, got {se}")
    if theta_max is None:
        theta_max = 6.0 * se
    if not (theta_max > 0.0):
        raise DomainError(f"theta_max must be positive, got {theta_max}")
    if n_points < 2:
        raise DomainError(f"n_points must be >= 2, got {n_points}")
    grid = np.linspace(0.0, theta_max, n_points)
    values = tuple(math.sqrt(fisher_information(float(t), se, quad)) for t in grid)
    return JeffreysCurve(se, tuple(float(t) for t in grid), values)
