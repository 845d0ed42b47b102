"""Empirical-Bayes fit of the hierarchical Gamma model to squared z-values.

Model: per study j a latent phi_j ~ N(phi, sigma^2); within study j each
squared z-value follows Gamma(shape 1/2, mean phi_j + 1). sqrt(phi) is the
ratio of the prior sd to the standard error, the quantity of interest.

The mixed fit maximizes the quadrature-marginalized likelihood over
(phi, log sigma) with Nelder-Mead; the marginal fit pools all records
(phi_hat = mean(z^2) - 1) with a cluster-robust sandwich standard error.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy import optimize
from scipy.special import logsumexp

from .errors import DataValidationError, DomainError
from .kernel import gamma_log_density, std_normal_cdf, std_normal_quantile

logger = logging.getLogger(__name__)

#: log-likelihood stand-in for an impossible Gamma mean (phi_j + 1 <= floor)
LOG_SENTINEL = -1e10

#: protocol censoring threshold on two-sided p-values
CENSOR_P = 0.001

#: smallest retained |z|; smaller values (p rounded to 1) are perturbed up
Z_ABS_FLOOR = 1e-8

_LGAMMA_HALF = math.lgamma(0.5)
_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class ZRecord:
    study_id: str
    p_value: float
    z_abs: float
    z_sq: float


@dataclass(frozen=True)
class StudyGroup:
    study_id: str
    records: tuple[ZRecord, ...]

    def z_sq(self) -> np.ndarray:
        return np.array([r.z_sq for r in self.records])


@dataclass(frozen=True)
class DroppedRecord:
    index: int
    study_id: str
    p_value: float
    reason: str


@dataclass(frozen=True)
class FitConfig:
    gh_nodes: int = 40
    tol: float = 1e-8
    max_iter: int = 2000
    epsilon_mean: float = 1e-12

    def __post_init__(self) -> None:
        if self.gh_nodes < 10:
            raise DomainError(f"gh_nodes must be >= 10, got {self.gh_nodes}")


@dataclass(frozen=True)
class EBFit:
    phi: float
    sigma: float
    sqrt_phi: float
    sqrt_phi_ci: tuple[float, float]
    log_likelihood: float
    converged: bool
    n_records: int
    n_studies: int
    vcov: tuple[tuple[float, float], tuple[float, float]]
    model_kind: str
    flags: tuple[str, ...] = ()

    @property
    def se_phi(self) -> float:
        return math.sqrt(max(self.vcov[0][0], 0.0))

    @property
    def sqrt_phi_se(self) -> float:
        """Delta-method standard error of sqrt(phi)."""
        if self.sqrt_phi <= 0.0:
            return math.inf
        return self.se_phi / (2.0 * self.sqrt_phi)

    def to_dict(self) -> dict:
        return {
            "model_kind": self.model_kind,
            "phi": self.phi,
            "sigma": self.sigma,
            "sqrt_phi": self.sqrt_phi,
            "sqrt_phi_ci": list(self.sqrt_phi_ci),
            "log_likelihood": self.log_likelihood,
            "converged": self.converged,
            "n_records": self.n_records,
            "n_studies": self.n_studies,
            "vcov": [list(row) for row in self.vcov],
            "flags": list(self.flags),
        }


def z_from_p(p: float) -> float:
    """|z| = |Phi^{-1}(p/2)| for a two-sided p-value."""
    if not (0.0 < p < 1.0):
        raise DomainError(f"p must be in (0, 1), got {p}")
    return abs(std_normal_quantile(p / 2.0))


def ingest(
    records: Iterable[tuple[str, float]]
) -> tuple[list[StudyGroup], list[DroppedRecord]]:
    """Convert (study_id, p_value) pairs to grouped z-records.

    Rows with p outside (0, 1) are dropped with reason "invalid"; rows with
    p <= 0.001 are dropped with reason "censored-by-protocol" (the collection
    protocol never records them). Groups are ordered by study_id, records by
    input order.
    """
    kept: dict[str, list[ZRecord]] = {}
    dropped: list[DroppedRecord] = []
    for i, (study_id, p) in enumerate(records):
        study_id = str(study_id)
        try:
            p = float(p)
        except (TypeError, ValueError):
            dropped.append(DroppedRecord(i, study_id, float("nan"), "invalid"))
            continue
        if not (0.0 < p < 1.0) or math.isnan(p):
            dropped.append(DroppedRecord(i, study_id, p, "invalid"))
            continue
        if p <= CENSOR_P:
            dropped.append(DroppedRecord(i, study_id, p, "censored-by-protocol"))
            continue
        z = z_from_p(p)
        if z < Z_ABS_FLOOR:
            logger.warning(
                "record %d (study %s): |z| = %.3g below floor, perturbed to %.0e",
                i, study_id, z, Z_ABS_FLOOR,
            )
            z = Z_ABS_FLOOR
        kept.setdefault(study_id, []).append(ZRecord(study_id, p, z, z * z))
    groups = [StudyGroup(sid, tuple(kept[sid])) for sid in sorted(kept)]
    return groups, dropped


def _study_stats(group: StudyGroup) -> tuple[float, float, int]:
    """Per-study sufficient statistics (const, sum z^2, n) for the shape-1/2 Gamma."""
    z2 = group.z_sq()
    n = len(z2)
    const = -0.5 * float(np.sum(np.log(z2))) - n * _LGAMMA_HALF
    return const, float(np.sum(z2)), n


def study_conditional_loglik(
    group: StudyGroup, phi_j: float, cfg: FitConfig | None = None
) -> float:
    """Log-likelihood of one study's z^2 values given its latent phi_j."""
    cfg = cfg or FitConfig()
    mean = phi_j + 1.0
    if mean <= cfg.epsilon_mean:
        return LOG_SENTINEL
    return sum(gamma_log_density(r.z_sq, 0.5, mean) for r in group.records)


def _study_loglik_at_means(
    const: float, zsum: float, n: int, means: np.ndarray, eps: float
) -> np.ndarray:
    """Vectorized shape-1/2 Gamma log-likelihood of one study at candidate means."""
    out = np.full(means.shape, LOG_SENTINEL)
    ok = means > eps
    m = means[ok]
    out[ok] = const - zsum / (2.0 * m) - n * 0.5 * (np.log(m) + _LOG2)
    return out


def marginal_loglik(
    phi: float,
    sigma: float,
    dataset: Sequence[StudyGroup],
    cfg: FitConfig | None = None,
) -> float:
    """Log-likelihood with the study effect integrated out by Gauss-Hermite
    quadrature (nodes centered at phi, scaled by sigma).

    At sigma = 0 the integral degenerates to the conditional log-likelihood
    at phi_j = phi for every study.
    """
    cfg = cfg or FitConfig()
    if sigma < 0.0:
        raise DomainError(f"sigma must be nonnegative, got {sigma}")
    if sigma == 0.0:
        return sum(study_conditional_loglik(g, phi, cfg) for g in dataset)
    x, w = hermgauss(cfg.gh_nodes)
    nodes = phi + math.sqrt(2.0) * sigma * x
    log_w = np.log(w) - 0.5 * math.log(math.pi)
    means = nodes + 1.0
    total = 0.0
    for g in dataset:
        const, zsum, n = _study_stats(g)
        ll = _study_loglik_at_means(const, zsum, n, means, cfg.epsilon_mean)
        total += float(logsumexp(ll + log_w))
    return total


def _wald_sqrt_ci(phi_hat: float, se_phi: float, level: float = 0.95) -> tuple[float, float]:
    """Wald interval for phi, clamped at 0, mapped through sqrt."""
    z = std_normal_quantile(0.5 * (1.0 + level))
    lo = max(phi_hat - z * se_phi, 0.0)
    hi = max(phi_hat + z * se_phi, 0.0)
    return (math.sqrt(lo), math.sqrt(hi))


def _numerical_hessian(fun, x0: np.ndarray, step: float = 1e-4) -> np.ndarray:
    k = len(x0)
    h = np.array([step * max(1.0, abs(v)) for v in x0])
    hess = np.empty((k, k))
    f0 = fun(x0)
    for i in range(k):
        for j in range(i, k):
            ei = np.zeros(k); ei[i] = h[i]
            ej = np.zeros(k); ej[j] = h[j]
            if i == j:
                val = (fun(x0 + ei) - 2.0 * f0 + fun(x0 - ei)) / (h[i] * h[i])
            else:
                val = (
                    fun(x0 + ei + ej) - fun(x0 + ei - ej)
                    - fun(x0 - ei + ej) + fun(x0 - ei - ej)
                ) / (4.0 * h[i] * h[j])
            hess[i, j] = hess[j, i] = val
    return hess


def _vcov_from_hessian(hess: np.ndarray) -> np.ndarray:
    """Invert the negative log-likelihood Hessian, falling back to pinv."""
    try:
        v = np.linalg.inv(-hess)
    except np.linalg.LinAlgError:
        v = np.linalg.pinv(-hess)
    # guard against roundoff-negative diagonal
    if v[0, 0] < 0.0 or v[1, 1] < 0.0:
        v = np.abs(np.diag(np.diag(v)))
    return v


def _validate_dataset(dataset: Sequence[StudyGroup], min_studies: int, min_records: int) -> int:
    n_records = sum(len(g.records) for g in dataset)
    if len(dataset) < min_studies:
        raise DataValidationError(
            f"need at least {min_studies} studies, got {len(dataset)}"
        )
    if n_records < min_records:
        raise DataValidationError(
            f"need at least {min_records} records, got {n_records}"
        )
    return n_records


def fit_mixed(
    dataset: Sequence[StudyGroup],
    cfg: FitConfig | None = None,
    fix_sigma: float | None = None,
) -> EBFit:
    """Maximum-likelihood fit of (phi, sigma) by Nelder-Mead on (phi, log sigma).

    fix_sigma pins sigma (e.g. 0 to reproduce the pooled fit) and optimizes
    phi alone. The covariance of (phi, log sigma) comes from the numerically
    differenced Hessian at the optimum.
    """
    cfg = cfg or FitConfig()
    n_records = _validate_dataset(dataset, min_studies=2, min_records=10)
    all_z2 = np.concatenate([g.z_sq() for g in dataset])
    phi0 = max(float(np.mean(all_z2)) - 1.0, 0.01)

    flags: list[str] = []
    if fix_sigma is not None:
        def neg_ll_1d(v):
            return -marginal_loglik(float(v[0]), fix_sigma, dataset, cfg)

        res = optimize.minimize(
            neg_ll_1d, np.array([phi0]), method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": cfg.tol, "maxiter": cfg.max_iter},
        )
        phi_hat, sigma_hat = float(res.x[0]), float(fix_sigma)
        ll = -float(res.fun)
        converged = bool(res.success)
        d2 = _numerical_hessian(lambda v: -neg_ll_1d(v), np.array([phi_hat]))[0, 0]
        var_phi = -1.0 / d2 if d2 < 0 else math.inf
        vcov = np.array([[var_phi, 0.0], [0.0, 0.0]])
        flags.append("sigma-fixed")
    else:
        def neg_ll(v):
            return -marginal_loglik(float(v[0]), math.exp(float(v[1])), dataset, cfg)

        starts = [np.array([phi0, math.log(0.5)]), np.array([phi0, math.log(0.1)])]
        res = None
        for x0 in starts:
            res = optimize.minimize(
                neg_ll, x0, method="Nelder-Mead",
                options={"xatol": 1e-9, "fatol": cfg.tol, "maxiter": cfg.max_iter},
            )
            if res.success:
                break
        phi_hat = float(res.x[0])
        sigma_hat = math.exp(float(res.x[1]))
        ll = -float(res.fun)
        converged = bool(res.success)
        hess = _numerical_hessian(lambda v: -neg_ll(v), np.asarray(res.x))
        vcov = _vcov_from_hessian(hess)

    if not converged:
        flags.append("non-convergence")
    if phi_hat <= 0.0:
        flags.append("nonpositive-phi")
    se_phi = math.sqrt(max(vcov[0, 0], 0.0))
    return EBFit(
        phi=phi_hat,
        sigma=sigma_hat,
        sqrt_phi=math.sqrt(max(phi_hat, 0.0)),
        sqrt_phi_ci=_wald_sqrt_ci(phi_hat, se_phi),
        log_likelihood=ll,
        converged=converged,
        n_records=n_records,
        n_studies=len(dataset),
        vcov=((float(vcov[0, 0]), float(vcov[0, 1])), (float(vcov[1, 0]), float(vcov[1, 1]))),
        model_kind="mixed",
        flags=tuple(flags),
    )


def fit_marginal(dataset: Sequence[StudyGroup]) -> EBFit:
    """Pooled fit ignoring the study effect: phi_hat = mean(z^2) - 1, with a
    cluster-robust (study-level) sandwich standard error of the mean."""
    n_records = _validate_dataset(dataset, min_studies=1, min_records=10)
    all_z2 = np.concatenate([g.z_sq() for g in dataset])
    m = float(np.mean(all_z2))
    phi_hat = m - 1.0
    # CR0 sandwich variance of the sample mean with study clusters
    var = sum(
        (float(np.sum(g.z_sq())) - len(g.records) * m) ** 2 for g in dataset
    ) / n_records**2
    se_phi = math.sqrt(var)
    ll = sum(gamma_log_density(float(z2), 0.5, m) for z2 in all_z2)
    flags = ("nonpositive-phi",) if phi_hat < 0.0 else ()
    return EBFit(
        phi=phi_hat,
        sigma=0.0,
        sqrt_phi=math.sqrt(max(phi_hat, 0.0)),
        sqrt_phi_ci=_wald_sqrt_ci(phi_hat, se_phi),
        log_likelihood=ll,
        converged=True,
        n_records=n_records,
        n_studies=len(dataset),
        vcov=((var, 0.0), (0.0, 0.0)),
        model_kind="marginal",
        flags=flags,
    )


def simulate_dataset(
    phi: float,
    sigma: float,
    n_studies: int,
    records_per_study: int,
    seed: int,
    drop_censored: bool = False,
) -> list[StudyGroup]:
    """Draw a synthetic dataset from the hierarchical model.

    phi_j ~ N(phi, sigma^2) truncated to phi_j > -1 + eps by rejection;
    z ~ N(0, phi_j + 1); each record carries p = 2 Phi(-|z|). Censored
    records (p <= 0.001) are retained unless drop_censored is set, so
    recovery tests are unconfounded by censoring.
    """
    if n_studies < 1 or records_per_study < 1:
        raise DomainError("n_studies and records_per_study must be >= 1")
    if sigma < 0.0:
        raise DomainError(f"sigma must be nonnegative, got {sigma}")
    if sigma == 0.0 and phi <= -1.0:
        raise DomainError("phi must exceed -1 when sigma is 0")
    rng = np.random.default_rng(seed)
    eps = 1e-6
    groups: list[StudyGroup] = []
    width = max(3, len(str(n_studies)))
    for j in range(n_studies):
        study_id = f"study-{j + 1:0{width}d}"
        if sigma == 0.0:
            phi_j = phi
        else:
            for _ in range(100_000):
                phi_j = float(rng.normal(phi, sigma))
                if phi_j > -1.0 + eps:
                    break
            else:
                raise DomainError(
                    f"rejection sampling of phi_j failed at phi={phi}, sigma={sigma}"
                )
        z = rng.normal(0.0, math.sqrt(phi_j + 1.0), size=records_per_study)
        recs = []
        for zi in z:
            z_abs = max(abs(float(zi)), Z_ABS_FLOOR)
            p = max(2.0 * std_normal_cdf(-z_abs), 1e-300)
            if drop_censored and p <= CENSOR_P:
                continue
            recs.append(ZRecord(study_id, p, z_abs, z_abs * z_abs))
        if recs:
            groups.append(StudyGroup(study_id, tuple(recs)))
    return groups


def dataset_to_records(dataset: Sequence[StudyGroup]) -> list[tuple[str, float]]:
    """Flatten a grouped dataset back to (study_id, p_value) rows."""
    return [(r.study_id, r.p_value) for g in dataset for r in g.records]
