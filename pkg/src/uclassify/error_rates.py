"""Misclassification-rate mathematics: theoretical, estimated, and
conditional rates, Fisher/ideal benchmarks, the Kantorovich bound, and
error densities for elliptically contoured data.

Notation: d = mu_1 - mu_2. The quadratic forms stored on
``TheoreticalMoments`` are d'd, d'S_i d (the score-variance
contribution of a single observation), and d'S^{-1}d (the Mahalanobis
separation, defined for a common covariance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.linalg import cho_factor, cho_solve
from scipy.special import gammaln, ndtr, ndtri

from .data import ValidationError
from .estimators import MomentEstimates


class NumericalError(RuntimeError):
    """Numerical failure: non-SPD matrix, non-convergent quadrature."""


@dataclass(frozen=True)
class TheoreticalMoments:
    """Ground-truth quadratic forms and score variances for one class pair."""

    delta_sq_I: float
    delta_sq_sigma_inv_1: float
    delta_sq_sigma_inv_2: float
    delta_sq_mahalanobis: float
    delta_1_sq: float
    delta_2_sq: float
    p: int
    n1: int
    n2: int
    common_sigma: bool


@dataclass(frozen=True)
class ErrorReport:
    """Pair of one-sided misclassification rates and their average.

    ``rate_2_given_1`` is the probability of assigning to class 2 a
    point truly from class 1, and vice versa.
    """

    rate_total: float
    rate_1_given_2: float
    rate_2_given_1: float
    method: str
    negative_mean_estimate: bool = False


def _check_spd(S: np.ndarray, name: str):
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValidationError(f"{name} must be a square matrix")
    try:
        return cho_factor(S, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"{name} is not symmetric positive definite") from exc


def theoretical_moments(mu1, mu2, Sigma1, Sigma2, n1: int, n2: int) -> TheoreticalMoments:
    """Exact moment ingredients from known population parameters.

    delta_i_sq follows the sampling-variance decomposition
    tr(S_i^2)/n_i + tr(S_i S_j)/n_j + sum_m tr(S_m^2)/(2 n_m (n_m-1)).
    The Mahalanobis form uses the pooled matrix (S_1 + S_2)/2, which
    equals either matrix when they coincide.
    """
    mu1 = np.asarray(mu1, dtype=np.float64).ravel()
    mu2 = np.asarray(mu2, dtype=np.float64).ravel()
    S1 = np.asarray(Sigma1, dtype=np.float64)
    S2 = np.asarray(Sigma2, dtype=np.float64)
    p = mu1.shape[0]
    if mu2.shape[0] != p or S1.shape != (p, p) or S2.shape != (p, p):
        raise ValidationError("mu1, mu2, Sigma1, Sigma2 must share one dimension p")
    if n1 < 2 or n2 < 2:
        raise ValidationError("theoretical moments need n1, n2 >= 2")
    _check_spd(S1, "Sigma1")
    _check_spd(S2, "Sigma2")
    d = mu1 - mu2
    tr11 = float(np.sum(S1 * S1))
    tr22 = float(np.sum(S2 * S2))
    tr12 = float(np.sum(S1 * S2))
    small = tr11 / (2 * n1 * (n1 - 1)) + tr22 / (2 * n2 * (n2 - 1))
    delta_1_sq = tr11 / n1 + tr12 / n2 + small
    delta_2_sq = tr22 / n2 + tr12 / n1 + small
    pooled = 0.5 * (S1 + S2)
    chol = _check_spd(pooled, "pooled covariance")
    maha = float(d @ cho_solve(chol, d))
    return TheoreticalMoments(
        delta_sq_I=float(d @ d),
        delta_sq_sigma_inv_1=float(d @ S1 @ d),
        delta_sq_sigma_inv_2=float(d @ S2 @ d),
        delta_sq_mahalanobis=maha,
        delta_1_sq=delta_1_sq,
        delta_2_sq=delta_2_sq,
        p=p,
        n1=n1,
        n2=n2,
        common_sigma=bool(np.allclose(S1, S2, rtol=1e-12, atol=1e-12)),
    )


def theoretical_error(tm: TheoreticalMoments) -> ErrorReport:
    """Normal-limit error rate Phi(-mean/sd) per class, averaged."""
    mean = tm.delta_sq_I / (2.0 * tm.p)
    var1 = (tm.delta_1_sq + tm.delta_sq_sigma_inv_1) / tm.p**2
    var2 = (tm.delta_2_sq + tm.delta_sq_sigma_inv_2) / tm.p**2
    if var1 <= 0.0 or var2 <= 0.0:
        raise ValidationError("degenerate variance: both covariances are zero")
    r1 = float(ndtr(-mean / math.sqrt(var1)))
    r2 = float(ndtr(-mean / math.sqrt(var2)))
    return ErrorReport(
        rate_total=0.5 * (r1 + r2),
        rate_2_given_1=r1,
        rate_1_given_2=r2,
        method="theoretical",
    )


def estimated_error(est: MomentEstimates) -> ErrorReport:
    """Plug-in error rate from data-driven moment estimates."""
    if not (est.var_i > 0.0 and est.var_j > 0.0):
        raise ValidationError("nonpositive variance estimates; cannot form error rate")
    mean = est.e0 / 2.0
    r1 = float(ndtr(-mean / math.sqrt(est.var_i)))
    r2 = float(ndtr(-mean / math.sqrt(est.var_j)))
    return ErrorReport(
        rate_total=0.5 * (r1 + r2),
        rate_2_given_1=r1,
        rate_1_given_2=r2,
        method="estimated",
        negative_mean_estimate=bool(est.e0 < 0.0),
    )


def conditional_error(model, mu1, mu2, Sigma1, Sigma2) -> ErrorReport:
    """Error rate of a fitted two-class model conditional on its data.

    Simulation use only: the true parameters must be supplied. All
    inner products carry the same 1/p normalization as the classifier.
    """
    centroids = np.asarray(model.centroids_, dtype=np.float64)
    u = np.asarray(model.u_stats_, dtype=np.float64)
    if centroids.shape[0] != 2:
        raise ValidationError("conditional error is defined for two-class models")
    p = centroids.shape[1]
    mu1 = np.asarray(mu1, dtype=np.float64).ravel()
    mu2 = np.asarray(mu2, dtype=np.float64).ravel()
    dbar = centroids[0] - centroids[1]
    m1 = float(mu1 @ dbar) / p - (u[0] - u[1]) / 2.0
    m2 = float(mu2 @ -dbar) / p - (u[1] - u[0]) / 2.0
    v1 = float(dbar @ np.asarray(Sigma1) @ dbar) / p**2
    v2 = float(dbar @ np.asarray(Sigma2) @ dbar) / p**2
    if v1 <= 0.0 or v2 <= 0.0:
        raise ValidationError("coincident centroids: conditional variance is zero")
    r1 = float(ndtr(-m1 / math.sqrt(v1)))
    r2 = float(ndtr(-m2 / math.sqrt(v2)))
    return ErrorReport(
        rate_total=0.5 * (r1 + r2),
        rate_2_given_1=r1,
        rate_1_given_2=r2,
        method="conditional",
    )


def fisher_error(tm: TheoreticalMoments) -> float:
    """Benchmark rate Phi(-sqrt(d'S^{-1}d)/2) for a common covariance."""
    if not tm.common_sigma:
        raise ValidationError("Fisher benchmark requires a common covariance")
    return float(ndtr(-0.5 * math.sqrt(tm.delta_sq_mahalanobis)))


def ideal_error(tm: TheoreticalMoments) -> float:
    """Rate of the known-parameter classifier, Phi(-d'd / (2 sqrt(d'S d)))."""
    if not tm.common_sigma:
        raise ValidationError("ideal rate requires a common covariance")
    if tm.delta_sq_sigma_inv_1 <= 0.0:
        raise ValidationError("degenerate separation: d'S d = 0")
    return float(ndtr(-tm.delta_sq_I / (2.0 * math.sqrt(tm.delta_sq_sigma_inv_1))))


def kantorovich_bound(kappa: float, fisher_rate: float) -> float:
    """Upper bound on the ideal rate from the covariance eigenvalue ratio.

    The separation ratio q = d'd / sqrt(d'S d * d'S^{-1}d) satisfies
    q >= 2 sqrt(kappa)/(1 + kappa) with kappa = lmax/lmin, and the
    ideal rate equals Phi(q * Phi^{-1}(fisher_rate)) exactly, so the
    bound is Phi evaluated at the lower bound on q.
    """
    if not kappa >= 1.0:
        raise ValidationError(f"eigenvalue ratio must be >= 1, got {kappa}")
    if not 0.0 < fisher_rate < 0.5:
        raise ValidationError(f"fisher rate must lie in (0, 0.5), got {fisher_rate}")
    q_lower = 2.0 * math.sqrt(kappa) / (1.0 + kappa)
    return float(ndtr(q_lower * ndtri(fisher_rate)))


def normal_radial(p: int):
    """Radial function of the p-dimensional standard normal density."""
    log_c = -0.5 * p * math.log(2.0 * math.pi)

    def h(s):
        return np.exp(log_c - 0.5 * s)

    return h


def student_t_radial(p: int, nu: float):
    """Radial function of the p-dimensional t density with nu > 2."""
    if nu <= 2:
        raise ValidationError(f"t radial function needs nu > 2, got {nu}")
    log_c = (
        gammaln((nu + p) / 2.0)
        - gammaln(nu / 2.0)
        - 0.5 * p * math.log(nu * math.pi)
    )

    def h(s):
        return np.exp(log_c - 0.5 * (nu + p) * np.log1p(s / nu))

    return h


def _quad(f, a, b, what: str) -> float:
    val, abserr = integrate.quad(f, a, b, epsabs=1e-12, epsrel=1e-10, limit=300)
    if not math.isfinite(val) or abserr > 1e-7 * max(1.0, abs(val)):
        raise NumericalError(
            f"quadrature for {what} did not converge (achieved abs error {abserr:.3e})"
        )
    return val


def elliptical_density(h, p: int, z: float) -> float:
    """Density of the standardized score under an elliptical population.

    Integrates the radial function over the remaining p-1 dimensions:
    q(z) = c_p * int_0^inf s^{(p-3)/2} h(z^2 + s) ds, evaluated after
    the substitution s = u^2 which removes the endpoint singularity.
    """
    if p < 2:
        raise ValidationError(f"elliptical density needs p >= 2, got {p}")
    log_pref = 0.5 * (p - 1) * math.log(math.pi) - gammaln((p - 1) / 2.0)
    pref = math.exp(log_pref)
    zz = float(z) ** 2

    def integrand(u):
        return u ** (p - 2) * h(zz + u * u)

    val = _quad(integrand, 0.0, np.inf, f"elliptical density at z={z}")
    return pref * 2.0 * val


def elliptical_cdf(h, p: int, z: float) -> float:
    """Distribution function of the standardized elliptical score.

    Validates that the density integrates to 1 within 1e-6 before
    integrating to z; uses the symmetry q(z) = q(-z).
    """

    def q(t):
        return elliptical_density(h, p, t)

    half = _quad(q, 0.0, np.inf, "elliptical density normalization")
    total = 2.0 * half
    if abs(total - 1.0) > 1e-6:
        raise NumericalError(
            f"elliptical density integrates to {total:.8f}, expected 1 within 1e-6"
        )
    z = float(z)
    if z == 0.0:
        return 0.5
    if z > 0.0:
        return (half + _quad(q, 0.0, z, "elliptical cdf")) / total
    return (half - _quad(q, z, 0.0, "elliptical cdf")) / total
