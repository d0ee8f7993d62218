"""Summary ROC curve, its area (SAUC), and delta-method intervals."""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import expit, logit, ndtri

from .links import LOGISTIC

_ENDPOINT_EPS = 1e-10
_SAUC_ABS_TOL = 1e-8


@dataclass(frozen=True)
class SrocSummary:
    """SAUC point estimate with its delta-method CI and the summary operating point."""

    sauc: float
    sauc_variance: float
    ci_low: float
    ci_high: float
    sop_sensitivity: float
    sop_specificity: float

    def __post_init__(self):
        if not (0.0 < self.ci_low <= self.sauc <= self.ci_high < 1.0):
            raise ValueError(
                f"CI ordering violated: {self.ci_low}, {self.sauc}, {self.ci_high}"
            )
        if not (0.0 < self.sop_sensitivity < 1.0 and 0.0 < self.sop_specificity < 1.0):
            raise ValueError("summary operating point must lie in (0,1)^2")


def sop(params, link=LOGISTIC):
    """Overall (sensitivity, specificity) with random effects set to zero."""
    e_half = np.exp(0.5 * params.beta)
    sens = 1.0 - link.cdf(-(params.theta + 0.5 * params.alpha) / e_half)
    spec = link.cdf(-(params.theta - 0.5 * params.alpha) * e_half)
    return float(sens), float(spec)


def sroc_curve(alpha, beta, x, link=LOGISTIC):
    """Sensitivity of the summary ROC curve at false positive rate x."""
    x = np.asarray(x, dtype=float)
    if np.any((x <= 0.0) | (x >= 1.0)):
        raise ValueError("sroc_curve is defined on the open interval (0,1)")
    val = 1.0 - link.cdf(-alpha * np.exp(-0.5 * beta) + np.exp(-beta) * link.inv_cdf(1.0 - x))
    return float(val) if val.ndim == 0 else val


def sauc(alpha, beta, link=LOGISTIC):
    """Area under the summary ROC curve, by adaptive quadrature."""
    if not (np.isfinite(alpha) and np.isfinite(beta)):
        raise ValueError("alpha and beta must be finite")
    val, _ = quad(
        lambda x: sroc_curve(alpha, beta, x, link),
        _ENDPOINT_EPS,
        1.0 - _ENDPOINT_EPS,
        epsabs=_SAUC_ABS_TOL,
        limit=200,
    )
    return float(val)


def sauc_gradient(alpha, beta, link=LOGISTIC, rel_step=1e-5):
    """Central-difference gradient of SAUC with respect to (alpha, beta)."""
    ga = rel_step * max(1.0, abs(alpha))
    gb = rel_step * max(1.0, abs(beta))
    da = (sauc(alpha + ga, beta, link) - sauc(alpha - ga, beta, link)) / (2.0 * ga)
    db = (sauc(alpha, beta + gb, link) - sauc(alpha, beta - gb, link)) / (2.0 * gb)
    return np.array([da, db])


def sauc_variance(alpha, beta, cov_ab, link=LOGISTIC):
    """Delta-method variance of the SAUC given the covariance of (alpha, beta)."""
    cov_ab = np.asarray(cov_ab, dtype=float)
    if cov_ab.shape != (2, 2):
        raise ValueError(f"cov_ab must be 2x2, got {cov_ab.shape}")
    if not np.allclose(cov_ab, cov_ab.T, atol=1e-10):
        raise ValueError("cov_ab must be symmetric")
    if np.linalg.eigvalsh(cov_ab).min() < -1e-10:
        raise ValueError("cov_ab must be positive semidefinite")
    grad = sauc_gradient(alpha, beta, link)
    return float(max(grad @ cov_ab @ grad, 0.0))


def sauc_ci(sauc_hat, variance, level=0.95):
    """Logit-transformed delta-method CI; endpoints always inside (0,1)."""
    if not 0.0 < sauc_hat < 1.0:
        raise ValueError("sauc must be in (0,1)")
    if variance < 0.0:
        raise ValueError("variance must be non-negative")
    if variance == 0.0:
        return sauc_hat, sauc_hat
    z = ndtri(0.5 + level / 2.0)
    g = logit(sauc_hat)
    g_prime = 1.0 / (sauc_hat * (1.0 - sauc_hat))
    half = z * g_prime * np.sqrt(variance)
    lo, hi = float(expit(g - half)), float(expit(g + half))
    # expit saturates for extreme half-widths; keep endpoints strictly
    # inside (0,1) and bracketing the point estimate
    tiny = np.finfo(float).tiny
    lo = min(max(lo, tiny), sauc_hat)
    hi = max(min(hi, float(np.nextafter(1.0, 0.0))), sauc_hat)
    return lo, hi


def summarize(params, cov_ab, link=LOGISTIC, level=0.95):
    """Assemble the full SROC summary for fitted parameters."""
    s = sauc(params.alpha, params.beta, link)
    var = sauc_variance(params.alpha, params.beta, cov_ab, link)
    lo, hi = sauc_ci(s, var, level)
    sens, spec = sop(params, link)
    return SrocSummary(
        sauc=s,
        sauc_variance=var,
        ci_low=lo,
        ci_high=hi,
        sop_sensitivity=sens,
        sop_specificity=spec,
    )
