"""Bivariate binomial random-effects model: parameters and likelihood.

The marginal likelihood integrates exact within-study binomial
likelihoods over bivariate normal random effects on the cut-off and
accuracy scales. Integration uses mode-centered, scaled Gauss-Hermite
quadrature (see dtameta._kernels); the non-adaptive prior-scaled grid
is exposed separately for the smooth selection-probability integrals.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logit

from . import _kernels
from .data import counts_arrays
from .errors import NumericFailureError
from .links import LOGISTIC
from .quadrature import gauss_hermite

PROB_CLAMP = 1e-12
LOG_SIGMA_FLOOR = np.log(1e-4)


@dataclass(frozen=True)
class ModelParams:
    """Location, accuracy, scale, and random-effect standard deviations."""

    theta: float
    alpha: float
    beta: float
    sigma_theta: float
    sigma_alpha: float

    def __post_init__(self):
        vals = (self.theta, self.alpha, self.beta, self.sigma_theta, self.sigma_alpha)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError(f"parameters must be finite, got {vals}")
        if self.sigma_theta <= 0 or self.sigma_alpha <= 0:
            raise ValueError("random-effect standard deviations must be positive")

    def to_internal(self):
        """Unconstrained optimizer vector (theta, alpha, beta, log sigmas)."""
        return np.array(
            [self.theta, self.alpha, self.beta, np.log(self.sigma_theta), np.log(self.sigma_alpha)]
        )

    @classmethod
    def from_internal(cls, x):
        return cls(
            theta=float(x[0]),
            alpha=float(x[1]),
            beta=float(x[2]),
            sigma_theta=float(np.exp(x[3])),
            sigma_alpha=float(np.exp(x[4])),
        )


def study_probabilities(params, re_theta, re_alpha, link=LOGISTIC):
    """Study-level (TPR, FPR) given realized random effects.

    Clamped away from {0,1} by 1e-12 for downstream log safety.
    """
    if not (np.all(np.isfinite(re_theta)) and np.all(np.isfinite(re_alpha))):
        raise ValueError("random effects must be finite")
    loc = params.theta + re_theta
    acc = params.alpha + re_alpha
    pi1 = 1.0 - link.cdf(-(loc + 0.5 * acc) / np.exp(0.5 * params.beta))
    pi0 = 1.0 - link.cdf(-(loc - 0.5 * acc) / np.exp(-0.5 * params.beta))
    pi1 = np.clip(pi1, PROB_CLAMP, 1.0 - PROB_CLAMP)
    pi0 = np.clip(pi0, PROB_CLAMP, 1.0 - PROB_CLAMP)
    if np.ndim(pi1) == 0:
        return float(pi1), float(pi0)
    return pi1, pi0


def probability_grids(params, link, rule):
    """(pi1, pi0) on the prior-scaled tensor node grid, plus 2-D weights.

    Used by the selection-probability integrals, whose integrands are
    smooth bounded expectations and do not need adaptive centering.
    """
    z = rule.nodes
    wn = rule.normalized_weights()
    re_t = np.sqrt(2.0) * params.sigma_theta * z
    re_a = np.sqrt(2.0) * params.sigma_alpha * z
    pi1, pi0 = study_probabilities(
        params, re_t[:, None], re_a[None, :], link
    )
    return pi1, pi0, wn[:, None] * wn[None, :]


def log_binom_coeffs(studies):
    """Sum of the two log binomial coefficients per study."""
    n11, n10, n01, n00 = counts_arrays(studies)
    n1 = n11 + n01
    n0 = n10 + n00
    return (
        gammaln(n1 + 1) - gammaln(n11 + 1) - gammaln(n01 + 1)
        + gammaln(n0 + 1) - gammaln(n10 + 1) - gammaln(n00 + 1)
    )


def within_study_log_pmf(study, pi1, pi0):
    """Exact log probability of a study's table given (TPR, FPR)."""
    if not (0.0 < pi1 < 1.0 and 0.0 < pi0 < 1.0):
        raise ValueError("probabilities must be strictly inside (0,1)")
    n11, n10, n01, n00 = study.cells()
    lc = (
        gammaln(study.n1 + 1) - gammaln(n11 + 1) - gammaln(n01 + 1)
        + gammaln(study.n0 + 1) - gammaln(n10 + 1) - gammaln(n00 + 1)
    )
    return float(
        lc
        + n11 * np.log(pi1)
        + n01 * np.log1p(-pi1)
        + n10 * np.log(pi0)
        + n00 * np.log1p(-pi0)
    )


def loglik_terms(params, studies, link=LOGISTIC, rule=None):
    """Per-study log marginal likelihood contributions."""
    if rule is None:
        rule = gauss_hermite()
    n11, n10, n01, n00 = counts_arrays(studies)
    vals = _kernels.loglik_terms(
        n11,
        n01,
        n10,
        n00,
        params.theta,
        params.alpha,
        params.beta,
        params.sigma_theta,
        params.sigma_alpha,
        rule.nodes,
        rule.weights,
        link.kind,
    )
    vals = vals + log_binom_coeffs(studies)
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        raise NumericFailureError(
            f"non-finite likelihood contribution for study index {bad[0]}",
            study_index=int(bad[0]),
        )
    return vals


def marginal_log_likelihood_unadjusted(params, studies, link=LOGISTIC, rule=None):
    """Log-likelihood of the model without any publication-selection terms."""
    if len(studies) < 2:
        raise ValueError("need at least 2 studies")
    return float(loglik_terms(params, studies, link, rule).sum())


def moment_init(studies):
    """Starting values from continuity-corrected empirical logits."""
    n11, n10, n01, n00 = counts_arrays(studies)
    n1 = n11 + n01
    n0 = n10 + n00
    y1 = logit((n11 + 0.5) / (n1 + 1.0))
    y0 = logit((n10 + 0.5) / (n0 + 1.0))
    return ModelParams(
        theta=float((y1.mean() + y0.mean()) / 2.0),
        alpha=float(y1.mean() - y0.mean()),
        beta=0.0,
        sigma_theta=0.5,
        sigma_alpha=0.5,
    )
