"""Publication-selection model based on study-level t-statistics.

A study's publication probability is H(gamma0 + gamma1 * t) where t is
the t-statistic of a linear combination of logit sensitivity and logit
specificity (c1, c0 weights; c0 = c1 = 1/sqrt(2) recovers the log
diagnostic odds ratio). The marginal probability that a study with
group sizes (n1, n0) is published is available along two routes: exact
double summation over all possible tables, and a fast normal
approximation to the distribution of the table t-statistic.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, gammaln, logit, ndtr

from .errors import SizeCapError
from .links import LOGISTIC
from .model import probability_grids
from .quadrature import gauss_hermite

EXACT_TERM_CAP = 1_000_000


@dataclass(frozen=True)
class SelectionSpec:
    """Selection mechanism: weights (c0, c1), slope gamma1, marginal probability p."""

    c0: float
    c1: float
    gamma1: float
    p: float
    h_kind: str = "probit"

    def __post_init__(self):
        if abs(self.c0**2 + self.c1**2 - 1.0) > 1e-10:
            raise ValueError(f"c0^2 + c1^2 must equal 1, got {self.c0**2 + self.c1**2}")
        if self.gamma1 < 0:
            raise ValueError("gamma1 must be non-negative")
        if not (0.0 < self.p <= 1.0):
            raise ValueError("p must be in (0, 1]")
        if self.h_kind != "probit":
            raise ValueError(f"unsupported selection CDF {self.h_kind!r}")

    def with_(self, **kwargs):
        from dataclasses import replace

        return replace(self, **kwargs)


@dataclass(frozen=True)
class TStatMoments:
    """Asymptotic mean and variance of the table t-statistic."""

    mean: float
    variance: float

    def __post_init__(self):
        if self.variance <= 0:
            raise ValueError("variance must be positive")


def t_statistic_cells(tp, fp, fn, tn, c0, c1, continuity=False):
    """t-statistic from raw cells; vectorized over array inputs.

    With ``continuity`` on, 0.5 is added to every cell of any table
    containing a zero; otherwise a zero cell is an error.
    """
    tp = np.asarray(tp, dtype=float)
    fp = np.asarray(fp, dtype=float)
    fn = np.asarray(fn, dtype=float)
    tn = np.asarray(tn, dtype=float)
    zero = (tp == 0) | (fp == 0) | (fn == 0) | (tn == 0)
    if np.any(zero):
        if not continuity:
            cells = {"TP": tp, "FP": fp, "FN": fn, "TN": tn}
            name = next(k for k, v in cells.items() if np.any(v == 0))
            raise ValueError(
                f"zero {name} cell: t-statistic undefined without continuity correction"
            )
        shift = 0.5 * zero
        tp = tp + shift
        fp = fp + shift
        fn = fn + shift
        tn = tn + shift
    num = c1 * np.log(tp / fn) + c0 * np.log(tn / fp)
    den = np.sqrt(c1 * c1 * (1.0 / tp + 1.0 / fn) + c0 * c0 * (1.0 / tn + 1.0 / fp))
    out = num / den
    return float(out) if out.ndim == 0 else out


def t_statistic(study, c0, c1, continuity=False):
    """t-statistic of one study's table."""
    return t_statistic_cells(
        study.n11, study.n10, study.n01, study.n00, c0, c1, continuity=continuity
    )


def studies_t_statistics(studies, c0, c1):
    """Observed t-statistics, continuity-corrected only where a cell is zero."""
    tp = np.array([s.n11 for s in studies], float)
    fp = np.array([s.n10 for s in studies], float)
    fn = np.array([s.n01 for s in studies], float)
    tn = np.array([s.n00 for s in studies], float)
    return t_statistic_cells(tp, fp, fn, tn, c0, c1, continuity=True)


def selection_prob(t, gamma0, gamma1):
    """Publication probability H(gamma0 + gamma1 * t) with probit H."""
    if np.isposinf(gamma0):
        return np.ones_like(np.asarray(t, dtype=float)) if np.ndim(t) else 1.0
    val = ndtr(gamma0 + gamma1 * np.asarray(t, dtype=float))
    return float(val) if val.ndim == 0 else val


def t_asymptotic_moments(pi1, pi0, n1, n0, c0, c1, clamp=1e-12):
    """First-order asymptotic moments of the table t-statistic.

    The t denominator is a consistent estimate of the numerator's
    standard error, so the studentized statistic has unit variance to
    first order; the mean is the standardized population key statistic.
    """
    pi1 = np.clip(pi1, clamp, 1.0 - clamp)
    spe = np.clip(1.0 - pi0, clamp, 1.0 - clamp)
    mu_num = c1 * logit(pi1) + c0 * logit(spe)
    v_num = c1 * c1 / (n1 * pi1 * (1.0 - pi1)) + c0 * c0 / (n0 * spe * (1.0 - spe))
    mean = mu_num / np.sqrt(v_num)
    if np.ndim(mean) == 0:
        return TStatMoments(mean=float(mean), variance=1.0)
    return mean, np.ones_like(mean)


def gaussian_probit_expectation(gamma0, gamma1, mean, variance):
    """E[Phi(gamma0 + gamma1*T)] for T ~ N(mean, variance), in closed form."""
    return ndtr((gamma0 + gamma1 * mean) / np.sqrt(1.0 + gamma1 * gamma1 * variance))


def _margin_atoms(n):
    """Logit and variance contributions per atom of one binomial margin.

    Returns (atoms, l_mixed, v_mixed, l_corr, v_corr): the *_mixed
    arrays apply the 0.5 correction only where the margin itself hits a
    boundary; the *_corr arrays apply it everywhere (used when the
    conditioning margin forces a whole-table correction).
    """
    x = np.arange(n + 1, dtype=float)
    boundary = (x == 0) | (x == n)
    l_corr = np.log((x + 0.5) / (n - x + 0.5))
    v_corr = 1.0 / (x + 0.5) + 1.0 / (n - x + 0.5)
    safe_lo = np.maximum(x, 0.5)
    safe_hi = np.maximum(n - x, 0.5)
    l_mixed = np.where(boundary, l_corr, np.log(safe_lo / safe_hi))
    v_mixed = np.where(boundary, v_corr, 1.0 / safe_lo + 1.0 / safe_hi)
    return x, l_mixed, v_mixed, l_corr, v_corr


def _binom_pmf_grid(n, prob):
    """Binomial pmf rows for a vector of probabilities; shape (K, n+1)."""
    x = np.arange(n + 1, dtype=float)
    lb = gammaln(n + 1) - gammaln(x + 1) - gammaln(n - x + 1)
    logp = np.log(prob)[:, None]
    logq = np.log1p(-prob)[:, None]
    return np.exp(lb[None, :] + x[None, :] * logp + (n - x)[None, :] * logq)


def _logit_moments_exact(n, prob):
    """Mean/SD of the success logit of Bin(n, prob) per probability row,
    for both mixed- and fully-corrected atom definitions."""
    _, l_mixed, _, l_corr, _ = _margin_atoms(n)
    pmf = _binom_pmf_grid(n, prob)
    out = []
    for l in (l_mixed, l_corr):
        mean = pmf @ l
        var = pmf @ (l * l) - mean**2
        out.append((mean, np.sqrt(np.maximum(var, 1e-12))))
    (mu_m, sd_m), (mu_c, sd_c) = out
    return mu_m, sd_m, mu_c, sd_c


def _logit_moments_analytic(n, prob):
    """Second-order delta-method logit moments; adequate for large n."""
    mu = logit(prob) + (2.0 * prob - 1.0) / (2.0 * n * prob * (1.0 - prob))
    sd = np.sqrt(1.0 / (n * prob * (1.0 - prob)))
    return mu, sd, mu, sd


def conditional_select_parts(
    params, spec, n1, n0,
    link=LOGISTIC, rule=None, sub_order=9, analytic_threshold=None, clamp=1e-12,
):
    """Atom decomposition of the approximate marginal selection probability.

    Returns flat (weights, t) such that P(select) = sum(weights *
    H(gamma0 + gamma1 * t)) for any selection intercept/slope.

    The smaller margin of the 2x2 table is enumerated exactly; the
    larger margin enters through its success logit, treated as normal
    with exact (or, above ``analytic_threshold``, delta-method) moments
    and integrated on a ``sub_order`` Gauss-Hermite grid. Conditioning
    on the small margin keeps the discreteness that dominates sparse
    tables, while the logit of the large margin is close to normal.
    """
    if rule is None:
        rule = gauss_hermite()
    if (n1 + 1) * (n0 + 1) <= 4096:
        # tiny tables: full enumeration is cheaper than approximating
        q, t_mat = exact_table_distribution(params, spec, n1, n0, link=link, rule=rule)
        return q.ravel(), t_mat.ravel()
    pi1, pi0, w2 = probability_grids(params, link, rule)
    pi1 = np.clip(pi1.ravel(), clamp, 1.0 - clamp)
    spe = np.clip(1.0 - pi0.ravel(), clamp, 1.0 - clamp)
    w = w2.ravel()
    keep = w >= 1e-13
    pi1, spe, w = pi1[keep], spe[keep], w[keep]

    # margin 'a' is enumerated, margin 'b' is the normal-logit margin
    if n1 <= n0:
        n_a, prob_a, c_a = n1, pi1, spec.c1
        n_b, prob_b, c_b = n0, spe, spec.c0
    else:
        n_a, prob_a, c_a = n0, spe, spec.c0
        n_b, prob_b, c_b = n1, pi1, spec.c1

    atoms, l_mixed, v_mixed, l_corr, v_corr = _margin_atoms(n_a)
    pmf_a = _binom_pmf_grid(n_a, prob_a)
    # drop atoms that carry no mass under any node
    live = pmf_a.max(axis=0) >= 1e-13
    atoms, pmf_a = atoms[live], pmf_a[:, live]
    l_mixed, v_mixed = l_mixed[live], v_mixed[live]
    l_corr, v_corr = l_corr[live], v_corr[live]

    if analytic_threshold is not None and n_b >= analytic_threshold:
        mu_m, sd_m, mu_c, sd_c = _logit_moments_analytic(n_b, prob_b)
    else:
        mu_m, sd_m, mu_c, sd_c = _logit_moments_exact(n_b, prob_b)

    z, wz = np.polynomial.hermite_e.hermegauss(sub_order)
    wz = wz / np.sqrt(2.0 * np.pi)

    boundary = ((atoms == 0) | (atoms == n_a))[None, :, None]
    l_a = np.where(boundary[0, :, 0], l_corr, l_mixed)[None, :, None]
    v_a = np.where(boundary[0, :, 0], v_corr, v_mixed)[None, :, None]
    # logit draws of the large margin; corrected set when the enumerated
    # atom forces a whole-table continuity correction
    L_m = mu_m[:, None, None] + sd_m[:, None, None] * z[None, None, :]
    L_c = mu_c[:, None, None] + sd_c[:, None, None] * z[None, None, :]
    L_b = np.where(boundary, L_c, L_m)
    # recover the implied count to evaluate the variance contribution
    total = np.where(boundary, n_b + 1.0, float(n_b))
    y = total * expit(L_b)
    v_b = 1.0 / np.clip(y, 0.5, None) + 1.0 / np.clip(total - y, 0.5, None)

    t = (c_a * l_a + c_b * L_b) / np.sqrt(c_a * c_a * v_a + c_b * c_b * v_b)
    weights = w[:, None, None] * pmf_a[:, :, None] * wz[None, None, :]
    return weights.ravel(), t.ravel()


def marginal_select_prob_approx(
    params, spec, gamma0, n1, n0,
    link=LOGISTIC, rule=None, gamma1=None,
    route="conditional", sub_order=13, var_inflation=1.0,
):
    """Approximate P(select | n1, n0) without enumerating all tables.

    ``route="conditional"`` (default) enumerates the smaller table
    margin exactly and integrates the larger margin's logit on a normal
    sub-grid; accurate to a few 1e-4 even for very sparse tables.
    ``route="moment"`` is the cruder closed form built from the
    first-order asymptotic normality of the t-statistic (no continuity
    correction anywhere); it degrades when the smaller margin is tiny.
    ``gamma1`` overrides ``spec.gamma1`` when profiling it.
    """
    if np.isposinf(gamma0):
        return 1.0
    if rule is None:
        rule = gauss_hermite()
    g1 = spec.gamma1 if gamma1 is None else gamma1
    if route == "conditional":
        weights, t = conditional_select_parts(
            params, spec, n1, n0, link=link, rule=rule, sub_order=sub_order
        )
        total = float(np.sum(weights * ndtr(gamma0 + g1 * t)))
        return min(max(total, 0.0), 1.0)
    if route != "moment":
        raise ValueError(f"unknown route {route!r}")
    pi1, pi0, w2 = probability_grids(params, link, rule)
    mean, var = t_asymptotic_moments(pi1, pi0, n1, n0, spec.c0, spec.c1)
    inner = gaussian_probit_expectation(gamma0, g1, mean, var * var_inflation)
    return float((w2 * inner).sum())


def exact_table_distribution(params, spec, n1, n0, link=LOGISTIC, rule=None, term_cap=EXACT_TERM_CAP):
    """Marginal distribution over all (m11, m00) tables and their t values.

    Returns (q, t) where q[i, j] is the marginal probability of the
    table with TP=i, TN=j (random effects integrated out) and t[i, j]
    its continuity-corrected t-statistic. Any marginal selection
    probability then reduces to sum(q * H(gamma0 + gamma1 t)), which
    makes repeated gamma0 evaluations cheap.
    """
    n_terms = (n1 + 1) * (n0 + 1)
    if n_terms > term_cap:
        raise SizeCapError(
            f"exact summation needs {n_terms} terms (cap {term_cap}); "
            "use marginal_select_prob_approx"
        )
    if rule is None:
        rule = gauss_hermite()

    m11 = np.arange(n1 + 1, dtype=float)
    m00 = np.arange(n0 + 1, dtype=float)
    # candidate table (m11=TP, n1-m11=FN, n0-m00=FP, m00=TN)
    t_mat = t_statistic_cells(
        m11[:, None], (n0 - m00)[None, :], (n1 - m11)[:, None], m00[None, :],
        spec.c0, spec.c1, continuity=True,
    )

    pi1, pi0, w2 = probability_grids(params, link, rule)
    pi1 = pi1.ravel()
    pi0 = pi0.ravel()
    w = w2.ravel()
    lb1 = gammaln(n1 + 1) - gammaln(m11 + 1) - gammaln(n1 - m11 + 1)
    lb0 = gammaln(n0 + 1) - gammaln(m00 + 1) - gammaln(n0 - m00 + 1)
    # binomial pmfs per node: N11 ~ Bin(n1, pi1), N00 ~ Bin(n0, 1 - pi0)
    pmf1 = np.exp(lb1[None, :] + m11[None, :] * np.log(pi1)[:, None]
                  + (n1 - m11)[None, :] * np.log1p(-pi1)[:, None])
    pmf0 = np.exp(lb0[None, :] + m00[None, :] * np.log1p(-pi0)[:, None]
                  + (n0 - m00)[None, :] * np.log(pi0)[:, None])
    q = pmf1.T @ (w[:, None] * pmf0)
    return q, t_mat


def marginal_select_prob_exact(
    params, spec, gamma0, n1, n0, link=LOGISTIC, rule=None, gamma1=None, term_cap=EXACT_TERM_CAP
):
    """Exact P(select | n1, n0): double sum over all tables, quadrature over effects.

    The table t-statistic is continuity-corrected whenever a cell is
    zero; degenerate boundary tables are retained. This is the oracle
    path; cost grows with n1*n0 and is capped.
    """
    if np.isposinf(gamma0):
        return 1.0
    g1 = spec.gamma1 if gamma1 is None else gamma1
    q, t_mat = exact_table_distribution(
        params, spec, n1, n0, link=link, rule=rule, term_cap=term_cap
    )
    total = float(np.sum(q * ndtr(gamma0 + g1 * t_mat)))
    return min(max(total, 0.0), 1.0)
