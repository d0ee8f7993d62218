"""Maximum likelihood fitting, with and without publication-selection adjustment.

The adjusted likelihood conditions on publication: the intercept gamma0
of the selection function is not free but solved, at every objective
evaluation, from the empirical constraint that the harmonic mean of the
per-study marginal selection probabilities equals the user-specified
marginal probability p. The remaining parameters (model parameters and,
by default, the selection slope gamma1) are maximized jointly.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln, log_ndtr, ndtr, ndtri

from . import model as model_mod
from . import sroc as sroc_mod
from .errors import ConstraintInfeasibleError
from .links import LOGISTIC
from .model import LOG_SIGMA_FLOOR, ModelParams
from .optimize import (
    central_diff_hessian,
    covariance_from_hessian,
    hybrid_minimize,
)
from .quadrature import gauss_hermite
from .selection import (
    SelectionSpec,
    conditional_select_parts,
    exact_table_distribution,
    studies_t_statistics,
    t_statistic_cells,
)

CONSTRAINT_TOL = 1e-8
_P_FLOOR = 1e-300

DEFAULT_C_PAIRS = (
    (1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0)),
    (1.0, 0.0),
    (0.0, 1.0),
)
DEFAULT_P_GRID = (0.2, 0.4, 0.6, 0.8, 1.0)

# upper bound for the profiled selection slope; see fit_adjusted
GAMMA1_CAP = 10.0


@dataclass(frozen=True)
class FitResult:
    """Converged estimates plus covariance, SROC summary, and diagnostics."""

    params: ModelParams
    gamma0: float
    gamma1: float
    loglik: float
    covariance: np.ndarray = field(repr=False)
    sroc: sroc_mod.SrocSummary
    converged: bool
    boundary_hit: bool
    p: float
    spec: Optional[SelectionSpec]
    few_studies_warning: bool = False
    covariance_projected: bool = False


@dataclass(frozen=True)
class SensitivityRow:
    p: float
    spec: SelectionSpec
    result: Optional[FitResult]
    error: Optional[str] = None

    @property
    def key(self):
        return (self.p, self.spec.c0, self.spec.c1)


@dataclass(frozen=True)
class SensitivityTable:
    rows: tuple

    def __post_init__(self):
        keys = [r.key for r in self.rows]
        if len(set(keys)) != len(keys):
            raise ValueError("sensitivity rows must be uniquely keyed by (p, c0, c1)")

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)


def _bin_assignment(t_values, nbins):
    """Linear-split assignment of t atoms onto an evenly spaced grid.

    Each atom's weight is later divided between the two nearest grid
    points, preserving the total weight and the weighted mean of t
    exactly; with hundreds of bins the curvature error through the
    probit selection function is negligible.
    """
    lo = float(t_values.min())
    hi = float(t_values.max())
    grid = np.linspace(lo, hi, nbins)
    if hi - lo < 1e-12:
        idx = np.zeros(t_values.shape, dtype=np.intp)
        frac = np.zeros(t_values.shape)
        return idx, frac, grid
    pos = (t_values - lo) / (hi - lo) * (nbins - 1)
    idx = np.minimum(pos.astype(np.intp), nbins - 2)
    frac = pos - idx
    return idx, frac, grid


def _support_range(pmf):
    """First/last column whose mass is non-negligible under any node."""
    live = pmf.max(axis=0) >= 1e-13
    first = int(live.argmax())
    last = len(live) - int(live[::-1].argmax())
    return first, last


def _compress_weights(weights, idx, frac, nbins):
    out = np.bincount(idx, weights * (1.0 - frac), minlength=nbins)
    out += np.bincount(idx + 1, weights * frac, minlength=nbins)
    return out


class _SelectionStatics:
    """Parameter-independent pieces of the fast selection-probability route.

    The t value of every candidate 2x2 table, and its split across
    histogram bins, depend only on the group sizes and the contrast
    weights — not on the model parameters — so they are computed once
    per (studies, contrast) pair and reused across every objective
    evaluation of a fit. Each evaluation then only recomputes the
    table probabilities. Studies whose table enumeration would exceed
    ``TERM_CAP`` entries get a streaming fallback instead.
    """

    NBINS = 512
    TERM_CAP = 200_000

    def __init__(self, studies, spec, nbins=NBINS):
        self.nbins = nbins
        self.entries = []
        # concatenated per-margin column vectors so a single exp call per
        # margin covers every study
        a1_m, a1_lb, a0_m, a0_lb = [], [], [], []
        off1 = off0 = 0
        for s in studies:
            n1, n0 = s.n1, s.n0
            if (n1 + 1) * (n0 + 1) > self.TERM_CAP:
                self.entries.append(None)
                continue
            m11 = np.arange(n1 + 1, dtype=float)
            m00 = np.arange(n0 + 1, dtype=float)
            t = t_statistic_cells(
                m11[:, None], (n0 - m00)[None, :], (n1 - m11)[:, None], m00[None, :],
                spec.c0, spec.c1, continuity=True,
            )
            lb1 = gammaln(n1 + 1) - gammaln(m11 + 1) - gammaln(n1 - m11 + 1)
            lb0 = gammaln(n0 + 1) - gammaln(m00 + 1) - gammaln(n0 - m00 + 1)
            idx, frac, grid = _bin_assignment(t.ravel(), nbins)
            shape = (n1 + 1, n0 + 1)
            self.entries.append(
                (
                    n1,
                    n0,
                    slice(off1, off1 + n1 + 1),
                    slice(off0, off0 + n0 + 1),
                    idx.reshape(shape),
                    frac.reshape(shape),
                    grid,
                )
            )
            a1_m.append(m11)
            a1_lb.append(lb1)
            a0_m.append(m00)
            a0_lb.append(lb0)
            off1 += n1 + 1
            off0 += n0 + 1
        self.m1_cat = np.concatenate(a1_m) if a1_m else np.empty(0)
        self.lb1_cat = np.concatenate(a1_lb) if a1_lb else np.empty(0)
        self.n1_cat = np.concatenate(
            [np.full(e[0] + 1, float(e[0])) for e in self.entries if e is not None]
        ) if a1_m else np.empty(0)
        self.m0_cat = np.concatenate(a0_m) if a0_m else np.empty(0)
        self.lb0_cat = np.concatenate(a0_lb) if a0_lb else np.empty(0)
        self.n0_cat = np.concatenate(
            [np.full(e[1] + 1, float(e[1])) for e in self.entries if e is not None]
        ) if a0_m else np.empty(0)


_STATICS_CACHE = {}


def _selection_statics(studies, spec):
    key = (tuple((s.n1, s.n0) for s in studies), spec.c0, spec.c1)
    statics = _STATICS_CACHE.get(key)
    if statics is None:
        if len(_STATICS_CACHE) > 16:
            _STATICS_CACHE.clear()
        statics = _SelectionStatics(studies, spec)
        _STATICS_CACHE[key] = statics
    return statics


_PROB_CACHE = {}


def _selection_prob_cache(params, spec, studies, method, link, rule):
    """Memoized per-study selection-probability cache.

    A Hessian or profile evaluation repeats the same model parameters
    with several gamma1 values; the distribution tensors depend only on
    the arguments below, so rebuilding them would redo the expensive
    part of the objective for nothing.
    """
    key = (params, spec.c0, spec.c1, tuple(studies), method, link.name, rule.order)
    cache = _PROB_CACHE.get(key)
    if cache is None:
        if len(_PROB_CACHE) > 8:
            _PROB_CACHE.clear()
        cache = _SelectionProbCache(params, spec, studies, method, link, rule)
        _PROB_CACHE[key] = cache
    return cache


class _SelectionProbCache:
    """Per-study marginal selection probabilities as a function of gamma0.

    Both routes reduce each study to a weighted set of t atoms that
    depend on the model parameters but not on gamma, so the expensive
    work happens once per objective evaluation and the gamma0
    root-finding iterations are cheap matrix operations.
    """

    def __init__(self, params, spec, studies, method, link, rule):
        self.params = params
        self.spec = spec
        self.studies = studies
        self.method = method
        self.link = link
        self.rule = rule
        if method == "approx":
            statics = _selection_statics(studies, spec)
            nbins = statics.nbins
            bin_w = np.empty((len(studies), nbins))
            bin_t = np.empty((len(studies), nbins))
            pi1, pi0, w2 = model_mod.probability_grids(params, link, rule)
            pi1, pi0, w = pi1.ravel(), pi0.ravel(), w2.ravel()
            # nodes below this weight carry < 5e-5 total mass and cannot
            # move any selection probability beyond that; renormalizing
            # keeps the weights an exact expectation
            keep = w >= 1e-7
            pi1, pi0, w = pi1[keep], pi0[keep], w[keep]
            w = w / w.sum()
            # one exp call per margin covering all studies at once
            pmf1_cat = np.exp(
                statics.lb1_cat
                + statics.m1_cat * np.log(pi1)[:, None]
                + (statics.n1_cat - statics.m1_cat) * np.log1p(-pi1)[:, None]
            )
            pmf0_cat = np.exp(
                statics.lb0_cat
                + statics.m0_cat * np.log1p(-pi0)[:, None]
                + (statics.n0_cat - statics.m0_cat) * np.log(pi0)[:, None]
            )
            # flush negligible probabilities to an exact zero: summed over
            # every node and margin value they shift a selection probability
            # by well under 1e-10, and zeroing them both avoids subnormal
            # arithmetic and tightens the per-study support windows below
            pmf1_cat[pmf1_cat < 1e-16] = 0.0
            pmf0_cat[pmf0_cat < 1e-16] = 0.0
            wcol = w[:, None]
            for i, (s, entry) in enumerate(zip(studies, statics.entries)):
                if entry is None:
                    wa, ta = conditional_select_parts(
                        params, spec, s.n1, s.n0,
                        link=link, rule=rule, sub_order=9, analytic_threshold=150,
                    )
                    idx, frac, grid = _bin_assignment(ta, nbins)
                    bin_w[i] = _compress_weights(wa, idx, frac, nbins)
                    bin_t[i] = grid
                    continue
                _, _, s1, s0, idx2, frac2, grid = entry
                pmf1 = pmf1_cat[:, s1]
                pmf0 = pmf0_cat[:, s0]
                # restrict the table sum to the margin values that carry
                # mass under some quadrature node
                r0, r1 = _support_range(pmf1)
                c0b, c1b = _support_range(pmf0)
                q = (pmf1[:, r0:r1].T @ (wcol * pmf0[:, c0b:c1b])).ravel()
                idx = idx2[r0:r1, c0b:c1b].ravel()
                frac = frac2[r0:r1, c0b:c1b].ravel()
                bin_w[i] = _compress_weights(q, idx, frac, nbins)
                bin_t[i] = grid
            self._bin_w = bin_w
            self._bin_t = bin_t
        else:
            # (q, t) tables depend on the parameters but not on gamma,
            # so the expensive double summation happens once here
            self._tables = [
                exact_table_distribution(params, spec, s.n1, s.n0, link=link, rule=rule)
                for s in studies
            ]

    def probs(self, gamma0, gamma1):
        if np.isposinf(gamma0):
            return np.ones(len(self.studies))
        if self.method == "approx":
            vals = self._bin_w * ndtr(gamma0 + gamma1 * self._bin_t)
            return np.clip(vals.sum(axis=1), 0.0, 1.0)
        return np.array(
            [
                np.clip(np.sum(q * ndtr(gamma0 + gamma1 * t)), 0.0, 1.0)
                for q, t in self._tables
            ]
        )

    def solve_gamma0(self, gamma1, p, hint=None):
        """Root of mean(1/P) = 1/p; P is increasing in gamma0 so the
        residual is monotone decreasing and brentq applies. A ``hint``
        (e.g. the root at nearby parameters) narrows the bracket."""
        if p >= 1.0:
            return np.inf
        if gamma1 == 0.0:
            # selection no longer depends on t, so P = H(gamma0) for every
            # study and the constraint inverts in closed form
            return float(ndtri(p))

        def residual(g0):
            probs = np.clip(self.probs(g0, gamma1), _P_FLOOR, 1.0)
            return np.mean(1.0 / probs) - 1.0 / p

        if hint is not None and np.isfinite(hint):
            lo, hi = hint - 0.25, hint + 0.25
            r_lo, r_hi = residual(lo), residual(hi)
            step = 0.5
            for _ in range(8):
                if r_lo > 0.0:
                    break
                lo -= step
                step *= 2.0
                r_lo = residual(lo)
            step = 0.5
            for _ in range(8):
                if r_hi < 0.0:
                    break
                hi += step
                step *= 2.0
                r_hi = residual(hi)
            if r_lo > 0.0 > r_hi:
                return brentq(residual, lo, hi, xtol=CONSTRAINT_TOL * 1e-2)

        lo, hi = -10.0, 10.0
        for _ in range(60):
            if residual(hi) < 0.0:
                break
            hi *= 2.0
        for _ in range(60):
            if residual(lo) > 0.0:
                break
            lo *= 2.0
        r_lo, r_hi = residual(lo), residual(hi)
        if not (r_lo > 0.0 > r_hi):
            achievable = (
                1.0 / (np.mean(1.0 / np.clip(self.probs(lo, gamma1), _P_FLOOR, 1.0))),
                1.0 / (np.mean(1.0 / np.clip(self.probs(hi, gamma1), _P_FLOOR, 1.0))),
            )
            raise ConstraintInfeasibleError(
                f"no gamma0 satisfies the constraint for p={p}",
                achievable=achievable,
            )
        return brentq(residual, lo, hi, xtol=CONSTRAINT_TOL * 1e-2)


def solve_gamma0(params, spec, studies, method="approx", link=LOGISTIC, rule=None, gamma1=None):
    """Solve the selection intercept from the marginal-probability constraint."""
    if not studies:
        raise ValueError("studies must be non-empty")
    if rule is None:
        rule = gauss_hermite()
    g1 = spec.gamma1 if gamma1 is None else gamma1
    cache = _selection_prob_cache(params, spec, studies, method, link, rule)
    return cache.solve_gamma0(g1, spec.p)


def selection_probabilities(
    params, spec, studies, gamma0, gamma1, method="approx", link=LOGISTIC, rule=None
):
    """Per-study marginal publication probabilities at the given selection."""
    if rule is None:
        rule = gauss_hermite()
    cache = _selection_prob_cache(params, spec, studies, method, link, rule)
    return cache.probs(gamma0, gamma1)


def adjusted_log_likelihood(params, gamma1, spec, studies, method="approx", link=LOGISTIC, rule=None):
    """Log-likelihood conditional on publication, with gamma0 freshly solved.

    The term for the group-size distribution is a parameter-free
    constant and is dropped. At p=1 the selection terms vanish and the
    value equals the unadjusted log-likelihood.
    """
    if rule is None:
        rule = gauss_hermite()
    value, _ = _adjusted_loglik_g0(params, gamma1, spec, studies, method, link, rule)
    return value


def _adjusted_loglik_g0(params, gamma1, spec, studies, method, link, rule, hint=None):
    base = model_mod.loglik_terms(params, studies, link, rule).sum()
    cache = _selection_prob_cache(params, spec, studies, method, link, rule)
    gamma0 = cache.solve_gamma0(gamma1, spec.p, hint=hint)
    if np.isposinf(gamma0):
        return float(base), gamma0
    t_obs = studies_t_statistics(studies, spec.c0, spec.c1)
    log_a = log_ndtr(gamma0 + gamma1 * t_obs)
    log_p = np.log(np.clip(cache.probs(gamma0, gamma1), _P_FLOOR, 1.0))
    return float(base + log_a.sum() - log_p.sum()), gamma0


def observed_information(objective, at, rel_step=1e-4, return_projected=False):
    """Covariance as the inverse central-difference Hessian of ``objective``.

    ``objective`` must be the negative log-likelihood; negative
    eigenvalues of the inverse below -1e-6 trigger a nearest-PSD
    projection.
    """
    hess = central_diff_hessian(objective, np.asarray(at, dtype=float), rel_step=rel_step)
    cov, projected = covariance_from_hessian(hess)
    if return_projected:
        return cov, projected
    return cov


def _finish_fit(x_opt, gamma0, gamma1, loglik, neg_objective, p, spec, link, few_studies):
    params = ModelParams.from_internal(x_opt[:5])
    cov, projected = covariance_from_hessian(
        central_diff_hessian(neg_objective, x_opt)
    )
    summary = sroc_mod.summarize(params, cov[1:3, 1:3], link)
    boundary = bool(min(x_opt[3], x_opt[4]) <= LOG_SIGMA_FLOOR + 1e-8)
    return params, cov, summary, boundary, projected


def fit_unadjusted(studies, init=None, link=LOGISTIC, rule=None):
    """MLE of the bivariate binomial model ignoring publication selection."""
    if rule is None:
        rule = gauss_hermite()
    few = len(studies) < 3
    if init is None:
        init = model_mod.moment_init(studies)
    x0 = init.to_internal()

    def neg(x):
        return -model_mod.loglik_terms(
            ModelParams.from_internal(x), studies, link, rule
        ).sum()

    bounds = [(None, None)] * 3 + [(LOG_SIGMA_FLOOR, None)] * 2
    res = hybrid_minimize(neg, x0, bounds=bounds)
    params, cov, summary, boundary, projected = _finish_fit(
        res.x, np.inf, 0.0, -res.fun, neg, 1.0, None, link, few
    )
    return FitResult(
        params=params,
        gamma0=np.inf,
        gamma1=0.0,
        loglik=-res.fun,
        covariance=cov,
        sroc=summary,
        converged=res.converged,
        boundary_hit=boundary,
        p=1.0,
        spec=None,
        few_studies_warning=few,
        covariance_projected=projected,
    )


def fit_adjusted(
    studies,
    spec,
    init=None,
    profile_gamma1=True,
    method="approx",
    link=LOGISTIC,
    rule=None,
):
    """Constrained MLE conditional on publication for a given selection spec.

    ``init`` may be a ModelParams (gamma1 starts at spec.gamma1) or a
    full internal vector from a previous fit. With ``profile_gamma1``
    the slope is estimated jointly; otherwise it stays at spec.gamma1.
    """
    if rule is None:
        rule = gauss_hermite()
    few = len(studies) < 3
    if spec.p >= 1.0:
        base = fit_unadjusted(studies, init=init if isinstance(init, ModelParams) else None,
                              link=link, rule=rule)
        return FitResult(
            params=base.params,
            gamma0=np.inf,
            gamma1=spec.gamma1,
            loglik=base.loglik,
            covariance=base.covariance,
            sroc=base.sroc,
            converged=base.converged,
            boundary_hit=base.boundary_hit,
            p=1.0,
            spec=spec,
            few_studies_warning=base.few_studies_warning,
            covariance_projected=base.covariance_projected,
        )

    if init is None:
        init = fit_unadjusted(studies, link=link, rule=rule).params
    # starts are always near an optimum of a related objective (the
    # unadjusted MLE or a neighbouring grid cell), so the quasi-Newton
    # polish runs first and the simplex is only a fallback
    if isinstance(init, ModelParams):
        x0 = np.concatenate([init.to_internal(), [spec.gamma1]])
    else:
        x0 = np.asarray(init, dtype=float)
        if profile_gamma1 and len(x0) == 5:
            x0 = np.concatenate([x0, [spec.gamma1]])

    # seeding the root search with the previous gamma0 keeps its bracket
    # narrow across the optimizer's many nearby evaluations
    g0_hint = [None]

    if profile_gamma1:
        def neg(y):
            params = ModelParams.from_internal(y[:5])
            val, g0 = _adjusted_loglik_g0(
                params, y[5], spec, studies, method, link, rule, hint=g0_hint[0]
            )
            g0_hint[0] = g0
            return -val

        # above GAMMA1_CAP the probit selection is effectively a step
        # function in t and the profile likelihood flattens out, so the
        # cap acts as a boundary rather than a restriction
        bounds = [(None, None)] * 3 + [(LOG_SIGMA_FLOOR, None)] * 2 + [(0.0, GAMMA1_CAP)]
        res = hybrid_minimize(neg, x0, bounds=bounds, polish_first=True)
        gamma1_hat = float(res.x[5])
    else:
        def neg(x):
            params = ModelParams.from_internal(x)
            val, g0 = _adjusted_loglik_g0(
                params, spec.gamma1, spec, studies, method, link, rule, hint=g0_hint[0]
            )
            g0_hint[0] = g0
            return -val

        bounds = [(None, None)] * 3 + [(LOG_SIGMA_FLOOR, None)] * 2
        res = hybrid_minimize(neg, x0[:5], bounds=bounds, polish_first=True)
        gamma1_hat = spec.gamma1

    params = ModelParams.from_internal(res.x[:5])
    _, gamma0_hat = _adjusted_loglik_g0(params, gamma1_hat, spec, studies, method, link, rule)
    cov, projected = covariance_from_hessian(central_diff_hessian(neg, res.x))
    summary = sroc_mod.summarize(params, cov[1:3, 1:3], link)
    boundary = bool(min(res.x[3], res.x[4]) <= LOG_SIGMA_FLOOR + 1e-8)
    if profile_gamma1:
        boundary = boundary or gamma1_hat <= 0.0 or gamma1_hat >= GAMMA1_CAP - 1e-8
    return FitResult(
        params=params,
        gamma0=float(gamma0_hat),
        gamma1=gamma1_hat,
        loglik=-res.fun,
        covariance=cov,
        sroc=summary,
        converged=res.converged,
        boundary_hit=boundary,
        p=spec.p,
        spec=spec,
        few_studies_warning=few,
        covariance_projected=projected,
    )


def sensitivity_analysis(
    studies,
    c_pairs=DEFAULT_C_PAIRS,
    p_grid=DEFAULT_P_GRID,
    gamma1_policy="profile",
    gamma1_init=1.0,
    method="approx",
    link=LOGISTIC,
    rule=None,
):
    """Fit the selection model over a grid of mechanisms and p values.

    The p=1 baseline is fitted once and shared; within each mechanism
    the fits warm-start from the previous (larger) p. Individual cell
    failures are recorded per row and the run continues.
    """
    if rule is None:
        rule = gauss_hermite()
    if not p_grid:
        raise ValueError("p_grid must be non-empty")
    if any(not 0.0 < p <= 1.0 for p in p_grid):
        raise ValueError("p-grid values must be in (0, 1]")
    profile = gamma1_policy == "profile"
    gamma1 = gamma1_init if profile else float(gamma1_policy)

    baseline = fit_unadjusted(studies, link=link, rule=rule)
    rows = []
    if 1.0 in p_grid:
        c0, c1 = c_pairs[0]
        spec1 = SelectionSpec(c0=c0, c1=c1, gamma1=gamma1, p=1.0)
        rows.append(
            SensitivityRow(
                p=1.0,
                spec=spec1,
                result=fit_adjusted(studies, spec1, init=baseline.params,
                                    profile_gamma1=False, method=method, link=link, rule=rule),
            )
        )
    descending = sorted((p for p in p_grid if p < 1.0), reverse=True)
    for c0, c1 in c_pairs:
        warm = np.concatenate([baseline.params.to_internal(), [gamma1]])
        for p in descending:
            spec = SelectionSpec(c0=c0, c1=c1, gamma1=gamma1, p=p)
            try:
                fit = fit_adjusted(
                    studies, spec, init=warm, profile_gamma1=profile,
                    method=method, link=link, rule=rule,
                )
                rows.append(SensitivityRow(p=p, spec=spec, result=fit))
                warm = np.concatenate(
                    [fit.params.to_internal(), [fit.gamma1 if profile else gamma1]]
                )
            except Exception as exc:  # keep scanning the grid
                rows.append(SensitivityRow(p=p, spec=spec, result=None, error=str(exc)))
    return SensitivityTable(rows=tuple(rows))
