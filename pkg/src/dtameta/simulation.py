"""Simulation harness: generate study populations, apply selective
publication, and benchmark estimators over seeded replications.

Reproducibility: all draws come from counter-based Philox generators.
A master seed spawns one independent child stream per replication via
numpy's SeedSequence, so replications are order-independent and can run
in parallel without affecting results.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .data import Study2x2
from .estimator import fit_adjusted, fit_unadjusted
from .links import get_link
from .model import ModelParams, study_probabilities
from .quadrature import gauss_hermite
from .selection import SelectionSpec, selection_prob, t_statistic_cells

_INV_SQRT2 = 1.0 / np.sqrt(2.0)

# the six benchmark experiments: (sens, spec, sigma_theta, sigma_alpha)
EXPERIMENTS = {
    1: (0.9, 0.5, 0.6, 1.2),
    2: (0.5, 0.9, 0.6, 1.2),
    3: (0.8, 0.8, 0.6, 1.2),
    4: (0.9, 0.5, 1.2, 0.6),
    5: (0.5, 0.9, 1.2, 0.6),
    6: (0.8, 0.8, 1.2, 0.6),
}


@dataclass(frozen=True)
class SimScenario:
    """Generating configuration for one simulated meta-analysis population."""

    sens: float
    spec: float
    beta: float = 0.15
    sigma_theta: float = 0.6
    sigma_alpha: float = 1.2
    n1_range: tuple = (10, 30)
    n0_range: tuple = (200, 300)
    gamma1: float = 1.5
    p_target: float = 0.7
    c0: float = _INV_SQRT2
    c1: float = _INV_SQRT2
    s_tilde: int = 15
    seed: int = 0
    link: str = "logistic"

    def generating_params(self):
        """Invert the overall (sens, spec) for (theta, alpha) at the given beta."""
        g = get_link(self.link)
        hi = float(g.inv_cdf(self.sens)) * np.exp(0.5 * self.beta)  # theta + alpha/2
        lo = -float(g.inv_cdf(self.spec)) * np.exp(-0.5 * self.beta)  # theta - alpha/2
        return ModelParams(
            theta=(hi + lo) / 2.0,
            alpha=hi - lo,
            beta=self.beta,
            sigma_theta=self.sigma_theta,
            sigma_alpha=self.sigma_alpha,
        )


def experiment_scenario(number, **overrides):
    """One of the six standard experiments (1..6)."""
    try:
        sens, spec, s_t, s_a = EXPERIMENTS[number]
    except KeyError:
        raise ValueError(f"experiment must be 1..6, got {number}")
    kwargs = {"sens": sens, "spec": spec, "sigma_theta": s_t, "sigma_alpha": s_a}
    kwargs.update(overrides)
    return SimScenario(**kwargs)


@dataclass(frozen=True)
class SimStudy:
    study: Study2x2
    t_value: float
    published: Optional[bool] = None


def make_rng(seed):
    """Counter-based generator for a seed or SeedSequence."""
    return np.random.Generator(np.random.Philox(seed))


def generate_population(scenario, rng):
    """Draw a full (pre-selection) population of studies; flags unset."""
    params = scenario.generating_params()
    link = get_link(scenario.link)
    s = scenario.s_tilde
    n1 = rng.integers(scenario.n1_range[0], scenario.n1_range[1] + 1, size=s)
    n0 = rng.integers(scenario.n0_range[0], scenario.n0_range[1] + 1, size=s)
    re_t = rng.normal(0.0, scenario.sigma_theta, size=s)
    re_a = rng.normal(0.0, scenario.sigma_alpha, size=s)
    pi1, pi0 = study_probabilities(params, re_t, re_a, link)
    n11 = rng.binomial(n1, pi1)
    n10 = rng.binomial(n0, pi0)
    out = []
    for i in range(s):
        study = Study2x2(
            int(n11[i]), int(n10[i]), int(n1[i] - n11[i]), int(n0[i] - n10[i]),
            label=f"sim{i:03d}",
        )
        t_val = t_statistic_cells(
            study.n11, study.n10, study.n01, study.n00,
            scenario.c0, scenario.c1, continuity=True,
        )
        out.append(SimStudy(study=study, t_value=float(t_val)))
    return out


def calibrate_gamma0_sim(population, scenario, method="exact", rule=None):
    """Solve gamma0 so the generated population hits the target marginal
    probability, using the true generating parameters.

    Generation targets the arithmetic mean of the per-study selection
    probabilities, mean_s P_s = p, so that on average a fraction p of
    the population is published. (The estimation-side constraint is the
    harmonic-mean form; the two coincide only in degenerate cases.)
    """
    from scipy.optimize import brentq

    from .estimator import _SelectionProbCache

    if not population:
        raise ValueError("population must be non-empty")
    if scenario.p_target >= 1.0:
        return np.inf
    spec = SelectionSpec(
        c0=scenario.c0, c1=scenario.c1, gamma1=scenario.gamma1, p=scenario.p_target
    )
    cache = _SelectionProbCache(
        scenario.generating_params(),
        spec,
        [s.study for s in population],
        method,
        get_link(scenario.link),
        rule if rule is not None else gauss_hermite(),
    )

    def residual(g0):
        return float(np.mean(cache.probs(g0, scenario.gamma1))) - scenario.p_target

    lo, hi = -10.0, 10.0
    f_lo, f_hi = residual(lo), residual(hi)
    for _ in range(60):
        if f_lo > 0.0:
            lo *= 2.0
            f_lo = residual(lo)
        elif f_hi < 0.0:
            hi *= 2.0
            f_hi = residual(hi)
        else:
            break
    return float(brentq(residual, lo, hi, xtol=1e-9))


def apply_selection(population, gamma0, gamma1, rng):
    """Bernoulli publication per study; returns all studies with flags set."""
    flagged = []
    for s in population:
        prob = selection_prob(s.t_value, gamma0, gamma1)
        flagged.append(replace(s, published=bool(rng.random() < prob)))
    return flagged


@dataclass(frozen=True)
class SparsityRates:
    """Percent of studies whose minimum cell is 0 / <=3 / <=5."""

    zero_pct: float
    le3_pct: float
    le5_pct: float


def sparsity_summary(studies):
    if not studies:
        return SparsityRates(0.0, 0.0, 0.0)
    mins = np.array([s.min_cell for s in studies])
    return SparsityRates(
        zero_pct=float(100.0 * np.mean(mins == 0)),
        le3_pct=float(100.0 * np.mean(mins <= 3)),
        le5_pct=float(100.0 * np.mean(mins <= 5)),
    )


def sparsity_replication(scenario, replications=100, master_seed=0):
    """Mean sparsity rates (full population and published) over replications."""
    seqs = np.random.SeedSequence(master_seed).spawn(replications)
    full_rates, pub_rates, pub_fracs = [], [], []
    for seq in seqs:
        rng = make_rng(seq)
        pop = generate_population(scenario, rng)
        gamma0 = calibrate_gamma0_sim(pop, scenario)
        flagged = apply_selection(pop, gamma0, scenario.gamma1, rng)
        published = [s.study for s in flagged if s.published]
        full_rates.append(sparsity_summary([s.study for s in flagged]))
        pub_rates.append(sparsity_summary(published))
        pub_fracs.append(len(published) / len(flagged))
    mean = lambda rates, attr: float(np.mean([getattr(r, attr) for r in rates]))
    return {
        "full": SparsityRates(*(mean(full_rates, a) for a in ("zero_pct", "le3_pct", "le5_pct"))),
        "published": SparsityRates(*(mean(pub_rates, a) for a in ("zero_pct", "le3_pct", "le5_pct"))),
        "published_fraction": float(np.mean(pub_fracs)),
    }


@dataclass(frozen=True)
class EstimatorSummary:
    label: str
    mean_sauc100: float
    sd_sauc100: float
    reps_used: int
    n_failed: int
    sauc_values: tuple = field(repr=False, default=())


@dataclass(frozen=True)
class SimulationSummary:
    scenario: SimScenario
    replications: int
    true_sauc: float
    rows: tuple
    published_fraction: float


def run_simulation_study(
    scenario,
    replications=100,
    estimators=(("mle",), ("proposal", _INV_SQRT2, _INV_SQRT2)),
    master_seed=0,
    gamma1_mode="profile",
    rule=None,
):
    """Replicate generate/select/fit and summarize SAUC x 100 per estimator.

    Estimators: ("mle",) fits only published studies without adjustment;
    ("proposal", c0, c1) runs the selection-adjusted fit at the
    scenario's p target. Per-replication failures are counted and
    excluded.
    """
    from .sroc import sauc as sauc_fn

    if replications < 1:
        raise ValueError("replications must be >= 1")
    link = get_link(scenario.link)
    if rule is None:
        rule = gauss_hermite()
    gen = scenario.generating_params()
    true_sauc = sauc_fn(gen.alpha, gen.beta, link)
    profile = gamma1_mode == "profile"
    gamma1_fixed = None if profile else float(gamma1_mode)

    seqs = np.random.SeedSequence(master_seed).spawn(replications)
    values = {estimator_label(e): [] for e in estimators}
    failures = {estimator_label(e): 0 for e in estimators}
    pub_fracs = []
    for seq in seqs:
        rng = make_rng(seq)
        pop = generate_population(scenario, rng)
        gamma0 = calibrate_gamma0_sim(pop, scenario, rule=rule)
        flagged = apply_selection(pop, gamma0, scenario.gamma1, rng)
        published = [s.study for s in flagged if s.published]
        pub_fracs.append(len(published) / len(flagged))
        if len(published) < 3:
            for e in estimators:
                failures[estimator_label(e)] += 1
            continue
        base = None
        for est in estimators:
            key = estimator_label(est)
            try:
                if est[0] == "mle":
                    fit = fit_unadjusted(published, link=link, rule=rule)
                    base = fit
                elif est[0] == "proposal":
                    c0, c1 = est[1], est[2]
                    spec = SelectionSpec(
                        c0=c0, c1=c1,
                        gamma1=1.0 if profile else gamma1_fixed,
                        p=scenario.p_target,
                    )
                    if base is not None and profile:
                        # full internal vector: starts the quasi-Newton
                        # polish directly from the unadjusted optimum
                        init = np.concatenate(
                            [base.params.to_internal(), [spec.gamma1]]
                        )
                    elif base is not None:
                        init = base.params
                    else:
                        init = None
                    fit = fit_adjusted(
                        published, spec, init=init,
                        profile_gamma1=profile, link=link, rule=rule,
                    )
                else:
                    raise ValueError(f"unknown estimator {est!r}")
                values[key].append(fit.sroc.sauc)
            except Exception:
                failures[key] += 1
    rows = []
    for est in estimators:
        key = estimator_label(est)
        vals = np.array(values[key])
        rows.append(
            EstimatorSummary(
                label=key,
                mean_sauc100=float(100.0 * vals.mean()) if vals.size else float("nan"),
                sd_sauc100=float(100.0 * vals.std(ddof=1)) if vals.size > 1 else float("nan"),
                reps_used=int(vals.size),
                n_failed=failures[key],
                sauc_values=tuple(float(v) for v in vals),
            )
        )
    return SimulationSummary(
        scenario=scenario,
        replications=replications,
        true_sauc=true_sauc,
        rows=tuple(rows),
        published_fraction=float(np.mean(pub_fracs)),
    )


def estimator_label(est):
    """Stable label for an estimator tuple."""
    if est[0] == "mle":
        return "mle-published"
    return f"proposal(c0={est[1]:.4f},c1={est[2]:.4f})"
