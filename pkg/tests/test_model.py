import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

from dtameta.data import Study2x2
from dtameta.errors import NumericFailureError
from dtameta.links import LOGISTIC, PROBIT, get_link
from dtameta.model import (
    ModelParams,
    loglik_terms,
    marginal_log_likelihood_unadjusted,
    moment_init,
    study_probabilities,
    within_study_log_pmf,
)
from dtameta.quadrature import gauss_hermite


class TestStudyProbabilities:
    def test_symmetric_point_gives_half(self):
        pi1, pi0 = study_probabilities(
            ModelParams(0.0, 0.0, 0.0, 1.0, 1.0), 0.0, 0.0, LOGISTIC
        )
        assert pi1 == pytest.approx(0.5, abs=1e-15)
        assert pi0 == pytest.approx(0.5, abs=1e-15)

    def test_sens_spec_inversion_point(self):
        # (theta, alpha) constructed to give sensitivity 0.9 and
        # specificity 0.5 at beta = 0.15 under the logistic link
        pi1, pi0 = study_probabilities(
            ModelParams(1.18418, 2.36837, 0.15, 1.0, 1.0), 0.0, 0.0, LOGISTIC
        )
        assert pi1 == pytest.approx(0.9, abs=5e-6)
        assert 1.0 - pi0 == pytest.approx(0.5, abs=5e-6)

    def test_extreme_negative_location_shift(self):
        # both probabilities share the location direction, so a large
        # negative location random effect drives both towards zero
        pi1, pi0 = study_probabilities(
            ModelParams(0.0, 0.0, 0.0, 1.0, 1.0), -10.0, 0.0, LOGISTIC
        )
        assert pi1 < 1e-4
        assert pi0 < 1e-4

    def test_non_finite_random_effects_rejected(self):
        with pytest.raises(ValueError):
            study_probabilities(
                ModelParams(0.0, 0.0, 0.0, 1.0, 1.0), np.nan, 0.0, LOGISTIC
            )

    @given(
        theta=st.floats(-2, 2),
        alpha=st.floats(-2, 2),
        beta=st.floats(-1, 1),
        link_name=st.sampled_from(["logistic", "probit"]),
    )
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_theta_and_alpha(self, theta, alpha, beta, link_name):
        link = get_link(link_name)
        params = ModelParams(theta, alpha, beta, 1.0, 1.0)
        h = 1e-4
        up_t = study_probabilities(params, h, 0.0, link)
        dn_t = study_probabilities(params, -h, 0.0, link)
        assert up_t[0] > dn_t[0]  # pi1 increasing in location
        assert up_t[1] > dn_t[1]  # pi0 increasing in location
        up_a = study_probabilities(params, 0.0, h, link)
        dn_a = study_probabilities(params, 0.0, -h, link)
        assert up_a[0] > dn_a[0]  # pi1 increasing in accuracy
        assert up_a[1] < dn_a[1]  # pi0 decreasing in accuracy

    def test_clamped_inside_unit_interval(self):
        pi1, pi0 = study_probabilities(
            ModelParams(0.0, 0.0, 0.0, 1.0, 1.0), 60.0, 0.0, LOGISTIC
        )
        assert 0.0 < pi1 < 1.0 and 0.0 < pi0 < 1.0


class TestWithinStudyLogPmf:
    def test_matches_binomial_product(self):
        study = Study2x2(n11=12, n10=5, n01=3, n00=40)
        pi1, pi0 = 0.77, 0.11
        expected = binom.logpmf(12, 15, pi1) + binom.logpmf(5, 45, pi0)
        assert within_study_log_pmf(study, pi1, pi0) == pytest.approx(expected, rel=1e-12)

    def test_degenerate_probability_is_finite(self):
        study = Study2x2(n11=0, n10=0, n01=15, n00=45)
        value = within_study_log_pmf(study, 1e-12, 1e-12)
        assert np.isfinite(value)


class TestMarginalLogLikelihood:
    def test_degenerate_sigmas_collapse_to_fixed_effects(self, small_studies):
        params = ModelParams(0.5, 1.5, 0.1, 1e-8, 1e-8)
        value = marginal_log_likelihood_unadjusted(params, small_studies, LOGISTIC)
        pi1, pi0 = study_probabilities(params, 0.0, 0.0, LOGISTIC)
        direct = sum(within_study_log_pmf(s, pi1, pi0) for s in small_studies)
        assert value == pytest.approx(direct, abs=1e-6)

    def test_deterministic_for_fixed_rule(self, cd64, mid_params, rule21):
        a = marginal_log_likelihood_unadjusted(mid_params, cd64, LOGISTIC, rule21)
        b = marginal_log_likelihood_unadjusted(mid_params, cd64, LOGISTIC, rule21)
        assert a == b

    def test_order_21_vs_41_agreement(self, cd64, mid_params):
        v21 = marginal_log_likelihood_unadjusted(
            mid_params, cd64, LOGISTIC, gauss_hermite(21)
        )
        v41 = marginal_log_likelihood_unadjusted(
            mid_params, cd64, LOGISTIC, gauss_hermite(41)
        )
        assert abs(v21 - v41) < 1e-6 * len(cd64)

    def test_monte_carlo_oracle_single_study(self):
        # brute-force the random-effect integral for one study
        rng = np.random.default_rng(11)
        study = Study2x2(n11=14, n10=6, n01=4, n00=38)
        params = ModelParams(0.8, 1.6, 0.2, 0.5, 0.8)
        n = 400_000
        re_t = rng.normal(0.0, params.sigma_theta, n)
        re_a = rng.normal(0.0, params.sigma_alpha, n)
        pi1, pi0 = study_probabilities(params, re_t, re_a, LOGISTIC)
        lik = np.mean(
            binom.pmf(study.n11, study.n11 + study.n01, pi1)
            * binom.pmf(study.n10, study.n10 + study.n00, pi0)
        )
        value = loglik_terms(params, [study], LOGISTIC).sum()
        assert value == pytest.approx(math.log(lik), abs=0.02)

    def test_probit_link_runs(self, small_studies, mid_params):
        value = marginal_log_likelihood_unadjusted(mid_params, small_studies, PROBIT)
        assert np.isfinite(value)

    def test_requires_studies(self, mid_params):
        with pytest.raises((ValueError, NumericFailureError)):
            marginal_log_likelihood_unadjusted(mid_params, [], LOGISTIC)


class TestModelParams:
    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(ValueError):
            ModelParams(0.0, 0.0, 0.0, 0.0, 1.0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            ModelParams(np.inf, 0.0, 0.0, 1.0, 1.0)

    def test_internal_round_trip(self):
        params = ModelParams(0.3, -1.2, 0.4, 0.7, 1.3)
        back = ModelParams.from_internal(params.to_internal())
        assert np.allclose(back.to_internal(), params.to_internal(), atol=1e-14)


class TestMomentInit:
    def test_finite_and_valid(self, cd64):
        init = moment_init(cd64)
        assert np.all(np.isfinite(init.to_internal()))
        assert init.sigma_theta > 0 and init.sigma_alpha > 0
