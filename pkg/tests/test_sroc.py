import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import expit, logit

from dtameta.links import LOGISTIC, PROBIT
from dtameta.model import ModelParams
from dtameta.sroc import (
    sauc,
    sauc_ci,
    sauc_gradient,
    sauc_variance,
    sop,
    sroc_curve,
    summarize,
)


class TestSop:
    def test_symmetry_point(self):
        sens, spec = sop(ModelParams(0.0, 0.0, 0.0, 1.0, 1.0), LOGISTIC)
        assert sens == pytest.approx(0.5, abs=1e-12)
        assert spec == pytest.approx(0.5, abs=1e-12)

    def test_constructed_sens_spec(self):
        sens, spec = sop(ModelParams(1.18418, 2.36837, 0.15, 1.0, 1.0), LOGISTIC)
        assert sens == pytest.approx(0.9, abs=5e-6)
        assert spec == pytest.approx(0.5, abs=5e-6)

    def test_balanced_accuracy_only(self):
        alpha = 2.0 * logit(0.8)
        sens, spec = sop(ModelParams(0.0, alpha, 0.0, 1.0, 1.0), LOGISTIC)
        assert sens == pytest.approx(0.8, abs=1e-12)
        assert spec == pytest.approx(0.8, abs=1e-12)


class TestSrocCurve:
    def test_identity_when_uninformative(self):
        x = np.linspace(0.01, 0.99, 23)
        y = sroc_curve(0.0, 0.0, x, LOGISTIC)
        assert np.allclose(y, x, atol=1e-12)

    def test_passes_through_summary_point(self):
        # at the summary operating point the curve returns the summary
        # sensitivity when evaluated at the summary false positive rate
        params = ModelParams(0.7, 1.9, 0.3, 1.0, 1.0)
        sens, spec = sop(params, LOGISTIC)
        assert sroc_curve(params.alpha, params.beta, 1.0 - spec, LOGISTIC) == pytest.approx(
            sens, abs=1e-10
        )

    @given(
        alpha=st.floats(-1.0, 4.0),
        beta=st.floats(-1.0, 1.0),
        x=st.floats(0.001, 0.999),
    )
    @settings(max_examples=80, deadline=None)
    def test_bounded_and_monotone(self, alpha, beta, x):
        y = sroc_curve(alpha, beta, x, LOGISTIC)
        assert 0.0 <= y <= 1.0
        y2 = sroc_curve(alpha, beta, min(x + 1e-3, 0.9995), LOGISTIC)
        assert y2 >= y - 1e-12


class TestSauc:
    def test_uninformative_gives_half(self):
        for beta in (-0.5, 0.0, 0.4):
            assert sauc(0.0, beta, LOGISTIC) == pytest.approx(0.5, abs=1e-9)

    def test_against_quadrature_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            alpha = rng.uniform(0.2, 3.5)
            beta = rng.uniform(-0.8, 0.8)
            oracle, _ = quad(
                lambda x: sroc_curve(alpha, beta, x, LOGISTIC), 0.0, 1.0, limit=200
            )
            assert sauc(alpha, beta, LOGISTIC) == pytest.approx(oracle, abs=1e-8)

    def test_increasing_in_alpha(self):
        values = [sauc(a, 0.2, LOGISTIC) for a in (0.0, 0.5, 1.5, 3.0)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_probit_link(self):
        value = sauc(1.5, 0.1, PROBIT)
        assert 0.5 < value < 1.0


class TestSaucUncertainty:
    COV = np.array([[0.04, 0.01], [0.01, 0.09]])

    def test_variance_positive(self):
        assert sauc_variance(1.5, 0.2, self.COV, LOGISTIC) > 0.0

    def test_gradient_step_stability(self):
        g1 = sauc_gradient(1.5, 0.2, LOGISTIC, rel_step=1e-5)
        g2 = sauc_gradient(1.5, 0.2, LOGISTIC, rel_step=5e-6)
        rel = np.abs(np.asarray(g1) - np.asarray(g2)) / np.maximum(np.abs(g1), 1e-12)
        assert np.max(rel) < 1e-3

    def test_ci_ordering_and_bounds(self):
        lo, hi = sauc_ci(0.9, 0.001)
        assert 0.0 < lo < 0.9 < hi < 1.0

    def test_ci_respects_logit_transform(self):
        # back-transformed logit interval: endpoints reproducible by hand
        s, var = 0.85, 0.0009
        se_logit = np.sqrt(var) / (s * (1 - s))
        lo, hi = sauc_ci(s, var)
        assert lo == pytest.approx(expit(logit(s) - 1.959963984540054 * se_logit), abs=1e-9)
        assert hi == pytest.approx(expit(logit(s) + 1.959963984540054 * se_logit), abs=1e-9)

    def test_summarize_bundles_everything(self):
        params = ModelParams(0.5, 2.0, 0.2, 1.0, 1.0)
        summary = summarize(params, self.COV, LOGISTIC)
        assert summary.ci_low < summary.sauc < summary.ci_high
        assert 0.0 < summary.sop_sensitivity < 1.0
        assert 0.0 < summary.sop_specificity < 1.0
