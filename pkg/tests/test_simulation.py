
import numpy as np
import pytest

from dtameta.data import Study2x2
from dtameta.links import LOGISTIC
from dtameta.model import study_probabilities
from dtameta.simulation import (
    EXPERIMENTS,
    apply_selection,
    calibrate_gamma0_sim,
    experiment_scenario,
    generate_population,
    make_rng,
    sparsity_summary,
)


class TestScenario:
    def test_generating_params_invert_sens_spec(self):
        scen = experiment_scenario(1)
        params = scen.generating_params()
        assert params.theta == pytest.approx(1.18418, abs=5e-5)
        assert params.alpha == pytest.approx(2.36837, abs=5e-5)
        pi1, pi0 = study_probabilities(params, 0.0, 0.0, LOGISTIC)
        assert pi1 == pytest.approx(scen.sens, abs=1e-9)
        assert 1.0 - pi0 == pytest.approx(scen.spec, abs=1e-9)

    def test_experiment_table(self):
        assert set(EXPERIMENTS) == {1, 2, 3, 4, 5, 6}
        scen2 = experiment_scenario(2)
        assert (scen2.sens, scen2.spec) == (0.5, 0.9)
        scen6 = experiment_scenario(6)
        assert (scen6.sigma_theta, scen6.sigma_alpha) == (1.2, 0.6)

    def test_overrides(self):
        scen = experiment_scenario(1, s_tilde=25, seed=3)
        assert scen.s_tilde == 25 and scen.seed == 3

    def test_unknown_experiment_rejected(self):
        with pytest.raises((KeyError, ValueError)):
            experiment_scenario(7)


class TestPopulation:
    def test_sizes_within_ranges(self):
        scen = experiment_scenario(1, s_tilde=200)
        pop = generate_population(scen, make_rng(0))
        assert len(pop) == 200
        for sim in pop:
            s = sim.study
            n1, n0 = s.n11 + s.n01, s.n10 + s.n00
            assert 10 <= n1 <= 30
            assert 200 <= n0 <= 300
            assert np.isfinite(sim.t_value)

    def test_reproducible_by_seed(self):
        scen = experiment_scenario(3, s_tilde=50)
        a = generate_population(scen, make_rng(42))
        b = generate_population(scen, make_rng(42))
        c = generate_population(scen, make_rng(43))
        assert [s.study for s in a] == [s.study for s in b]
        assert [s.study for s in a] != [s.study for s in c]

    def test_mean_tpr_matches_scenario_without_heterogeneity(self):
        scen = experiment_scenario(1, sigma_theta=1e-8, sigma_alpha=1e-8, s_tilde=10_000)
        pop = generate_population(scen, make_rng(1))
        tpr = np.mean([s.study.n11 / (s.study.n11 + s.study.n01) for s in pop])
        assert tpr == pytest.approx(scen.sens, abs=0.01)


class TestSelectionCalibration:
    def test_marginal_probability_hits_target(self):
        scen = experiment_scenario(1, s_tilde=300)
        pop = generate_population(scen, make_rng(5))
        gamma0 = calibrate_gamma0_sim(pop, scen)
        # published fraction over many Bernoulli draws approaches p_target
        rng = make_rng(6)
        fractions = []
        for _ in range(40):
            published = apply_selection(pop, gamma0, scen.gamma1, rng)
            fractions.append(np.mean([s.published for s in published]))
        assert np.mean(fractions) == pytest.approx(scen.p_target, abs=0.02)

    def test_selection_keeps_population_order_and_flags(self):
        scen = experiment_scenario(2, s_tilde=40)
        pop = generate_population(scen, make_rng(9))
        gamma0 = calibrate_gamma0_sim(pop, scen)
        out = apply_selection(pop, gamma0, scen.gamma1, make_rng(10))
        assert len(out) == len(pop)
        assert all(o.study == p.study for o, p in zip(out, pop))
        assert all(o.published in (True, False) for o in out)

    def test_higher_t_more_likely_published(self):
        scen = experiment_scenario(1, s_tilde=4000)
        pop = generate_population(scen, make_rng(2))
        gamma0 = calibrate_gamma0_sim(pop, scen)
        out = apply_selection(pop, gamma0, scen.gamma1, make_rng(3))
        t_pub = np.mean([o.t_value for o in out if o.published])
        t_unpub = np.mean([o.t_value for o in out if not o.published])
        assert t_pub > t_unpub


class TestSparsity:
    def test_counts_by_hand(self):
        studies = [
            Study2x2(n11=0, n10=4, n01=5, n00=40),   # zero cell
            Study2x2(n11=2, n10=4, n01=5, n00=40),   # min cell 2 (<=3, <=5)
            Study2x2(n11=4, n10=6, n01=5, n00=40),   # min cell 4 (<=5)
            Study2x2(n11=9, n10=8, n01=7, n00=40),   # min cell 7
        ]
        rates = sparsity_summary(studies)
        assert rates.zero_pct == pytest.approx(25.0)
        assert rates.le3_pct == pytest.approx(50.0)
        assert rates.le5_pct == pytest.approx(75.0)
