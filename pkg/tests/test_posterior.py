import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from postrate.errors import AllZeroLikelihood, DegenerateESS, NonDominated
from postrate.experiment import DiscreteExperiment, SampleBatch
from postrate.models.autoregression import ARModel
from postrate.models.gaussian_sequence import GaussSeqModel
from postrate.posterior import (
    gauss_seq_posterior_exact,
    log_tail_mass,
    posterior_exact,
    posterior_importance,
    posterior_tail_mass,
    pseudoposterior_exact,
    tail_mass_stderr,
)
from postrate.priors import gauss_seq_prior, grid_prior, power_data_prior, step_uniform_prior

# likelihood ratios (1, 2, 4) at x = 0
THREE = DiscreteExperiment([[0.1, 0.9], [0.2, 0.8], [0.4, 0.6]], n=1)
PRIOR3 = grid_prior([0, 1, 2], [0.2, 0.3, 0.5])
X0 = SampleBatch([0], 1)


def snis_mean(post):
    w = post.weights
    mu = np.sum(w[:, None] * post.support, axis=0)
    se = np.sqrt(np.sum(w[:, None] ** 2 * (post.support - mu) ** 2, axis=0))
    return mu, se


class TestExact:
    def test_three_point(self):
        post = posterior_exact(THREE, PRIOR3, X0)
        np.testing.assert_allclose(post.weights, [0.0714286, 0.2142857, 0.7142857], atol=5e-8)
        np.testing.assert_allclose(post.log_evidence, math.log(0.2 + 0.6 + 2.0), rtol=1e-14)

    def test_single_point(self):
        post = posterior_exact(THREE, grid_prior([2]), X0)
        np.testing.assert_array_equal(post.weights, [1.0])
        np.testing.assert_allclose(post.log_evidence, math.log(4.0), rtol=1e-14)

    def test_symmetric(self):
        exp = DiscreteExperiment([[0.5, 0.5], [0.5, 0.5]], n=3)
        post = posterior_exact(exp, grid_prior([0, 1]), SampleBatch([0, 1, 1], 3))
        np.testing.assert_allclose(post.weights, [0.5, 0.5], rtol=1e-15)

    def test_pseudo_half(self):
        post = pseudoposterior_exact(THREE, PRIOR3, X0, 0.5)
        np.testing.assert_allclose(post.weights, [0.1231327, 0.2612039, 0.6156634], atol=5e-8)
        raw = np.array([0.2, 0.3 * math.sqrt(2), 1.0])
        np.testing.assert_allclose(post.weights, raw / raw.sum(), rtol=1e-14)

    def test_beta_one_is_posterior(self):
        a = posterior_exact(THREE, PRIOR3, X0)
        b = pseudoposterior_exact(THREE, PRIOR3, X0, 1.0)
        np.testing.assert_array_equal(a.log_weights, b.log_weights)
        assert a.log_evidence == b.log_evidence

    def test_small_beta_approaches_prior(self):
        post = pseudoposterior_exact(THREE, PRIOR3, X0, 1e-9)
        np.testing.assert_allclose(post.weights, PRIOR3.weights, atol=1e-8)

    def test_power_prior_routes_to_pseudo(self):
        a = posterior_exact(THREE, power_data_prior(PRIOR3, 0.5), X0)
        b = pseudoposterior_exact(THREE, PRIOR3, X0, 0.5)
        np.testing.assert_array_equal(a.log_weights, b.log_weights)

    def test_beta_range(self):
        with pytest.raises(ValueError):
            pseudoposterior_exact(THREE, PRIOR3, X0, 0.0)

    def test_truth_zero_density(self):
        exp = DiscreteExperiment([[1.0, 0.0], [0.5, 0.5]], n=1)
        with pytest.raises(NonDominated):
            posterior_exact(exp, grid_prior([0, 1]), SampleBatch([1], 1))

    def test_all_zero(self):
        exp = DiscreteExperiment([[0.5, 0.5], [1.0, 0.0]], n=1)
        with pytest.raises(AllZeroLikelihood):
            posterior_exact(exp, grid_prior([1]), SampleBatch([1], 1))


class TestTailMass:
    def test_radius_zero(self):
        post = posterior_exact(THREE, PRIOR3, X0)
        assert posterior_tail_mass(post, [0, 1, 2], 0.0) == 1.0

    def test_radius_beyond(self):
        post = posterior_exact(THREE, PRIOR3, X0)
        assert posterior_tail_mass(post, [0, 1, 2], 2.5) == 0.0
        assert log_tail_mass(post, [0, 1, 2], 2.5) == -math.inf

    def test_example(self):
        post = posterior_exact(THREE, PRIOR3, X0)
        np.testing.assert_allclose(posterior_tail_mass(post, [0, 1, 2], 1.0), 0.9285714, atol=5e-8)
        assert tail_mass_stderr(post, [0, 1, 2], 1.0) == 0.0


class TestImportance:
    def test_constant_likelihood(self):
        # every previous state lies outside the step window, so all draws tie
        m = ARModel(lambda x: 0.0 * x, 1.0, n=3)
        x = SampleBatch([5.0, 5.0, 5.0, 5.0], 3, markov=True)
        post = posterior_importance(m, step_uniform_prior(1.0, 2, A=1.0), x, 500, 0)
        np.testing.assert_allclose(post.weights, 1 / 500, rtol=1e-12)
        np.testing.assert_allclose(post.ess, 500, rtol=1e-12)

    def test_conjugate_one_dim(self):
        m = GaussSeqModel(4, dim=1)
        x = m.sample_truth(4, 3)
        prior = gauss_seq_prior(1)
        exact = gauss_seq_posterior_exact(m, prior, x)
        post = posterior_importance(m, prior, x, 20_000, 5)
        mu, se = snis_mean(post)
        assert abs(mu[0] - exact.mean[0]) <= 3 * se[0]

    def test_budget_floor(self):
        m = GaussSeqModel(4, dim=1)
        with pytest.raises(ValueError):
            posterior_importance(m, gauss_seq_prior(1), m.sample_truth(4, 0), 50, 0)

    def test_degenerate_raises_with_result(self):
        m = GaussSeqModel(4000, dim=3)
        x = m.sample_truth(4000, 0)
        with pytest.raises(DegenerateESS) as info:
            posterior_importance(m, gauss_seq_prior(3), x, 200, 0)
        assert info.value.result.ess < 10

    def test_stderr_scaling(self):
        # quadrupling the budget halves the spread of tail-mass estimates
        m = GaussSeqModel(4, dim=1)
        x = m.sample_truth(4, 1)
        prior = gauss_seq_prior(1)
        d = lambda t: abs(t[0] - m.truth[0])
        spread = []
        for B in (500, 2000):
            est = [posterior_tail_mass(p, [d(t) for t in p.support], 0.5)
                   for p in (posterior_importance(m, prior, x, B, s) for s in range(50))]
            spread.append(np.std(est))
        assert 1.5 <= spread[0] / spread[1] <= 2.7


class TestGaussSeqExact:
    def test_flat_limit(self):
        m = GaussSeqModel(9, dim=3)
        x = m.sample_truth(9, 0)
        post = gauss_seq_posterior_exact(m, gauss_seq_prior(3, scale=1e-12), x)
        np.testing.assert_allclose(post.mean, x.values, atol=1e-10)

    def test_one_dim_formula(self):
        n, v = 5, 2.0
        m = GaussSeqModel(n, dim=1)
        x = SampleBatch([0.7], 1)
        post = gauss_seq_posterior_exact(m, gauss_seq_prior(1, scale=1 / v), x)
        np.testing.assert_allclose(post.mean[0], 0.7 * n * v / (n * v + 1), rtol=1e-14)

    def test_correlated_matches_dense_algebra(self):
        m = GaussSeqModel(8, rho=0.3)
        x = m.sample_truth(8, 2)
        prior = gauss_seq_prior(4)
        post = gauss_seq_posterior_exact(m, prior, x)
        # posterior of theta_(4) with the remaining means fixed at zero
        P = m.precision_dense()
        prec = P[:4, :4] + np.diag(4 * np.arange(1, 5) ** 2.0)
        mean = np.linalg.solve(prec, (P @ x.values)[:4])
        np.testing.assert_allclose(post.mean, mean, rtol=1e-12)

    def test_sampling_moments(self):
        m = GaussSeqModel(16, dim=4)
        post = gauss_seq_posterior_exact(m, gauss_seq_prior(2), m.sample_truth(16, 0))
        draws = post.sample(40_000, 1)
        assert np.all(draws[:, 2:] == 0)
        se = 4 / np.sqrt(post.precision * 40_000)
        assert np.all(np.abs(draws[:, :2].mean(0) - post.mean) <= se)


@st.composite
def finite_instances(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    gen = np.random.default_rng(seed)
    P, n = draw(st.integers(2, 5)), draw(st.integers(1, 8))
    exp = DiscreteExperiment(gen.dirichlet(np.ones(3), size=P), n=n)
    w = gen.dirichlet(np.ones(P))
    x = exp.sample_truth(n, seed)
    return exp, w, x, gen.permutation(P)


@settings(max_examples=60, deadline=None)
@given(finite_instances())
def test_normalised_and_evidence_exact(inst):
    exp, w, x, _ = inst
    post = posterior_exact(exp, grid_prior(range(exp.n_params), w), x)
    assert abs(post.weights.sum() - 1) <= 1e-10
    vals = np.asarray(x.values)
    lik = [np.prod([Fraction(float(exp.table[t, i, v])) for i, v in enumerate(vals)]) for t in range(exp.n_params)]
    ev = sum(Fraction(float(wi)) * l for wi, l in zip(w / w.sum(), lik)) / lik[exp.truth]
    np.testing.assert_allclose(post.log_evidence, math.log(ev), rtol=1e-10, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(finite_instances())
def test_permutation_invariance(inst):
    exp, w, x, perm = inst
    a = posterior_exact(exp, grid_prior(range(exp.n_params), w), x)
    b = posterior_exact(exp, grid_prior([int(p) for p in perm], w[perm]), x)
    np.testing.assert_allclose(b.weights, a.weights[perm], atol=1e-14)
