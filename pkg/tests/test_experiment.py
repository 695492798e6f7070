import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from postrate import rng
from postrate.errors import DimensionMismatch, NonDominated
from postrate.experiment import DiscreteExperiment, SampleBatch, log_likelihood_ratio, sample_truth
from postrate.verifier.oracles import inid_path_law


class TestRng:
    def test_same_key_same_stream(self):
        a = rng.stream(7, "tag", 3).random(5)
        b = rng.stream(7, "tag", 3).random(5)
        np.testing.assert_array_equal(a, b)

    def test_tag_and_index_separate_streams(self):
        base = rng.stream(7, "tag", 3).random(5)
        assert not np.array_equal(base, rng.stream(7, "other", 3).random(5))
        assert not np.array_equal(base, rng.stream(7, "tag", 4).random(5))

    def test_child_seed_is_u64_and_stable(self):
        s = rng.child_seed(2**64 - 1, "x", 0)
        assert 0 <= s < 2**64
        assert s == rng.child_seed(2**64 - 1, "x", 0)


class TestSampleBatch:
    def test_immutable(self):
        b = SampleBatch(np.array([0, 1]), 2)
        with pytest.raises(ValueError):
            b.values[0] = 1

    def test_length_checked(self):
        with pytest.raises(DimensionMismatch):
            SampleBatch(np.array([0, 1]), 3)

    def test_markov_carries_x0(self):
        assert len(SampleBatch(np.array([0, 1, 1]), 2, markov=True)) == 3


class TestLogLikelihoodRatio:
    def test_truth_is_zero(self):
        exp = DiscreteExperiment([[0.5, 0.5], [0.25, 0.75]], n=3)
        assert log_likelihood_ratio(exp, 0, SampleBatch([0, 1, 1], 3)) == 0.0

    def test_single_outcome_example(self):
        exp = DiscreteExperiment([[0.5, 0.5], [0.25, 0.75]], n=1)
        np.testing.assert_allclose(log_likelihood_ratio(exp, 1, SampleBatch([1], 1)), 0.405465, atol=5e-7)

    def test_product_is_sum_of_coordinates(self):
        pmf = np.array([[[0.5, 0.5], [0.2, 0.8]], [[0.25, 0.75], [0.6, 0.4]]])
        exp = DiscreteExperiment(pmf)
        x = SampleBatch([1, 0], 2)
        expected = math.log(0.75 / 0.5) + math.log(0.6 / 0.2)
        np.testing.assert_allclose(log_likelihood_ratio(exp, 1, x), expected, rtol=1e-14)

    def test_zero_probability_under_theta_is_minus_inf(self):
        exp = DiscreteExperiment([[0.5, 0.5], [1.0, 0.0]], n=2)
        assert log_likelihood_ratio(exp, 1, SampleBatch([0, 1], 2)) == -math.inf

    def test_truth_zero_density_raises(self):
        exp = DiscreteExperiment([[1.0, 0.0], [0.5, 0.5]], n=1)
        with pytest.raises(NonDominated):
            log_likelihood_ratio(exp, 1, SampleBatch([1], 1))

    def test_wrong_n(self):
        exp = DiscreteExperiment([[0.5, 0.5], [0.25, 0.75]], n=2)
        with pytest.raises(DimensionMismatch):
            log_likelihood_ratio(exp, 1, SampleBatch([1], 1))


class TestSampling:
    def test_deterministic(self):
        exp = DiscreteExperiment([[0.3, 0.7]], n=50)
        np.testing.assert_array_equal(sample_truth(exp, 50, 11).values, sample_truth(exp, 50, 11).values)

    def test_degenerate_pmf(self):
        exp = DiscreteExperiment([[1.0, 0.0]], n=20)
        assert np.all(sample_truth(exp, 20, 0).values == 0)

    def test_fair_coin_frequency(self):
        exp = DiscreteExperiment([[0.5, 0.5]], n=100_000)
        freq = np.mean(sample_truth(exp, 100_000, 3).values == 0)
        assert abs(freq - 0.5) <= 0.006

    def test_n_must_be_positive(self):
        with pytest.raises(ValueError):
            sample_truth(DiscreteExperiment([[0.5, 0.5]], n=1), 0, 0)


@st.composite
def inid_tables(draw):
    n = draw(st.integers(1, 6))
    b = draw(st.integers(2, 3))
    P = draw(st.integers(2, 3))
    seed = draw(st.integers(0, 2**32 - 1))
    gen = np.random.default_rng(seed)
    return gen.dirichlet(np.ones(b), size=(P, n))


@settings(max_examples=40, deadline=None)
@given(inid_tables())
def test_likelihood_ratio_has_unit_mean(pmf):
    exp = DiscreteExperiment(pmf)
    lr, prob = inid_path_law(exp)
    means = prob @ np.exp(lr)
    np.testing.assert_allclose(means, 1.0, atol=1e-12)
