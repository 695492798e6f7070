import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from postrate.models import bernoulli_grid
from postrate.priors import grid_prior
from postrate.verifier.checks import average_hellinger_metric
from postrate.verifier.rates import (
    ARFamily,
    DiscreteFamily,
    GaussSeqFamily,
    RateCheckConfig,
    RateCurve,
    _weighted_quantile,
    contracts,
    fit_slope,
    measure_contraction,
    r_sweep,
    strictly_decreasing,
)


def bernoulli_family(beta=1.0, pseudo=False):
    exp = bernoulli_grid(20)
    d = average_hellinger_metric(exp)[:, exp.truth]
    return DiscreteFamily(exp, grid_prior(range(5)), d, lambda n: n**-0.5, beta=beta, pseudo=pseudo)


class TestFit:
    def test_recovers_slope(self):
        gen = np.random.default_rng(0)
        n = 2.0 ** np.arange(6, 15)
        y = 3.0 * n ** (-1 / 3) * np.exp(gen.normal(0, 0.01, n.size))
        fit = fit_slope(n, y)
        assert abs(fit.slope + 1 / 3) <= 0.01
        assert fit.lo <= fit.slope <= fit.hi

    def test_exact_power(self):
        n = np.array([10, 100, 1000])
        fit = fit_slope(n, 2 * n**-0.5)
        np.testing.assert_allclose((fit.slope, math.exp(fit.intercept)), (-0.5, 2.0), rtol=1e-12)


class TestHelpers:
    def test_strictly_decreasing(self):
        assert strictly_decreasing([3, 2, 1])
        assert not strictly_decreasing([3, 3, 1])

    def test_weighted_quantile(self):
        v = np.array([3.0, 1.0, 2.0])
        w = np.array([0.2, 0.5, 0.3])
        assert _weighted_quantile(v, w, 0.5) == 1.0
        assert _weighted_quantile(v, w, 0.9) == 3.0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            RateCheckConfig(quantile=1.0)
        with pytest.raises(ValueError):
            RateCheckConfig(r=0.0)

    def test_curve_validation(self):
        kw = dict(family="f", epsilon_n=[1, 1], q_radius=[1, 1], slope=0, slope_lo=0, slope_hi=0,
                  predicted=0, r=1)
        with pytest.raises(ValueError):
            RateCurve(n_grid=[2, 2], tail_mass=[0.1, 0.1], **kw)
        with pytest.raises(ValueError):
            RateCurve(n_grid=[1, 2], tail_mass=[0.1, 1.5], **kw)


class TestDiscrete:
    def test_beta_one_pseudo_bit_identical(self):
        cfg = RateCheckConfig(r=1.0, replicates=5, quantile=0.9)
        a = measure_contraction(bernoulli_family(), [20, 40, 80], cfg, seed=3, keep_replicates=True)
        b = measure_contraction(bernoulli_family(pseudo=True), [20, 40, 80], cfg, seed=3, keep_replicates=True)
        assert a.to_record() == b.to_record()

    def test_pseudo_half_differs(self):
        cfg = RateCheckConfig(r=1.0, replicates=3)
        a = measure_contraction(bernoulli_family(), [20, 40], cfg, seed=3)
        b = measure_contraction(bernoulli_family(beta=0.5), [20, 40], cfg, seed=3)
        assert a.log_tail_mass != b.log_tail_mass


class TestFamilies:
    def test_gauss_k(self):
        fam = GaussSeqFamily()
        assert fam.k(64) == 4 and fam.k(1) == 1
        np.testing.assert_allclose(fam.epsilon(8), 0.5, rtol=1e-14)

    def test_gauss_curve_shrinks(self):
        cfg = RateCheckConfig(r=4.0, replicates=3)
        curve = measure_contraction(GaussSeqFamily(draws=1000), [64, 512, 4096], cfg, seed=0)
        assert strictly_decreasing(curve.q_radius)
        assert curve.slope < 0

    def test_ar_replicate_runs(self):
        fam = ARFamily()
        m, A, K, b1 = fam.design(50)
        assert K <= 2 and A > 0 and b1 > 0
        log_tail, radius = fam.replicate(50, 4.0, 0.9, 2000, 0)
        assert log_tail <= 0 and radius >= 0

    def test_deterministic(self):
        cfg = RateCheckConfig(r=4.0, replicates=2, mc_budget=1000)
        a = measure_contraction(ARFamily(), [50, 100], cfg, seed=5)
        b = measure_contraction(ARFamily(), [50, 100], cfg, seed=5)
        assert a.to_record() == b.to_record()


class TestRSweep:
    def curve(self, logtails):
        n = len(logtails)
        return RateCurve("f", list(range(1, n + 1)), [1.0] * n, [0.0] * n, [1.0] * n, 0, 0, 0, 0, 1,
                         log_tail_mass=logtails)

    def test_contracts(self):
        assert contracts(self.curve([-1.0, -2.0, -2.0]))
        assert contracts(self.curve([-math.inf, -math.inf]))
        assert not contracts(self.curve([-1.0, -1.0]))
        assert not contracts(self.curve([-math.inf, -200.0]))

    def test_smallest_passing(self):
        cfg = RateCheckConfig(replicates=3)
        res = r_sweep(GaussSeqFamily(draws=1000), [64, 512, 4096], cfg, rs=(8, 2, 4), seed=0)
        assert res["rs"] == [2.0, 4.0, 8.0]
        first = next((r for r, ok in zip(res["rs"], res["r_passes"]) if ok), None)
        assert res["smallest_r"] == first


@settings(max_examples=50, deadline=None)
@given(st.floats(-2.0, -0.05), st.floats(0.1, 10.0))
def test_fit_exact_for_power_laws(slope, scale):
    n = 2.0 ** np.arange(4, 12)
    fit = fit_slope(n, scale * n**slope)
    np.testing.assert_allclose(fit.slope, slope, atol=1e-10)
