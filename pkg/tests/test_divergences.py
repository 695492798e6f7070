import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import optimize, stats

from postrate import divergences as dv
from postrate.errors import EmptyList, GridMismatch, NotPositiveDefinite, OutOfRange, StateSpaceTooLarge

F = np.array([0.5, 0.5])
G = np.array([0.25, 0.75])


@st.composite
def pmf_pairs(draw, min_size=2, max_size=10):
    size = draw(st.integers(min_size, max_size))
    seed = draw(st.integers(0, 2**32 - 1))
    gen = np.random.default_rng(seed)
    return gen.dirichlet(np.ones(size)), gen.dirichlet(np.ones(size))


def bernoulli_at_hellinger(h):
    """(1/2, 1/2) against (p, 1 - p) with H = h, found by root finding."""
    p = optimize.brentq(lambda p: dv.hellinger(F, [p, 1 - p]) - h, 1e-12, 0.5)
    return F, np.array([p, 1 - p])


class TestHellinger:
    def test_identity(self):
        assert dv.hellinger(F, F) == 0.0

    def test_example_pair(self):
        np.testing.assert_allclose(dv.hellinger(F, G) ** 2, 0.068148, atol=5e-7)
        np.testing.assert_allclose(dv.hellinger(F, G), 0.261052, atol=5e-7)

    def test_disjoint_supports(self):
        np.testing.assert_allclose(dv.hellinger([1, 0], [0, 1]), math.sqrt(2), rtol=1e-15)

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatch):
            dv.hellinger([0.5, 0.5], [1.0])


class TestHellingerStar:
    def test_identity(self):
        assert dv.hellinger_star(F, F) == 0.0

    def test_example_pair(self):
        np.testing.assert_allclose(dv.hellinger_star_sq(F, G), 0.076903, atol=5e-7)
        np.testing.assert_allclose(dv.inverse_root_moment(F, G), 1.115355, atol=5e-7)

    def test_sandwich_example(self):
        h, hs = dv.hellinger(F, G), dv.hellinger_star(F, G)
        np.testing.assert_allclose(h / math.sqrt(3), 0.150719, atol=5e-7)
        np.testing.assert_allclose(hs, 0.277315, atol=5e-7)
        # 2^(1/4) times the unrounded H; multiplying the rounded 0.261052 gives 0.310443
        np.testing.assert_allclose(dv.sup_ratio(F, G) ** 0.25 * h, 0.3104454, atol=5e-8)

    def test_missing_support_is_infinite(self):
        assert dv.hellinger_star([0.5, 0.5], [1.0, 0.0]) == math.inf
        assert dv.inverse_root_moment([0.5, 0.5], [1.0, 0.0]) == math.inf

    def test_inverse_root_moment_identity(self):
        assert dv.inverse_root_moment(F, F) == 1.0


class TestKL:
    def test_identity(self):
        rep = dv.kl_and_moments(F, F, ks=(1, 2, 3))
        assert rep.is_zero()

    def test_example_pair(self):
        rep = dv.kl_and_moments(F, G, ks=(2,))
        np.testing.assert_allclose(rep.kl, 0.143841, atol=5e-7)
        # two-term sum 0.5 (log 2 - K)^2 + 0.5 (log(2/3) - K)^2 = (log 3)^2 / 4
        np.testing.assert_allclose(rep.v_centered[2], 0.25 * math.log(3) ** 2, rtol=1e-13)
        np.testing.assert_allclose(rep.v_centered[2], 0.301737, atol=5e-7)

    def test_support_failure(self):
        rep = dv.kl_and_moments([0.5, 0.5], [1.0, 0.0], ks=(2,))
        assert rep.kl == math.inf and rep.v_centered[2] == math.inf

    def test_bad_order(self):
        with pytest.raises(ValueError):
            dv.kl_and_moments(F, G, ks=(0,))


class TestAverages:
    def test_identical_pairs(self):
        assert dv.avg_hellinger([(F, F), (G, G)]) == 0.0

    def test_root_mean_square(self):
        pairs = [bernoulli_at_hellinger(0.3), bernoulli_at_hellinger(0.4)]
        np.testing.assert_allclose(dv.avg_hellinger(pairs), 0.353553, atol=5e-7)

    def test_empty(self):
        with pytest.raises(EmptyList):
            dv.avg_hellinger([])


class TestProductIdentities:
    def test_single_coordinate(self):
        res = dv.product_affinity_check([(F, G)])
        np.testing.assert_allclose(res.hstar_joint, res.hstar_factored, rtol=1e-15)

    def test_two_copies(self):
        res = dv.product_affinity_check([(F, G), (F, G)])
        np.testing.assert_allclose(res.hstar_joint, 1.115355**2, atol=1e-6)
        np.testing.assert_allclose(res.hstar_joint, res.hstar_factored, atol=1e-12)

    def test_identical_factor_is_neutral(self):
        res = dv.product_affinity_check([(F, G), (G, G)])
        np.testing.assert_allclose(res.hellinger, dv.hellinger(F, G), atol=1e-12)

    def test_state_limit(self):
        pair = (np.full(10, 0.1), np.full(10, 0.1))
        with pytest.raises(StateSpaceTooLarge):
            dv.product_affinity_check([pair] * 7)


class TestGaussian:
    def test_zero_shift(self):
        assert dv.gaussian_closed_forms([0.0], [[1.0]]) == (0.0, 0.0)

    def test_unit_shift(self):
        h2, hs2 = dv.gaussian_closed_forms([1.0], [[1.0]])
        np.testing.assert_allclose(h2, 0.235006, atol=5e-7)
        np.testing.assert_allclose(hs2, 0.3033276, atol=5e-8)

    def test_diagonal_factorises(self):
        d, prec = np.array([0.7, -0.4]), np.diag([2.0, 3.0])
        _, hs2 = dv.gaussian_closed_forms(d, prec)
        parts = [dv.gaussian_closed_forms([d[i]], [[prec[i, i]]])[1] for i in range(2)]
        np.testing.assert_allclose(1 + 1.5 * hs2, math.prod(1 + 1.5 * p for p in parts), rtol=1e-13)

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefinite):
            dv.gaussian_closed_forms([1.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])

    def test_moments_match_normal_log_ratio(self):
        K, V = dv.gaussian_kl_moments([1.2], [[1.0]], ks=(2, 3))
        q = 1.44
        np.testing.assert_allclose(K, q / 2)
        np.testing.assert_allclose(V[2], q, rtol=1e-13)
        np.testing.assert_allclose(V[3], stats.norm(0, math.sqrt(q)).expect(lambda z: abs(z) ** 3), rtol=1e-9)


class TestPoisson:
    def test_equal_rates(self):
        assert dv.poisson_hstar_bound(1.5, 1.5, 1.0, 2.0) == 0.0

    def test_long_truncation_oracle(self):
        xs = np.arange(201)
        f, g = stats.poisson.pmf(xs, 1.0), stats.poisson.pmf(xs, 1.5)
        keep = (f > 0) & (g > 0)
        oracle = math.fsum((np.sqrt(f[keep]) - np.sqrt(g[keep])) ** 2 * (2 / 3 * np.sqrt(f[keep] / g[keep]) + 1 / 3))
        np.testing.assert_allclose(dv.poisson_hstar_bound(1.0, 1.5, 1.0, 2.0, trunc=60), oracle, atol=1e-10)

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            dv.poisson_hstar_bound(0.5, 1.5, 1.0, 2.0)

    def test_hellinger_closed_form(self):
        xs = np.arange(80)
        f, g = stats.poisson.pmf(xs, 2.0), stats.poisson.pmf(xs, 3.0)
        np.testing.assert_allclose(dv.poisson_hellinger_sq(2.0, 3.0), np.sum((np.sqrt(f) - np.sqrt(g)) ** 2),
                                   atol=1e-14)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(1.0, 3.0), st.floats(1.0, 3.0))
    def test_lipschitz_bound(self, a, b):
        assert dv.poisson_hstar_sq(a, b) <= dv.poisson_lipschitz_constant(1.0, 3.0) * (a - b) ** 2 + 1e-15

    def test_series_tail_is_small(self):
        assert dv.poisson_series_tail(1.0, 3.0, 60) < 1e-30


class TestIneq1:
    def test_average_hellinger_satisfies(self):
        pairs = [(F, G), (G, F), (F, F)]
        d = dv.avg_hellinger(pairs)
        H = math.sqrt(dv.product_hellinger_sq(pairs))
        assert dv.metric_satisfies_ineq1(d, H, len(pairs))

    def test_too_large_metric_fails(self):
        assert not dv.metric_satisfies_ineq1(1.0, 0.1, 5)


@settings(max_examples=200, deadline=None)
@given(pmf_pairs())
def test_inverse_root_moment_identity(pair):
    f, g = pair
    np.testing.assert_allclose(dv.inverse_root_moment(f, g), 1 + 1.5 * dv.hellinger_star_sq(f, g), atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(pmf_pairs())
def test_affinity_identity(pair):
    f, g = pair
    np.testing.assert_allclose(dv.hellinger_affinity(f, g), 1 - dv.hellinger(f, g) ** 2 / 2, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(pmf_pairs())
def test_sandwich(pair):
    f, g = pair
    h, hs = dv.hellinger(f, g), dv.hellinger_star(f, g)
    assert h / math.sqrt(3) <= hs + 1e-12
    assert hs <= dv.sup_ratio(f, g) ** 0.25 * h + 1e-12


@settings(max_examples=50, deadline=None)
@given(st.lists(pmf_pairs(2, 4), min_size=1, max_size=5))
def test_product_factorisation(pairs):
    res = dv.product_affinity_check(pairs)
    np.testing.assert_allclose(res.hstar_joint, res.hstar_factored, rtol=1e-12)
    np.testing.assert_allclose(res.affinity_joint, res.affinity_factored, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(pmf_pairs(2, 4), min_size=1, max_size=5))
def test_average_hellinger_metric_is_admissible(pairs):
    assume(all(np.all(g > 0) for _, g in pairs))
    d = dv.avg_hellinger(pairs)
    H = math.sqrt(dv.product_hellinger_sq(pairs))
    assert dv.metric_satisfies_ineq1(d, H, len(pairs))


@given(st.floats(1e-6, 50.0))
def test_w_threshold_contains_hstar_ball(t):
    # n eps^2 < (2/3)(exp(1.5 n eps^2) - 1) for every t = n eps^2 > 0
    assert 1.5 * t < math.expm1(1.5 * t)
