import math

import numpy as np
import pytest

from postrate.models.autoregression import cell_nu_masses
from postrate.verifier.sieve import step_ball_mass, step_prior_quotient

F0 = lambda x: np.tanh(x)


class TestBallMass:
    def test_one_cell_interval(self):
        # K = 1: the ball is an interval of half-width r / sqrt(nu(I_1)) clipped to [-M, M]
        A, M, r, b0 = 1.5, 1.0, 0.5, 0.6
        half = r / math.sqrt(cell_nu_masses(A, 1)[0])
        exact = (min(M, b0 + half) - max(-M, b0 - half)) / (2 * M)
        got = step_ball_mass([b0], A, 1, M, r, draws=40_000, seed=1)
        assert abs(math.exp(got.log_mass) - exact) <= 4 * got.inside_stderr * math.exp(got.log_mass) / got.inside_fraction

    def test_free_space_volume(self):
        # ellipse area pi r^2 / sqrt(m1 m2) over (2M)^2 when it fits in the box
        A, M, r = 1.0, 100.0, 0.3
        m = cell_nu_masses(A, 2)
        got = step_ball_mass([0.0, 0.0], A, 2, M, r, draws=1000)
        assert got.inside_fraction == 1.0
        np.testing.assert_allclose(got.log_mass, math.log(math.pi * r**2 / math.sqrt(m.prod()) / (2 * M) ** 2),
                                   rtol=1e-13)

    def test_rejects_radius(self):
        with pytest.raises(ValueError):
            step_ball_mass([0.0], 1.0, 1, 1.0, 0.0)


class TestQuotient:
    def test_free_space_equals_volume_ratio(self):
        rec = step_prior_quotient(F0, 1e6, 1.0, 0.5, 0.2, 3.0, K=2, draws=500)
        np.testing.assert_allclose(rec.log_quotient, 2 * math.log(6 * 3.0 / 0.5), rtol=1e-12)
        assert rec.log_quotient_stderr == 0.0

    def test_j_2K_needs_j_at_least_6_over_b1(self):
        assert step_prior_quotient(F0, 1e6, 1.0, 1.0, 0.2, 8.0, K=3, draws=500).within_j_2K
        assert not step_prior_quotient(F0, 1e6, 1.0, 1.0, 0.2, 2.0, K=3, draws=500).within_j_2K

    @pytest.mark.parametrize("K", [1, 2, 3])
    def test_box_never_exceeds_volume_ratio(self, K):
        for j in (1.0, 4.0, 16.0):
            rec = step_prior_quotient(F0, 2.0, 1.0, 0.05, 0.2, j, K=K, draws=5000, seed=K)
            assert rec.within_volume_ratio, rec
            assert rec.to_record()["verdict"] == "pass"
