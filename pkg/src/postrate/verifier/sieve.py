"""Prior-mass quotients of the uniform step-function prior.

Under beta ~ U[-M, M]^K the mass of {||beta - beta0||_* <= r} is the
ellipsoid volume times the fraction of the ellipsoid inside the box, over
(2M)^K.  The fraction is estimated by uniform sampling in the ellipsoid, so
small balls are handled without rejection from the whole box.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gammaln

from .. import rng
from ..models.autoregression import ar_design, cell_nu_masses


@dataclass
class BallMass:
    log_mass: float
    inside_fraction: float
    inside_stderr: float


def step_ball_mass(beta0, A, K, M, radius, draws=20_000, seed=0):
    """Uniform-prior mass of the ||.||_* ball of ``radius`` around ``beta0``."""
    if radius <= 0 or draws < 2:
        raise ValueError("need radius > 0 and at least two draws")
    beta0 = np.asarray(beta0, dtype=float)
    m = cell_nu_masses(A, K)
    log_unit = 0.5 * K * math.log(math.pi) - gammaln(0.5 * K + 1)
    log_vol = log_unit + K * math.log(radius) - 0.5 * float(np.sum(np.log(m)))
    gen = rng.stream(seed, "step-ball", K)
    z = gen.standard_normal((draws, K))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    z *= gen.random((draws, 1)) ** (1.0 / K)
    pts = beta0[None, :] + radius * z / np.sqrt(m)[None, :]
    inside = np.all(np.abs(pts) <= M, axis=1)
    p = float(inside.mean())
    se = math.sqrt(p * (1 - p) / draws)
    log_mass = log_vol + (math.log(p) if p > 0 else -math.inf) - K * math.log(2 * M)
    return BallMass(float(log_mass), p, se)


@dataclass
class QuotientRecord:
    name: str
    j: float
    K: int
    b1: float
    eps: float
    log_quotient: float
    log_quotient_stderr: float
    log_volume_ratio: float  # K log(6 j / b1), the free-space ellipsoid ratio
    log_j_2K: float  # 2 K log j, the first written form
    log_K_2j: float  # K log(2 j), the second written form
    within_volume_ratio: bool
    within_j_2K: bool
    within_K_2j: bool

    def to_record(self):
        rec = asdict(self)
        rec["verdict"] = "pass" if self.within_volume_ratio else "fail"
        return rec


def step_prior_quotient(f0, M, L, b1, eps, j, K=None, draws=20_000, seed=0, slack=3.0):
    """Pi(||b - b0||_* <= 3 j eps) / Pi(||b - b0||_* <= (b1 / 2) eps) against three candidate bounds.

    ``K`` overrides the designed cell count so the quotient can be checked on
    small K.  Each comparison allows ``slack`` standard errors of the log quotient.
    """
    A, K_design, _ = ar_design(eps, M, L, b1, f0)
    K = K_design if K is None else int(K)
    mids = -A + A * (2.0 * np.arange(1, K + 1) - 1.0) / K
    beta0 = np.clip(np.asarray(f0(mids), dtype=float), -M, M)
    num = step_ball_mass(beta0, A, K, M, 3 * j * eps, draws, rng.child_seed(seed, "quotient-num", K))
    den = step_ball_mass(beta0, A, K, M, 0.5 * b1 * eps, draws, rng.child_seed(seed, "quotient-den", K))
    logq = num.log_mass - den.log_mass
    # delta method on the two independent inside fractions
    se = math.sqrt(sum((b.inside_stderr / b.inside_fraction) ** 2 for b in (num, den) if b.inside_fraction > 0))
    vol = K * math.log(6 * j / b1)
    j2k = 2 * K * math.log(j)
    k2j = K * math.log(2 * j)
    tol = slack * se + 1e-12
    return QuotientRecord("step-quotient", float(j), K, float(b1), float(eps), float(logq), float(se),
                          vol, j2k, k2j, logq <= vol + tol, logq <= j2k + tol, logq <= k2j + tol)
