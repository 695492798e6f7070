"""Nonlinear AR(1) chains X_i = f(X_{i-1}) + N(0, 1) with step-function sieves."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

from .. import rng
from ..errors import AmplitudeExceeded, QuadratureFailure
from ..experiment import SampleBatch
from .markov import MarkovModel

_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)
# |y| <= M + _LATTICE_MARGIN keeps every N(c, 1), |c| <= M, above 1 - 1e-10
_LATTICE_MARGIN = 6.5


def log_phi(z):
    z = np.asarray(z, dtype=float)
    return -0.5 * z * z - _LOG_SQRT_2PI


@dataclass(frozen=True)
class StepFunctionParam:
    """f_beta = sum_k beta_k 1{I_k} on [-A, A), zero outside the window."""

    A: float
    K: int
    beta: np.ndarray
    M: float

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float).reshape(-1)
        object.__setattr__(self, "beta", beta)
        if beta.size != self.K:
            raise ValueError(f"need {self.K} coefficients, got {beta.size}")
        if np.any(np.abs(beta) > self.M):
            raise AmplitudeExceeded(f"coefficients exceed M={self.M}")

    @property
    def edges(self):
        return cell_edges(self.A, self.K)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = cell_index(x, self.A, self.K)
        return np.where(k >= 0, self.beta[np.clip(k, 0, self.K - 1)], 0.0)

    def sup(self):
        return float(np.abs(self.beta).max()) if self.K else 0.0


def cell_edges(A, K):
    return -A + 2.0 * A * np.arange(K + 1) / K


def cell_index(x, A, K):
    """Cell k in 0..K-1 of x in [-A, A); -1 outside the window."""
    x = np.asarray(x, dtype=float)
    k = np.floor((x + A) * K / (2.0 * A)).astype(int)
    return np.where((x >= -A) & (x < A) & (k >= 0) & (k < K), np.clip(k, 0, K - 1), -1)


def cell_nu_masses(A, K):
    """Standard normal mass of each cell I_k."""
    return np.diff(special.ndtr(cell_edges(A, K)))


def star_norm(beta, A, K):
    """||beta||_* = (sum beta_k^2 nu(I_k))^(1/2), so that ||f_b1 - f_b2||_2 = ||b1 - b2||_*."""
    m = cell_nu_masses(A, K)
    return float(np.sqrt(np.sum(np.asarray(beta, float) ** 2 * m)))


class ARModel(MarkovModel):
    """Gaussian-noise autoregression; the reference measure is nu = N(0, 1).

    The initial law is standard normal for every f.  Bracketing constants
    are computed on the lattice |y| <= Y.
    """

    def __init__(self, truth, M, n=100, Y=None, name="ar"):
        self.M = float(M)
        self.truth = truth
        self.n = int(n)
        self.name = name
        self.Y = float(Y) if Y is not None else self.M + _LATTICE_MARGIN
        check_amplitude(truth, self.M, self.Y)

    def at(self, n):
        return ARModel(self.truth, self.M, n=n, Y=self.Y, name=self.name)

    @property
    def bounds(self):
        M, Y = self.M, self.Y
        a0 = math.exp(-M * Y - 0.5 * M * M)
        a1 = math.exp(M * Y - 0.5 * M * M) if Y >= M else math.exp(0.5 * Y * Y)
        return a0, max(a1, 1.0)

    def reference(self, y):
        return np.exp(log_phi(y))

    def transition_logdensity(self, f, y, x):
        return log_phi(np.asarray(y, float) - f(np.asarray(x, float)))

    def initial_logdensity(self, f, x0):
        return float(log_phi(x0))

    def sample(self, f, n, seed):
        gen = rng.stream(seed, "ar-sample", 0)
        eps = gen.standard_normal(n + 1)
        x = np.empty(n + 1)
        x[0] = eps[0]
        for i in range(1, n + 1):
            x[i] = float(f(x[i - 1])) + eps[i]
        return SampleBatch(x, n, markov=True)

    def step_logliks(self, betas, A, K, x):
        """Log-likelihoods of many step functions on one path, via cell sufficient statistics.

        ``betas`` is (D, K); returns (D,).
        """
        vals = np.asarray(x.values, dtype=float)
        prev, nxt = vals[:-1], vals[1:]
        k = cell_index(prev, A, K)
        inside = k >= 0
        counts = np.bincount(k[inside], minlength=K).astype(float)
        sums = np.bincount(k[inside], weights=nxt[inside], minlength=K)
        betas = np.atleast_2d(betas)
        const = float(log_phi(vals[0]) + np.sum(log_phi(nxt)))
        return const + betas @ sums - 0.5 * (betas**2) @ counts

    # -- distances -------------------------------------------------------

    def nu_sq_distance(self, f1, f2, breaks=()):
        return nu_integral(lambda x: (f1(x) - f2(x)) ** 2, breaks)

    def transition_hellinger(self, f1, f2, breaks=()):
        val = nu_integral(lambda x: 2.0 - 2.0 * np.exp(-((f1(x) - f2(x)) ** 2) / 8.0), breaks)
        return math.sqrt(max(val, 0.0))

    def transition_hstar_sq(self, f0, f, breaks=()):
        return nu_integral(lambda x: 2.0 / 3.0 * np.expm1(3.0 * (f0(x) - f(x)) ** 2 / 8.0), breaks)

    def initial_hstar_sq(self, f0, f):
        return 0.0


def nu_integral(g, breaks=(), tol=1e-11):
    """Integral of g against the standard normal density, split at ``breaks``."""
    pts = sorted(set(float(b) for b in breaks if np.isfinite(b)))
    knots = [-np.inf, *pts, np.inf]
    total = 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        val, err = integrate.quad(lambda x: float(g(x)) * math.exp(float(log_phi(x))), lo, hi,
                                  epsabs=tol, epsrel=tol, limit=200)
        if not np.isfinite(val) or err > 1e-7:
            raise QuadratureFailure(f"quadrature on [{lo}, {hi}] returned {val} +/- {err}")
        total += val
    return total


def check_amplitude(f, M, Y):
    if isinstance(f, StepFunctionParam):
        sup = f.sup()
    else:
        grid = np.linspace(-Y - 1.0, Y + 1.0, 4001)
        sup = float(np.max(np.abs(f(grid))))
    if sup > M + 1e-12:
        raise AmplitudeExceeded(f"sup|f| = {sup} exceeds M = {M}")


def ar_model(f, M, n=100, Y=None):
    """Markov model for X_i = f(X_{i-1}) + eps_i with bracketing constants on |y| <= Y."""
    return ARModel(f, M, n=n, Y=Y)


def ar_design(epsilon_n, M, L, b1, f0=None):
    """Window half-width, cell count and projected truth coefficients.

    A_n = 2 sqrt(log(1/eps)), K_n = floor(3 L A_n / (b1 eps)) + 1, and
    beta0_k = f0 at the midpoint of cell k.
    """
    if not 0 < epsilon_n < 1:
        raise ValueError("epsilon_n must lie in (0, 1)")
    A = 2.0 * math.sqrt(math.log(1.0 / epsilon_n))
    K = int(math.floor(3.0 * L * A / (b1 * epsilon_n))) + 1
    beta0 = None
    if f0 is not None:
        mids = -A + A * (2.0 * np.arange(1, K + 1) - 1.0) / K
        beta0 = np.clip(np.asarray(f0(mids), dtype=float), -M, M)
    return A, K, beta0


def admissible_b1(a0, a1):
    """Largest b1 with (b1^2 / 8) sqrt(a1 / a0) <= 1/2."""
    return math.sqrt(4.0 / math.sqrt(a1 / a0))


class StepDistance:
    """Vectorised ||f_beta - f0||_2 in L2(nu) for a fixed partition.

    Per-cell moments of f0 against nu are integrated once; the squared
    distance is then a quadratic in beta.
    """

    def __init__(self, f0, A, K):
        self.A, self.K = A, K
        edges = cell_edges(A, K)
        self.mass = cell_nu_masses(A, K)
        self.m1 = np.array([_quad_nu(f0, lo, hi) for lo, hi in zip(edges[:-1], edges[1:])])
        self.m2 = np.array([_quad_nu(lambda x: f0(x) ** 2, lo, hi) for lo, hi in zip(edges[:-1], edges[1:])])
        self.outside = _quad_nu(lambda x: f0(x) ** 2, -np.inf, -A) + _quad_nu(lambda x: f0(x) ** 2, A, np.inf)

    def __call__(self, betas):
        betas = np.atleast_2d(betas)
        sq = (betas**2) @ self.mass - 2.0 * betas @ self.m1 + self.m2.sum() + self.outside
        return np.sqrt(np.maximum(sq, 0.0))


def _quad_nu(g, lo, hi):
    val, _ = integrate.quad(lambda x: float(g(x)) * stats.norm.pdf(x), lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val
