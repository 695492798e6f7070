"""Infinite-dimensional normal mean model observed through its first n coordinates.

X ~ N(theta_(n), Sigma_(n)).  The default covariance is I/n; the correlated
variant uses the tridiagonal precision n * tridiag(rho, 1, rho), whose
quadratic form stays within [1 - 2|rho|, 1 + 2|rho|] times n * sum(alpha^2).
"""

import math

import numpy as np
from scipy import linalg

from .. import rng
from ..errors import DimensionMismatch, NotPositiveDefinite
from ..experiment import Experiment, SampleBatch

_LOG_2PI = math.log(2 * math.pi)


def power_truth(gamma):
    """theta0_i = i^-(gamma + 1); sum theta0_i^2 i^(2 gamma) converges."""
    return lambda i: np.asarray(i, dtype=float) ** (-(gamma + 1.0))


class GaussSeqModel(Experiment):
    """Gaussian sequence experiment at sample size n.

    ``theta0`` is a callable on 1-based indices or an explicit vector
    (zero-padded).  Parameters are vectors; entries past n are ignored.
    """

    def __init__(self, n, gamma=1.0, theta0=None, rho=0.0, dim=None, name="gauss-seq"):
        if n < 1:
            raise ValueError("n must be >= 1")
        if not abs(rho) < 0.5:
            raise NotPositiveDefinite(f"tridiagonal precision needs |rho| < 1/2, got {rho}")
        self.n = int(n)
        self.dim = self.n if dim is None else int(dim)
        self.gamma = float(gamma)
        self.rho = float(rho)
        self.name = name
        self._theta0_src = power_truth(gamma) if theta0 is None else theta0
        self.truth = self.coords(self._theta0_src)
        if self.rho:
            # upper banded form of the precision, then its Cholesky factor U with P = U^T U
            band = np.zeros((2, self.dim))
            band[0, 1:] = self.n * self.rho
            band[1, :] = self.n
            self._band = band
            self._chol = linalg.cholesky_banded(band, lower=False)
            self._logdet_prec = 2.0 * float(np.sum(np.log(self._chol[1])))
        else:
            self._band = None
            self._chol = None
            self._logdet_prec = self.dim * math.log(self.n)

    def at(self, n):
        return GaussSeqModel(n, self.gamma, self._theta0_src, self.rho, name=self.name)

    @property
    def diagonal(self):
        return self.rho == 0.0

    def coords(self, theta):
        """First ``dim`` coordinates of a parameter given as a callable or a vector."""
        if callable(theta):
            return np.asarray(theta(np.arange(1, self.dim + 1)), dtype=float)
        theta = np.asarray(theta, dtype=float).reshape(-1)
        out = np.zeros(self.dim)
        m = min(self.dim, theta.size)
        out[:m] = theta[:m]
        return out

    def precision_matvec(self, v):
        """Sigma_(n)^-1 applied to the last axis of ``v``."""
        v = np.asarray(v, dtype=float)
        out = self.n * v
        if self.rho:
            out = out.copy()
            out[..., 1:] += self.n * self.rho * v[..., :-1]
            out[..., :-1] += self.n * self.rho * v[..., 1:]
        return out

    def precision_dense(self):
        P = self.n * np.eye(self.dim)
        if self.rho:
            idx = np.arange(self.dim - 1)
            P[idx, idx + 1] = P[idx + 1, idx] = self.n * self.rho
        return P

    def quad_form(self, v):
        v = np.asarray(v, dtype=float)
        return np.sum(v * self.precision_matvec(v), axis=-1)

    def loglik(self, theta, x):
        return float(gauss_seq_loglik(self, theta, x))

    def logliks(self, thetas, x):
        vals = self._values(x)
        T = np.array([self.coords(t) for t in thetas])
        return self._const() - 0.5 * self.quad_form(vals[None, :] - T)

    def loglik_matrix(self, T, x):
        """Log-likelihoods of the rows of ``T`` (D, n)."""
        vals = self._values(x)
        return self._const() - 0.5 * self.quad_form(vals[None, :] - np.asarray(T, float))

    def _const(self):
        return -0.5 * self.dim * _LOG_2PI + 0.5 * self._logdet_prec

    def _values(self, x):
        vals = np.asarray(x.values, dtype=float)
        if vals.shape[0] != self.dim:
            raise DimensionMismatch(f"batch of length {vals.shape[0]} for dimension {self.dim}")
        return vals

    def sample(self, theta, n, seed):
        m = self if n == self.n else self.at(n)
        z = rng.stream(seed, "gauss-seq-sample", 0).standard_normal(m.dim)
        return SampleBatch(m.coords(theta) + m.noise(z), m.dim)

    def sample_many(self, theta, count, seed, tag="gauss-seq-sample"):
        z = rng.stream(seed, tag, 0).standard_normal((count, self.dim))
        return self.coords(theta)[None, :] + self.noise(z)

    def noise(self, z):
        """Map standard normals to N(0, Sigma_(n)) draws."""
        z = np.asarray(z, dtype=float)
        if not self.rho:
            return z / math.sqrt(self.n)
        flat = z.reshape(-1, self.dim).T
        # U x = z gives Cov(x) = U^-1 U^-T = P^-1
        sol = linalg.solve_banded((0, 1), self._chol, flat)
        return sol.T.reshape(z.shape)

    def distance(self, theta_a, theta_b):
        """Euclidean distance between the observed coordinates."""
        return float(np.linalg.norm(self.coords(theta_a) - self.coords(theta_b)))

    def condition_a_ratio(self, alpha):
        """alpha Sigma^-1 alpha^T / (n sum alpha^2) for rows of ``alpha``."""
        alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
        return self.quad_form(alpha) / (self.n * np.sum(alpha**2, axis=1))

    def condition_a_bounds(self):
        return 1.0 - 2.0 * abs(self.rho), 1.0 + 2.0 * abs(self.rho)

    def condition_b(self, terms=100000):
        """Partial sum of theta0_i^2 i^(2 gamma) over the first ``terms`` indices."""
        i = np.arange(1, terms + 1, dtype=float)
        src = self._theta0_src
        th = np.asarray(src(i), float) if callable(src) else np.pad(np.asarray(src, float), (0, max(0, terms - len(src))))[:terms]
        return float(np.sum(th**2 * i ** (2 * self.gamma)))


def gauss_seq_loglik(m, theta, x):
    """Multivariate normal log-density of x under N(theta_(n), Sigma_(n))."""
    vals = m._values(x)
    r = vals - m.coords(theta)
    return m._const() - 0.5 * float(m.quad_form(r))
