"""Statistical experiments: parameter grids, log-densities and truth sampling.

An experiment is a family of joint densities ``p_theta^(n)`` with a designated
true parameter.  All density arithmetic is in nats; a zero probability is
``-inf`` and exponentiates to exactly 0.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import DimensionMismatch, NonDominated

ROW_TOL = 1e-12


@dataclass(frozen=True)
class SampleBatch:
    """Immutable observation vector.

    For Markov chains ``values`` has length ``n + 1`` and slot 0 holds X_0.
    """

    values: np.ndarray
    n: int
    markov: bool = False

    def __post_init__(self):
        values = np.array(self.values, copy=True)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        expected = self.n + 1 if self.markov else self.n
        if values.shape[0] != expected:
            raise DimensionMismatch(
                f"batch holds {values.shape[0]} observations, expected {expected} for n={self.n}"
            )

    def __len__(self):
        return self.values.shape[0]


def safe_log(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(p)


class Experiment(ABC):
    """Parametrized family of finite-n log-densities with a true parameter."""

    name = "experiment"
    truth = None

    @abstractmethod
    def loglik(self, theta, x):
        """log p_theta^(n)(x) in nats."""

    @abstractmethod
    def sample(self, theta, n, seed):
        """Draw one batch of size n from p_theta^(n)."""

    def logliks(self, thetas, x):
        return np.array([self.loglik(t, x) for t in thetas], dtype=float)

    def sample_truth(self, n, seed):
        return self.sample(self.truth, n, seed)


def log_likelihood_ratio(exp, theta, x):
    """Return log p_theta(x) - log p_theta0(x).

    Raises NonDominated when the truth assigns zero density to ``x``.
    """
    expected = getattr(exp, "n", None)
    if expected is not None and x.n != expected:
        raise DimensionMismatch(f"batch has n={x.n}, experiment has n={expected}")
    l0 = exp.loglik(exp.truth, x)
    if not np.isfinite(l0):
        raise NonDominated("truth density is zero on the observed sample")
    if _same_param(theta, exp.truth):
        return 0.0
    return float(exp.loglik(theta, x) - l0)


def sample_truth(exp, n, seed):
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return exp.sample_truth(n, seed)


def _same_param(a, b):
    if isinstance(a, (int, np.integer)) and isinstance(b, (int, np.integer)):
        return int(a) == int(b)
    try:
        return bool(np.array_equal(np.asarray(a), np.asarray(b)))
    except (TypeError, ValueError):
        return a is b


class DiscreteExperiment(Experiment):
    """Product of finite pmfs indexed by a parameter grid.

    ``pmf`` is either ``(P, b)`` (i.i.d. coordinates, ``n`` required) or
    ``(P, n, b)`` (independent, non-identically distributed coordinates).
    Parameters are integer indices into the first axis.
    """

    def __init__(self, pmf, n=None, truth=0, name="discrete"):
        pmf = np.asarray(pmf, dtype=float)
        if pmf.ndim == 2:
            if n is None:
                raise ValueError("i.i.d. pmf table needs n")
            self.iid = True
            self._base = pmf
            table = np.broadcast_to(pmf[:, None, :], (pmf.shape[0], int(n), pmf.shape[1]))
        elif pmf.ndim == 3:
            if n is not None and n != pmf.shape[1]:
                raise DimensionMismatch(f"table has {pmf.shape[1]} coordinates, n={n}")
            self.iid = False
            self._base = pmf
            table = pmf
        else:
            raise ValueError("pmf must have shape (P, b) or (P, n, b)")
        if np.any(table < 0):
            raise ValueError("negative probabilities")
        sums = table.sum(axis=-1)
        if np.any(np.abs(sums - 1.0) > ROW_TOL):
            raise ValueError(f"pmf rows must sum to 1 within {ROW_TOL}")
        self.table = table
        self.logtable = safe_log(table)
        self.n = table.shape[1]
        self.n_params = table.shape[0]
        self.n_outcomes = table.shape[2]
        self.truth = int(truth)
        self.name = name
        if not 0 <= self.truth < self.n_params:
            raise IndexError(f"truth {truth} outside grid of size {self.n_params}")

    def at(self, n):
        """Same i.i.d. family at another sample size."""
        if not self.iid:
            raise DimensionMismatch("an i.n.i.d. table has a fixed n")
        return DiscreteExperiment(self._base, n=n, truth=self.truth, name=self.name)

    @property
    def params(self):
        return list(range(self.n_params))

    def coord_pmfs(self, theta):
        return self.table[int(theta)]

    def coordinate_pairs(self, theta_a, theta_b):
        """Per-coordinate (f_i, g_i) pairs between two parameters."""
        fa, fb = self.coord_pmfs(theta_a), self.coord_pmfs(theta_b)
        return [(fa[i], fb[i]) for i in range(self.n)]

    def loglik(self, theta, x):
        vals = np.asarray(x.values, dtype=int)
        if vals.shape[0] != self.n:
            raise DimensionMismatch(f"batch of length {vals.shape[0]} for n={self.n}")
        return float(self.logtable[int(theta), np.arange(self.n), vals].sum())

    def logliks(self, thetas, x):
        vals = np.asarray(x.values, dtype=int)
        if vals.shape[0] != self.n:
            raise DimensionMismatch(f"batch of length {vals.shape[0]} for n={self.n}")
        idx = np.asarray(thetas, dtype=int)
        return self.logtable[idx][:, np.arange(self.n), vals].sum(axis=1)

    def loglik_batch(self, thetas, X):
        """Log-likelihoods of many batches: ``X`` is (B, n), result is (B, len(thetas))."""
        X = np.asarray(X, dtype=int)
        idx = np.asarray(thetas, dtype=int)
        if X.shape[1] != self.n:
            raise DimensionMismatch(f"batches of length {X.shape[1]} for n={self.n}")
        if self.iid:
            counts = _row_counts(X, self.n_outcomes)
            logp = self._base_log()[idx]  # (P, b)
            with np.errstate(invalid="ignore"):
                terms = np.where(counts[:, None, :] > 0, counts[:, None, :] * logp[None, :, :], 0.0)
            return terms.sum(axis=2)
        out = np.zeros((X.shape[0], idx.size))
        cols = np.arange(self.n)
        for j, t in enumerate(idx):
            out[:, j] = self.logtable[t][cols[None, :], X].sum(axis=1)
        return out

    def _base_log(self):
        return safe_log(self._base) if self.iid else self.logtable[:, 0, :]

    def sample(self, theta, n, seed):
        if n != self.n:
            if self.iid:
                return self.at(n).sample(theta, n, seed)
            raise DimensionMismatch(f"i.n.i.d. experiment has n={self.n}, asked for {n}")
        X = self.sample_many(theta, 1, seed)
        return SampleBatch(X[0], self.n)

    def sample_many(self, theta, count, seed, tag="discrete-sample"):
        """``count`` independent batches as a (count, n) integer array."""
        gen = rng.stream(seed, tag, int(theta))
        u = gen.random((count, self.n))
        cum = np.cumsum(self.table[int(theta)], axis=-1)  # (n, b)
        X = (u[:, :, None] >= cum[None, :, :]).sum(axis=2)
        return np.minimum(X, self.n_outcomes - 1)

    def state_count(self):
        return self.n_outcomes ** self.n


def _row_counts(X, b):
    B = X.shape[0]
    flat = X + b * np.arange(B)[:, None]
    return np.bincount(flat.ravel(), minlength=B * b).reshape(B, b)
