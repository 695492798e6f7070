"""Markov chain experiments.

The joint density of ``(X_0, ..., X_n)`` is ``q(x_0) prod p(x_i | x_{i-1})``.
Transition distances average the conditional Hellinger integrand over a
reference measure ``nu = r mu``.
"""

import math
from abc import abstractmethod
from collections import defaultdict

import numpy as np

from .. import rng
from ..divergences import hellinger_star_sq
from ..errors import BoundsCertificateInvalid, DimensionMismatch
from ..experiment import Experiment, SampleBatch, safe_log


class MarkovModel(Experiment):
    """Markov chain family with a reference density bracketing every transition."""

    markov = True

    @abstractmethod
    def transition_logdensity(self, theta, y, x):
        """log p_theta(y | x)."""

    @abstractmethod
    def initial_logdensity(self, theta, x0):
        """log q_theta(x0)."""

    @property
    @abstractmethod
    def bounds(self):
        """(a0, a1) with a0 r(y) <= p_theta(y|x) <= a1 r(y)."""

    def loglik(self, theta, x):
        return markov_joint_loglik(self, theta, x)


def markov_joint_loglik(m, theta, x):
    """log q_theta(x_0) + sum_i log p_theta(x_i | x_{i-1})."""
    if not getattr(x, "markov", False):
        raise DimensionMismatch("Markov likelihood needs a batch carrying X_0")
    vals = np.asarray(x.values)
    if vals.shape[0] != x.n + 1:
        raise DimensionMismatch(f"expected {x.n + 1} states, got {vals.shape[0]}")
    total = m.initial_logdensity(theta, vals[0])
    if x.n:
        total = total + np.sum(m.transition_logdensity(theta, vals[1:], vals[:-1]))
    return float(total)


class FiniteMarkovModel(MarkovModel):
    """Chains on ``S`` states indexed by a finite parameter grid.

    ``trans[t, x, y] = p_t(y | x)``, ``init[t, x] = q_t(x)``.  The reference
    density ``r`` defaults to uniform mass 1/S on each state.
    """

    def __init__(self, trans, init, n, truth=0, reference=None, name="finite-markov"):
        trans = np.asarray(trans, dtype=float)
        init = np.asarray(init, dtype=float)
        if trans.ndim != 3 or trans.shape[1] != trans.shape[2]:
            raise ValueError("trans must have shape (P, S, S)")
        if init.shape != trans.shape[:2]:
            raise ValueError("init must have shape (P, S)")
        for arr in (trans, init):
            if np.any(arr < 0) or np.any(np.abs(arr.sum(axis=-1) - 1.0) > 1e-12):
                raise ValueError("transition and initial rows must be probability vectors")
        self.trans = trans
        self.init = init
        self.logtrans = safe_log(trans)
        self.loginit = safe_log(init)
        self.n_params, self.n_states = trans.shape[:2]
        self.n = int(n)
        self.truth = int(truth)
        self.name = name
        S = self.n_states
        self.reference = np.full(S, 1.0 / S) if reference is None else np.asarray(reference, float)
        if self.reference.shape != (S,) or np.any(self.reference <= 0):
            raise ValueError("reference must be a positive vector over the states")

    def at(self, n):
        return FiniteMarkovModel(self.trans, self.init, n, self.truth, self.reference, self.name)

    @property
    def params(self):
        return list(range(self.n_params))

    @property
    def bounds(self):
        ratio = self.trans / self.reference[None, None, :]
        return float(ratio.min()), float(ratio.max())

    def check_bounds(self, a0=None, a1=None):
        """Raise BoundsCertificateInvalid unless a0 r <= p <= a1 r with a1 >= a0 > 0, a1 >= 1."""
        b0, b1 = self.bounds
        a0 = b0 if a0 is None else a0
        a1 = b1 if a1 is None else a1
        if not (a0 > 0 and a1 >= a0 and a1 >= 1):
            raise BoundsCertificateInvalid(f"need a1 >= a0 > 0 and a1 >= 1, got a0={a0}, a1={a1}")
        if b0 < a0 - 1e-15 or b1 > a1 + 1e-15:
            raise BoundsCertificateInvalid(f"transitions span [{b0}, {b1}] times r, outside [{a0}, {a1}]")
        return a0, a1

    def transition_logdensity(self, theta, y, x):
        return self.logtrans[int(theta), np.asarray(x, int), np.asarray(y, int)]

    def initial_logdensity(self, theta, x0):
        return self.loginit[int(theta), int(x0)]

    def logliks(self, thetas, x):
        X = np.asarray(x.values, dtype=int)[None, :]
        return self.loglik_batch(thetas, X)[0]

    def transition_counts(self, X):
        """(B, S, S) transition counts of each path in ``X`` (B, n+1)."""
        X = np.asarray(X, dtype=int)
        S = self.n_states
        B = X.shape[0]
        pair = X[:, :-1] * S + X[:, 1:] + (S * S) * np.arange(B)[:, None]
        return np.bincount(pair.ravel(), minlength=B * S * S).reshape(B, S, S)

    def loglik_batch(self, thetas, X):
        X = np.asarray(X, dtype=int)
        if X.shape[1] != self.n + 1:
            raise DimensionMismatch(f"paths of length {X.shape[1]} for n={self.n}")
        idx = np.asarray(thetas, dtype=int)
        counts = self.transition_counts(X).reshape(X.shape[0], -1).astype(float)
        logt = self.logtrans[idx].reshape(idx.size, -1)
        with np.errstate(invalid="ignore"):
            terms = np.where(counts[:, None, :] > 0, counts[:, None, :] * logt[None, :, :], 0.0)
        return terms.sum(axis=2) + self.loginit[idx][:, X[:, 0]].T

    def sample(self, theta, n, seed):
        m = self if n == self.n else self.at(n)
        return SampleBatch(m.sample_many(theta, 1, seed)[0], n, markov=True)

    def sample_many(self, theta, count, seed, tag="markov-sample"):
        gen = rng.stream(seed, tag, int(theta))
        u = gen.random((count, self.n + 1))
        t = int(theta)
        X = np.empty((count, self.n + 1), dtype=int)
        X[:, 0] = np.minimum((u[:, :1] >= np.cumsum(self.init[t])[None, :]).sum(1), self.n_states - 1)
        cum = np.cumsum(self.trans[t], axis=1)
        for i in range(1, self.n + 1):
            rows = cum[X[:, i - 1]]
            X[:, i] = np.minimum((u[:, i:i + 1] >= rows).sum(1), self.n_states - 1)
        return X

    # -- distances -------------------------------------------------------

    def transition_hellinger(self, t1, t2):
        diff = (np.sqrt(self.trans[int(t1)]) - np.sqrt(self.trans[int(t2)])) ** 2
        return math.sqrt(float(self.reference @ diff.sum(axis=1)))

    def transition_hstar_sq(self, t0, t):
        return math.fsum(
            self.reference[x] * hellinger_star_sq(self.trans[int(t0), x], self.trans[int(t), x])
            for x in range(self.n_states)
        )

    def initial_hstar_sq(self, t0, t):
        return hellinger_star_sq(self.init[int(t0)], self.init[int(t)])

    def joint_inverse_root_moment(self, t0, t, n=None):
        """E_{t0}[sqrt(p_t0^(n) / p_t^(n))] by a transfer-matrix power."""
        n = self.n if n is None else n
        p0, p = self.trans[int(t0)], self.trans[int(t)]
        q0, q = self.init[int(t0)], self.init[int(t)]
        with np.errstate(divide="ignore", invalid="ignore"):
            T = np.where(p0 > 0, p0 * np.sqrt(p0 / p), 0.0)
            v = np.where(q0 > 0, q0 * np.sqrt(q0 / q), 0.0)
        return float(v @ np.linalg.matrix_power(T, n) @ np.ones(self.n_states))

    def joint_affinity(self, t0, t, n=None):
        """sum over paths of sqrt(p_t0^(n) p_t^(n)) = 1 - H^2/2."""
        n = self.n if n is None else n
        T = np.sqrt(self.trans[int(t0)] * self.trans[int(t)])
        v = np.sqrt(self.init[int(t0)] * self.init[int(t)])
        return float(v @ np.linalg.matrix_power(T, n) @ np.ones(self.n_states))

    def joint_hstar_sq(self, t0, t, n=None):
        return (self.joint_inverse_root_moment(t0, t, n) - 1.0) / 1.5

    def joint_hellinger_sq(self, t0, t, n=None):
        return 2.0 * (1.0 - self.joint_affinity(t0, t, n))

    def path_classes(self, n=None):
        """Exact law of the sufficient statistic (X_0, transition counts) under the truth.

        Dynamic programme over (x_0, last state, counts); returns a list of
        ``(x0, counts (S, S), probability)``.
        """
        n = self.n if n is None else n
        S = self.n_states
        t0 = self.truth
        layer = defaultdict(float)
        for x0 in range(S):
            if self.init[t0, x0] > 0:
                layer[(x0, x0, (0,) * (S * S))] += self.init[t0, x0]
        for _ in range(n):
            nxt = defaultdict(float)
            for (x0, last, counts), prob in layer.items():
                for y in range(S):
                    p = self.trans[t0, last, y]
                    if p == 0:
                        continue
                    c = list(counts)
                    c[last * S + y] += 1
                    nxt[(x0, y, tuple(c))] += prob * p
            layer = nxt
        merged = defaultdict(float)
        for (x0, _last, counts), prob in layer.items():
            merged[(x0, counts)] += prob
        return [(x0, np.array(c).reshape(S, S), p) for (x0, c), p in merged.items()]


def transition_hellinger(m, t1, t2):
    """nu-averaged conditional Hellinger distance between two transition laws."""
    return m.transition_hellinger(t1, t2)


def two_state_family(ps, qs, n, truth=0, init=None):
    """Two-state chains with P(0->1) = p and P(1->0) = q for each (p, q) pair."""
    trans = np.array([[[1 - p, p], [q, 1 - q]] for p, q in zip(ps, qs)])
    if init is None:
        init = np.full((len(ps), 2), 0.5)
    return FiniteMarkovModel(trans, init, n=n, truth=truth, name="two-state")
