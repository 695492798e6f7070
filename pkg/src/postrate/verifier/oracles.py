"""Exact laws of log-likelihood ratios under the truth, by enumeration.

Each oracle returns ``(lr, prob)``: ``lr[t, j]`` is log p_j - log p_0 on
sample class ``t`` and ``prob[t]`` its probability under the truth.  Any
expectation of a function of the ratio vector is then ``prob @ g(lr)``.

i.i.d.     multinomial types (count vectors) of n draws over b outcomes
i.n.i.d.   every path in the product space (at most 2^21 of them)
Markov     initial state plus transition-count matrix, by dynamic programming
"""

import itertools
import math

import numpy as np
from scipy.special import gammaln

from ..errors import StateSpaceTooLarge, UnsupportedKind
from ..experiment import DiscreteExperiment
from ..models.markov import FiniteMarkovModel

MAX_PATHS = 2**21


def _types(n, b):
    """All count vectors of length b summing to n."""
    out = []
    for bars in itertools.combinations(range(n + b - 1), b - 1):
        prev, counts = -1, []
        for c in bars:
            counts.append(c - prev - 1)
            prev = c
        counts.append(n + b - 2 - prev)
        out.append(counts)
    return np.array(out, dtype=float)


def iid_type_law(exp, thetas=None):
    thetas = exp.params if thetas is None else list(thetas)
    b, n = exp.n_outcomes, exp.n
    C = _types(n, b)
    base = exp.table[:, 0, :]
    with np.errstate(divide="ignore"):
        logp = np.log(base)
    t0 = exp.truth
    log_multi = gammaln(n + 1) - gammaln(C + 1).sum(axis=1)
    with np.errstate(invalid="ignore"):
        ll0 = np.where(C > 0, C * logp[t0][None, :], 0.0).sum(axis=1)
        ll = np.where(C[:, None, :] > 0, C[:, None, :] * logp[thetas][None, :, :], 0.0).sum(axis=2)
    prob = np.exp(log_multi + ll0)
    keep = prob > 0
    return ll[keep] - ll0[keep, None], prob[keep]


def inid_path_law(exp, thetas=None):
    thetas = exp.params if thetas is None else list(thetas)
    if exp.state_count() > MAX_PATHS:
        raise StateSpaceTooLarge(f"{exp.state_count()} paths exceed {MAX_PATHS}")
    idx = np.asarray(thetas, dtype=int)
    t0 = exp.truth
    ll = np.zeros((1, idx.size))
    ll0 = np.zeros(1)
    for i in range(exp.n):
        lt = exp.logtable[idx, i, :].T  # (b, P)
        ll = (ll[:, None, :] + lt[None, :, :]).reshape(-1, idx.size)
        ll0 = (ll0[:, None] + exp.logtable[t0, i, :][None, :]).reshape(-1)
        keep = np.isfinite(ll0)
        ll, ll0 = ll[keep], ll0[keep]
    return ll - ll0[:, None], np.exp(ll0)


def markov_law(m, thetas=None):
    thetas = m.params if thetas is None else list(thetas)
    idx = np.asarray(thetas, dtype=int)
    classes = m.path_classes()
    t0 = m.truth
    x0 = np.array([c[0] for c in classes])
    counts = np.array([c[1].ravel() for c in classes], dtype=float)
    prob = np.array([c[2] for c in classes])
    logt = m.logtrans[idx].reshape(idx.size, -1)
    with np.errstate(invalid="ignore"):
        ll = np.where(counts[:, None, :] > 0, counts[:, None, :] * logt[None], 0.0).sum(axis=2)
        ll0 = np.where(counts > 0, counts * m.logtrans[t0].ravel()[None], 0.0).sum(axis=1)
    ll = ll + m.loginit[idx][:, x0].T
    ll0 = ll0 + m.loginit[t0][x0]
    return ll - ll0[:, None], prob


def exact_law(exp, thetas=None):
    """Dispatch to the enumeration that fits the experiment."""
    if isinstance(exp, FiniteMarkovModel):
        return markov_law(exp, thetas)
    if isinstance(exp, DiscreteExperiment):
        if exp.iid:
            return iid_type_law(exp, thetas)
        return inid_path_law(exp, thetas)
    raise UnsupportedKind(f"no exact law for {type(exp).__name__}")


def expectation(law, g):
    """E_truth[g(lr)] together with Var_truth[g(lr)]."""
    lr, prob = law
    vals = np.asarray(g(lr), dtype=float)
    mean = math.fsum(prob * vals)
    var = max(math.fsum(prob * (vals - mean) ** 2), 0.0)
    return mean, var


def total_probability(law):
    return math.fsum(law[1])
