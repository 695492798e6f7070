"""Concentration neighbourhoods of the truth and their prior masses.

W     joint H*(p0, p) <= sqrt((2/3)(exp(1.5 n eps^2) - 1))
Wbar  (1/n) sum_i H*_i^2 <= eps^2                  (independent coordinates)
B     K <= n eps^2 and V_{k,0} <= n^(k/2) eps^k
W1    H*(transitions)^2 + H*(initial laws)^2 / n <= eps^2   (Markov chains)
"""

import math
from dataclasses import dataclass

import numpy as np

from .divergences import (
    gaussian_closed_forms,
    gaussian_kl_moments,
    hellinger_star_sq,
    kl_and_moments,
    poisson_hstar_sq,
    product_hstar_sq,
    product_pmf,
)
from .errors import BudgetZero, StateSpaceTooLarge, UnsupportedKind
from .experiment import DiscreteExperiment
from .models.gaussian_sequence import GaussSeqModel
from .models.markov import FiniteMarkovModel, MarkovModel
from .models.poisson import PoissonRegModel
from .priors import PriorSpec, sample_prior

_ALIASES = {"W": "W", "W_n": "W", "Wbar": "Wbar", "W̄_n": "Wbar", "B": "B", "B_n": "B", "W1": "W1", "W¹_n": "W1"}
_TOL = 1e-12
_MAX_STATES = 10**6


@dataclass(frozen=True)
class NeighborhoodSpec:
    kind: str
    epsilon: float
    n: int
    k: float = 2

    def __post_init__(self):
        if self.kind not in _ALIASES:
            raise UnsupportedKind(f"unknown neighbourhood {self.kind!r}")
        object.__setattr__(self, "kind", _ALIASES[self.kind])
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.kind == "B" and not self.k > 1:
            raise ValueError("B_n needs moment order k > 1")

    def widen(self, epsilon):
        return NeighborhoodSpec(self.kind, epsilon, self.n, self.k)


def w_radius(n, epsilon):
    """H* radius of W_n: sqrt((2/3)(exp(1.5 n eps^2) - 1))."""
    return math.sqrt(2.0 / 3.0 * math.expm1(1.5 * n * epsilon**2))


# -- divergences between the truth and theta, by experiment shape ----------


def joint_hstar_sq(exp, theta):
    t0 = exp.truth
    if isinstance(exp, DiscreteExperiment):
        return product_hstar_sq(exp.coordinate_pairs(t0, theta))
    if isinstance(exp, FiniteMarkovModel):
        return exp.joint_hstar_sq(t0, theta)
    if isinstance(exp, GaussSeqModel):
        return gaussian_closed_forms(exp.coords(t0) - exp.coords(theta), exp.precision_dense())[1]
    if isinstance(exp, PoissonRegModel):
        terms = coord_hstar_sq(exp, theta)
        return (math.prod(1.0 + 1.5 * terms) - 1.0) / 1.5
    raise UnsupportedKind(f"joint H* is not available for {type(exp).__name__}")


def coord_hstar_sq(exp, theta):
    """Per-coordinate H*_i^2 for experiments with independent coordinates."""
    t0 = exp.truth
    if isinstance(exp, DiscreteExperiment):
        return np.array([hellinger_star_sq(f, g) for f, g in exp.coordinate_pairs(t0, theta)])
    if isinstance(exp, GaussSeqModel) and exp.diagonal:
        delta = exp.coords(t0) - exp.coords(theta)
        return 2.0 / 3.0 * np.expm1(3.0 * exp.n * delta**2 / 8.0)
    if isinstance(exp, PoissonRegModel):
        r0, r = exp.rates(t0), exp.rates(theta)
        return np.array([poisson_hstar_sq(a, b) for a, b in zip(r0, r)])
    raise UnsupportedKind(f"{type(exp).__name__} has no independent coordinates")


def avg_hstar_sq(exp, theta):
    return float(np.mean(coord_hstar_sq(exp, theta)))


def kl_and_centered_moment(exp, theta, k=2):
    """(K, V_{k,0}) between the joint laws of the truth and theta."""
    t0 = exp.truth
    if isinstance(exp, GaussSeqModel):
        K, V = gaussian_kl_moments(exp.coords(t0) - exp.coords(theta), exp.precision_dense(), ks=(k,))
        return K, V[int(k)]
    if isinstance(exp, DiscreteExperiment):
        pairs = exp.coordinate_pairs(t0, theta)
        reports = [kl_and_moments(f, g, ks=(2,)) for f, g in pairs]
        K = math.fsum(r.kl for r in reports)
        if k == 2 or not np.isfinite(K):
            # independent log-ratios: variances add
            return K, math.fsum(r.v_centered[2] for r in reports) if np.isfinite(K) else math.inf
        if exp.state_count() > _MAX_STATES:
            raise StateSpaceTooLarge(f"{exp.state_count()} joint states")
        f = product_pmf([p for p, _ in pairs])
        g = product_pmf([q for _, q in pairs])
        rep = kl_and_moments(f, g, ks=(k,))
        return rep.kl, rep.v_centered[k]
    if isinstance(exp, FiniteMarkovModel):
        return _markov_kl_moment(exp, theta, k)
    raise UnsupportedKind(f"K and V_k0 are not available for {type(exp).__name__}")


def _markov_kl_moment(m, theta, k):
    t0 = m.truth
    probs, lr = [], []
    with np.errstate(divide="ignore", invalid="ignore"):
        dlog = np.where(m.trans[t0] > 0, m.logtrans[t0] - m.logtrans[theta], 0.0)
        dinit = np.where(m.init[t0] > 0, m.loginit[t0] - m.loginit[theta], 0.0)
    for x0, counts, p in m.path_classes():
        probs.append(p)
        lr.append(dinit[x0] + float(np.sum(counts * dlog)))
    probs, lr = np.array(probs), np.array(lr)
    if not np.all(np.isfinite(lr)):
        return math.inf, math.inf
    K = math.fsum(probs * lr)
    return K, math.fsum(probs * np.abs(lr - K) ** k)


def markov_parts(exp, theta):
    """(transition H*^2, initial H*^2)."""
    if not isinstance(exp, MarkovModel):
        raise UnsupportedKind("W1_n needs a Markov experiment")
    t0 = exp.truth
    return exp.transition_hstar_sq(t0, theta), exp.initial_hstar_sq(t0, theta)


def member(spec, exp, theta):
    """Is ``theta`` in the neighbourhood of the experiment's truth?"""
    n, eps = spec.n, spec.epsilon
    if spec.kind == "W":
        if isinstance(exp, MarkovModel) and not isinstance(exp, FiniteMarkovModel):
            raise UnsupportedKind("joint H* of a continuous chain is not computed")
        return joint_hstar_sq(exp, theta) <= w_radius(n, eps) ** 2 * (1 + _TOL)
    if spec.kind == "Wbar":
        return avg_hstar_sq(exp, theta) <= eps**2 * (1 + _TOL)
    if spec.kind == "B":
        K, V = kl_and_centered_moment(exp, theta, spec.k)
        return K <= n * eps**2 * (1 + _TOL) and V <= n ** (spec.k / 2.0) * eps**spec.k * (1 + _TOL)
    trans, init = markov_parts(exp, theta)
    return trans + init / n <= eps**2 * (1 + _TOL)


def prior_mass(spec, exp, prior, mc_budget=0, seed=0):
    """(estimate, stderr) of the prior mass of the neighbourhood.

    Finite priors are summed exactly; other priors are sampled ``mc_budget``
    times and the member fraction carries a binomial standard error.
    """
    if isinstance(prior, PriorSpec) and prior.finite:
        mask = np.array([member(spec, exp, t) for t in prior.points])
        return float(prior.weights[mask].sum()), 0.0
    if mc_budget < 1:
        raise BudgetZero("a sampled prior needs mc_budget >= 1")
    draws = sample_prior(prior, mc_budget, seed) if isinstance(prior, PriorSpec) else prior(mc_budget, seed)
    hits = np.array([member(spec, exp, t) for t in draws], dtype=float)
    p = float(hits.mean())
    return p, math.sqrt(p * (1.0 - p) / mc_budget)
