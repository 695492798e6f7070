"""Posteriors, pseudoposteriors and evidence.

Finite priors are handled exactly in log space.  Continuous priors use
self-normalised importance sampling with the prior as proposal, or the
conjugate Gaussian form for the sequence model.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import rng
from .errors import AllZeroLikelihood, DegenerateESS, NonDominated, NotPositiveDefinite, UnsupportedKind
from .experiment import log_likelihood_ratio
from .models.autoregression import ARModel
from .models.gaussian_sequence import GaussSeqModel
from .priors import PriorSpec, gauss_seq_precision, sample_prior

MIN_ESS = 10.0


@dataclass
class PosteriorResult:
    support: list
    log_weights: np.ndarray
    log_evidence: float
    ess: float = None
    exact: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def weights(self):
        return np.exp(self.log_weights)

    def __len__(self):
        return len(self.log_weights)


def _log_ratios(exp, points, x):
    """log p_theta(x) - log p_theta0(x) for every support point."""
    l0 = exp.loglik(exp.truth, x)
    if not np.isfinite(l0):
        raise NonDominated("truth density is zero on the observed sample")
    return np.asarray(exp.logliks(points, x), dtype=float) - l0


def _normalise(support, log_prior, log_lik, beta, exact=True, meta=None):
    # beta multiplies the log-likelihood ratio; beta = 1.0 is an exact no-op
    with np.errstate(invalid="ignore"):
        scaled = np.where(np.isneginf(log_lik), -np.inf, beta * log_lik)
    lw = log_prior + scaled
    if not np.any(np.isfinite(lw)):
        raise AllZeroLikelihood("every support point has zero likelihood")
    log_ev = float(logsumexp(lw))
    return PosteriorResult(support, lw - log_ev, log_ev, exact=exact, meta=meta or {})


def pseudoposterior_exact(exp, prior, x, beta):
    """Weights proportional to prior * R^beta on a finite prior."""
    if not 0 < beta <= 1:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    points, weights = _finite(prior)
    with np.errstate(divide="ignore"):
        log_prior = np.log(np.asarray(weights, dtype=float))
    return _normalise(points, log_prior, _log_ratios(exp, points, x), float(beta), meta={"beta": float(beta)})


def posterior_exact(exp, prior, x):
    """Exact posterior on a finite prior.  A power-data prior gives the pseudoposterior."""
    if isinstance(prior, PriorSpec) and prior.kind == "power_data":
        return pseudoposterior_exact(exp, prior.params["base"], x, prior.params["beta"])
    return pseudoposterior_exact(exp, prior, x, 1.0)


def _finite(prior):
    if isinstance(prior, PriorSpec):
        if not prior.finite:
            raise UnsupportedKind(f"{prior.kind} prior is not finite")
        return prior.points, prior.weights
    return list(prior.points), prior.weights


def batch_log_ratios(exp, prior, draws, x):
    """Log-likelihood ratios of prior draws, vectorised where the model allows."""
    if isinstance(exp, ARModel) and prior.kind == "step_uniform":
        A, K = prior.params["A"], prior.params["K"]
        return exp.step_logliks(draws, A, K, x) - exp.loglik(exp.truth, x)
    if isinstance(exp, GaussSeqModel):
        l0 = exp.loglik(exp.truth, x)
        T = np.zeros((len(draws), exp.dim))
        m = min(exp.dim, draws.shape[1])
        T[:, :m] = draws[:, :m]
        return exp.loglik_matrix(T, x) - l0
    return np.array([log_likelihood_ratio(exp, t, x) for t in draws])


def posterior_importance(exp, prior, x, budget, seed, beta=1.0, raise_on_degenerate=True):
    """Self-normalised importance sampling with the prior as proposal.

    The log-evidence estimate is log mean(R).  Raises DegenerateESS (with the
    result attached) when fewer than ten effective draws remain.
    """
    if budget < 100:
        raise ValueError("importance sampling needs budget >= 100")
    if prior.kind == "power_data":
        beta, prior = prior.params["beta"], prior.params["base"]
    draws = sample_prior(prior, budget, seed)
    lr = batch_log_ratios(exp, prior, draws, x)
    lw = np.where(np.isneginf(lr), -np.inf, beta * lr)
    if not np.any(np.isfinite(lw)):
        raise AllZeroLikelihood("every draw has zero likelihood")
    total = float(logsumexp(lw))
    log_weights = lw - total
    ess = float(math.exp(2 * total - logsumexp(2 * lw)))
    res = PosteriorResult(
        list(draws) if not isinstance(draws, np.ndarray) else draws,
        log_weights,
        total - math.log(budget),
        ess=ess,
        exact=False,
        meta={"beta": float(beta), "budget": int(budget)},
    )
    if ess < MIN_ESS and raise_on_degenerate:
        err = DegenerateESS(f"effective sample size {ess:.2f} < {MIN_ESS}", ess=ess, n=getattr(exp, "n", None))
        err.result = res
        raise err
    return res


def _distances(post, d_to_truth):
    if callable(d_to_truth):
        return np.array([d_to_truth(t) for t in post.support], dtype=float)
    return np.asarray(d_to_truth, dtype=float)


def log_tail_mass(post, d_to_truth, radius):
    """log of the posterior mass of {d >= radius}."""
    d = _distances(post, d_to_truth)
    sel = post.log_weights[d >= radius]
    return float(logsumexp(sel)) if sel.size else -math.inf


def posterior_tail_mass(post, d_to_truth, radius):
    """Posterior mass of {theta: d(theta, theta0) >= radius}."""
    d = _distances(post, d_to_truth)
    hit = d >= radius
    if hit.all():
        return 1.0
    return float(min(1.0, np.sum(np.exp(post.log_weights[hit]))))


def tail_mass_stderr(post, d_to_truth, radius):
    """Delta-method standard error of a self-normalised tail mass; 0 on exact posteriors."""
    if post.exact:
        return 0.0
    d = _distances(post, d_to_truth)
    w = post.weights
    hit = (d >= radius).astype(float)
    p = float(np.sum(w * hit))
    return float(math.sqrt(np.sum(w**2 * (hit - p) ** 2)))


@dataclass
class GaussianPosterior:
    """Conjugate posterior of theta_(k); coordinates beyond k are zero."""

    mean: np.ndarray
    precision: np.ndarray  # (k,) when diagonal, (k, k) otherwise
    k: int
    dim: int

    @property
    def diagonal(self):
        return self.precision.ndim == 1

    def sample(self, count, seed):
        z = rng.stream(seed, "gauss-posterior", 0).standard_normal((count, self.k))
        if self.diagonal:
            head = self.mean[None, :] + z / np.sqrt(self.precision)[None, :]
        else:
            L = np.linalg.cholesky(self.precision)
            head = self.mean[None, :] + np.linalg.solve(L.T, z.T).T
        out = np.zeros((count, self.dim))
        out[:, : self.k] = head
        return out

    def to_result(self, count, seed):
        draws = self.sample(count, seed)
        lw = np.full(count, -math.log(count))
        return PosteriorResult(draws, lw, math.nan, ess=float(count), exact=False, meta={"conjugate": True})


def gauss_seq_posterior_exact(m, prior, x):
    """Exact Gaussian posterior under N(0, Sigma_k) on the first k coordinates."""
    vals = m._values(x)
    k = min(prior.params["k"], m.dim)
    lam = gauss_seq_precision(prior)[:k]
    if m.diagonal:
        prec = m.n + lam
        mean = m.n * vals[:k] / prec
        return GaussianPosterior(mean, prec, k, m.dim)
    P = m.precision_dense()
    prec = P[:k, :k] + np.diag(lam)
    rhs = (P @ vals)[:k]
    try:
        L = np.linalg.cholesky(prec)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    mean = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
    return GaussianPosterior(mean, prec, k, m.dim)
