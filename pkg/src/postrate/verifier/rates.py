"""Posterior contraction curves over a grid of sample sizes.

Per n, fresh truth samples are drawn, the posterior is computed (exactly,
conjugately or by importance sampling) and two summaries are kept per
replicate: the posterior mass outside r * eps_n and the 0.9-quantile of the
posterior distance to the truth.  Medians over replicates form the curve.
"""

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import stats

from .. import rng
from ..errors import DegenerateESS
from ..models.autoregression import ARModel, StepDistance, admissible_b1, ar_design
from ..models.gaussian_sequence import GaussSeqModel
from ..posterior import (
    gauss_seq_posterior_exact,
    log_tail_mass,
    posterior_exact,
    posterior_importance,
    pseudoposterior_exact,
)
from ..priors import gauss_seq_prior, step_uniform_prior


@dataclass
class RateCheckConfig:
    r: float = 4.0
    replicates: int = 20
    mc_budget: int = 20_000
    quantile: float = 0.9
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.r <= 0 or self.replicates < 1 or self.mc_budget < 1:
            raise ValueError("need r > 0, replicates >= 1 and mc_budget >= 1")
        if not 0 < self.quantile < 1:
            raise ValueError("quantile must lie in (0, 1)")


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    stderr: float
    lo: float
    hi: float


def fit_slope(n_grid, values, level=0.95):
    """Least-squares slope of log(values) against log(n) with a t-based band."""
    x = np.log(np.asarray(n_grid, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    res = stats.linregress(x, y)
    dof = len(x) - 2
    half = stats.t.ppf(0.5 + level / 2, dof) * res.stderr if dof > 0 else math.inf
    return SlopeFit(float(res.slope), float(res.intercept), float(res.stderr),
                    float(res.slope - half), float(res.slope + half))


@dataclass
class RateCurve:
    family: str
    n_grid: list
    epsilon_n: list
    tail_mass: list
    q_radius: list
    slope: float
    slope_lo: float
    slope_hi: float
    predicted: float
    r: float
    log_tail_mass: list = field(default_factory=list)
    replicate_tail: list = field(default_factory=list)
    replicate_radius: list = field(default_factory=list)
    tail_decreasing: bool = None

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if any(not 0.0 <= t <= 1.0 for t in self.tail_mass):
            raise ValueError("tail masses must lie in [0, 1]")

    def to_record(self):
        return asdict(self)


def strictly_decreasing(values):
    return all(b < a for a, b in zip(values, values[1:]))


def measure_contraction(family, n_grid, cfg, seed=0, keep_replicates=False):
    """Rate curve for ``family`` over ``n_grid``.

    ``family`` exposes ``name``, ``predicted``, ``epsilon(n)`` and
    ``replicate(n, r, quantile, budget, seed) -> (log tail mass, radius quantile)``.
    """
    n_grid = [int(n) for n in n_grid]
    eps, tails, logtails, radii = [], [], [], []
    rep_tails, rep_radii = [], []
    for n in n_grid:
        lt, rq = [], []
        for rep in range(cfg.replicates):
            s = rng.child_seed(seed, f"{family.name}-n{n}", rep)
            try:
                log_tail, radius = family.replicate(n, cfg.r, cfg.quantile, cfg.mc_budget, s)
            except DegenerateESS as err:
                err.n = n
                raise
            lt.append(log_tail)
            rq.append(radius)
        lt, rq = np.array(lt), np.array(rq)
        med_log = float(np.median(lt))
        eps.append(float(family.epsilon(n)))
        logtails.append(med_log)
        tails.append(float(min(1.0, math.exp(med_log))) if np.isfinite(med_log) else 0.0)
        radii.append(float(np.median(rq)))
        rep_tails.append(lt.tolist())
        rep_radii.append(rq.tolist())
    if len(n_grid) >= 2 and all(r > 0 for r in radii):
        fit = fit_slope(n_grid, radii)
        slope, lo, hi = fit.slope, fit.lo, fit.hi
    else:
        slope = lo = hi = math.nan
    return RateCurve(
        family=family.name,
        n_grid=n_grid,
        epsilon_n=eps,
        tail_mass=tails,
        q_radius=radii,
        slope=slope,
        slope_lo=lo,
        slope_hi=hi,
        predicted=family.predicted,
        r=cfg.r,
        log_tail_mass=logtails,
        replicate_tail=rep_tails if keep_replicates else [],
        replicate_radius=rep_radii if keep_replicates else [],
        tail_decreasing=strictly_decreasing(logtails),
    )


def contracts(curve):
    """Median tail mass non-increasing in n, and either lower at the end or zero throughout."""
    lt = curve.log_tail_mass
    monotone = all(b <= a for a, b in zip(lt, lt[1:]))
    return monotone and (lt[-1] < lt[0] or all(v == -math.inf for v in lt))


def r_sweep(family, n_grid, cfg, rs=(2.0, 4.0, 8.0), seed=0):
    """Contraction verdict at each radius multiplier and the smallest passing one (None if none pass)."""
    rs = sorted(float(r) for r in rs)
    passes = [contracts(measure_contraction(family, n_grid, replace(cfg, r=r), seed=seed)) for r in rs]
    smallest = next((r for r, ok in zip(rs, passes) if ok), None)
    return {"name": f"r-sweep-{family.name}", "rs": rs, "r_passes": passes, "smallest_r": smallest}


def _weighted_quantile(values, weights, q):
    order = np.argsort(values, kind="stable")
    cw = np.cumsum(weights[order])
    k = int(np.searchsorted(cw, q * cw[-1], side="left"))
    return float(values[order][min(k, len(values) - 1)])


# -- families -------------------------------------------------------------------------


class GaussSeqFamily:
    """Conjugate prior N(0, diag(1/(k i^(2 gamma)))) on theta_(k), k = floor(c n^(1/(2 gamma + 1)))."""

    def __init__(self, gamma=1.0, c=1.0, rho=0.0, draws=4000):
        self.gamma, self.c, self.rho, self.draws = float(gamma), float(c), float(rho), int(draws)
        self.name = f"gauss-seq-g{self.gamma:g}"
        self.predicted = -self.gamma / (2 * self.gamma + 1)

    def epsilon(self, n):
        return n ** self.predicted

    def k(self, n):
        # guard against exact powers landing just below an integer (64^(1/3) = 3.999...)
        return max(1, int(math.floor(self.c * n ** (1.0 / (2 * self.gamma + 1)) + 1e-9)))

    def replicate(self, n, r, quantile, budget, seed):
        m = GaussSeqModel(n, self.gamma, rho=self.rho)
        x = m.sample_truth(n, seed)
        post = gauss_seq_posterior_exact(m, gauss_seq_prior(self.k(n), self.gamma), x)
        k = post.k
        theta0 = m.truth
        bias_tail = float(np.sum(theta0[k:] ** 2))
        draws = post.sample(self.draws, rng.child_seed(seed, "gauss-posterior-draws", 0))[:, :k]
        d = np.sqrt(np.sum((draws - theta0[None, :k]) ** 2, axis=1) + bias_tail)
        hit = np.mean(d >= r * self.epsilon(n))
        log_tail = math.log(hit) if hit > 0 else -math.inf
        return log_tail, float(np.quantile(d, quantile))


class ARFamily:
    """Nonlinear AR(1) with f0 = (M/2) tanh, uniform step prior with at most ``k_cap`` cells, SNIS posterior.

    With the prior as proposal and 2e4 draws the effective sample size stays
    above 10 up to n = 400 only for two cells; three cells fall to about 8.
    """

    def __init__(self, M=2.0, L=None, k_cap=2, f0=None):
        self.M = float(M)
        self.f0 = f0 if f0 is not None else (lambda x, M=self.M: 0.5 * M * np.tanh(x))
        self.L = 0.5 * self.M if L is None else float(L)
        self.k_cap = int(k_cap)
        self.name = "ar-step"
        self.predicted = -1.0 / 3.0
        self._dist = {}

    def epsilon(self, n):
        return (math.sqrt(math.log(n)) / n) ** (1.0 / 3.0)

    def design(self, n):
        m = ARModel(self.f0, self.M, n=n)
        a0, a1 = m.bounds
        b1 = admissible_b1(a0, a1)
        A, K, _ = ar_design(self.epsilon(n), self.M, self.L, b1, self.f0)
        return m, A, min(K, self.k_cap), b1

    def distance(self, A, K):
        key = (round(A, 12), K)
        if key not in self._dist:
            self._dist[key] = StepDistance(self.f0, A, K)
        return self._dist[key]

    def replicate(self, n, r, quantile, budget, seed):
        m, A, K, _ = self.design(n)
        x = m.sample_truth(n, seed)
        prior = step_uniform_prior(self.M, K, A)
        post = posterior_importance(m, prior, x, budget, rng.child_seed(seed, "ar-snis", 0))
        d = self.distance(A, K)(post.support)
        return log_tail_mass(post, d, r * self.epsilon(n)), _weighted_quantile(d, post.weights, quantile)


class DiscreteFamily:
    """Posterior or pseudoposterior on a finite grid; distances are d_n^0 to the truth.

    ``pseudo`` routes through the pseudoposterior engine even at beta = 1.
    """

    def __init__(self, exp, prior, d_to_truth, epsilon_fn, beta=1.0, pseudo=False, name="discrete", predicted=-0.5):
        self.exp, self.prior, self.beta, self.pseudo = exp, prior, float(beta), bool(pseudo or beta != 1.0)
        self.d = np.asarray(d_to_truth, dtype=float)
        self.epsilon = epsilon_fn
        self.name = name
        self.predicted = predicted

    def replicate(self, n, r, quantile, budget, seed):
        e = self.exp.at(n)
        x = e.sample_truth(n, seed)
        if self.pseudo:
            post = pseudoposterior_exact(e, self.prior, x, self.beta)
        else:
            post = posterior_exact(e, self.prior, x)
        return log_tail_mass(post, self.d, r * self.epsilon(n)), _weighted_quantile(self.d, post.weights, quantile)
