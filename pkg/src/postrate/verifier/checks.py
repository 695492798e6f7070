"""Monte Carlo bound checks with exact enumeration oracles.

Every check estimates an expectation over truth samples by plain Monte Carlo
(exact inner integral over a finite prior per sample) and compares it with an
explicit right-hand side.  Where the sample space can be enumerated the same
expectation is also computed exactly and the two must agree within the
slack.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..divergences import hellinger, product_hellinger_sq
from ..entropy import WeightedParameterSet, hausdorff_constant
from ..errors import (
    EmptyNeighborhood,
    MetricViolatesIneq1,
    PreconditionViolated,
    UnsupportedKind,
)
from ..experiment import DiscreteExperiment
from ..models.markov import FiniteMarkovModel
from ..neighborhoods import NeighborhoodSpec, prior_mass
from .oracles import MAX_PATHS, exact_law, expectation

EXACT_TOL = 1e-12


@dataclass
class BoundCheck:
    name: str
    lhs: float
    lhs_stderr: float
    rhs: float
    slack_sigmas: float = 3.0
    config: dict = field(default_factory=dict)
    oracle: float = None
    oracle_stderr: float = None

    @property
    def verdict(self):
        return "pass" if self.passed else "fail"

    @property
    def passed(self):
        if self.lhs_stderr > 0:
            return self.lhs <= self.rhs + self.slack_sigmas * self.lhs_stderr
        return self.lhs <= self.rhs + EXACT_TOL * max(1.0, abs(self.rhs))

    @property
    def oracle_agrees(self):
        """MC lhs within slack standard errors of the exact value (None without an oracle)."""
        if self.oracle is None:
            return None
        tol = self.slack_sigmas * self.oracle_stderr if self.oracle_stderr else EXACT_TOL
        return abs(self.lhs - self.oracle) <= tol + EXACT_TOL * max(1.0, abs(self.oracle))

    def to_record(self):
        rec = asdict(self)
        rec["verdict"] = self.verdict
        rec["oracle_agrees"] = self.oracle_agrees
        return rec


# -- metrics -----------------------------------------------------------------


def average_hellinger_metric(exp):
    """d_n^0 on a discrete product experiment, as a full distance matrix."""
    P = exp.n_params
    D = np.zeros((P, P))
    for a in range(P):
        for b in range(a + 1, P):
            h2 = [hellinger(f, g) ** 2 for f, g in exp.coordinate_pairs(a, b)]
            D[a, b] = D[b, a] = math.sqrt(math.fsum(h2) / exp.n)
    return D


def iid_affinity_metric(exp):
    """sqrt(-2 log(1 - H_1^2 / 2)) for i.i.d. experiments; meets d^2 <= -(2/n) log(1 - H^2/2) with equality."""
    if not exp.iid:
        raise UnsupportedKind("the affinity metric needs identically distributed coordinates")
    P = exp.n_params
    D = np.zeros((P, P))
    base = exp.table[:, 0, :]
    for a in range(P):
        for b in range(a + 1, P):
            h = hellinger(base[a], base[b])
            D[a, b] = D[b, a] = math.sqrt(max(-2.0 * math.log1p(-0.5 * h * h), 0.0))
    return D


def transition_metric(m):
    P = m.n_params
    D = np.zeros((P, P))
    for a in range(P):
        for b in range(a + 1, P):
            D[a, b] = D[b, a] = m.transition_hellinger(a, b)
    return D


def check_inequality_one(exp, D, tol=1e-12):
    """Raise MetricViolatesIneq1 unless d^2 <= -(2/n) log(1 - H^2/2) on every pair."""
    P = exp.n_params
    for a in range(P):
        for b in range(a + 1, P):
            h2 = product_hellinger_sq(exp.coordinate_pairs(a, b))
            arg = 1.0 - 0.5 * h2
            if arg <= 0:
                continue
            bound = -2.0 / exp.n * math.log(arg)
            if D[a, b] ** 2 > bound * (1 + 1e-9) + tol:
                raise MetricViolatesIneq1(f"pair ({a}, {b}): d^2 = {D[a, b] ** 2:.6g} > {bound:.6g}")


# -- shared Monte Carlo machinery ----------------------------------------------


def mc_log_ratios(exp, thetas, budget, seed, tag):
    """(budget, len(thetas)) log-likelihood ratios on fresh truth samples."""
    X = exp.sample_many(exp.truth, budget, seed, tag=tag)
    ll = exp.loglik_batch(list(thetas), X)
    ll0 = exp.loglik_batch([exp.truth], X)[:, 0]
    return ll - ll0[:, None]


def _enumerable(exp):
    if isinstance(exp, FiniteMarkovModel):
        return exp.n <= 30
    if isinstance(exp, DiscreteExperiment):
        return exp.iid or exp.state_count() <= MAX_PATHS
    return False


def _finite_prior(prior):
    return np.asarray(prior.points, dtype=int), np.asarray(prior.weights, dtype=float)


def _shell_mask(points, d_truth, eps, theta1):
    mask = d_truth > eps
    if theta1 is not None:
        allowed = set(int(t) for t in theta1)
        mask &= np.array([int(p) in allowed for p in points])
    return mask


def _power_integral(lr, w, beta, alpha):
    # (sum_j w_j exp(beta * lr_j))^alpha for each row
    with np.errstate(over="ignore"):
        inner = np.exp(beta * lr) @ w
    return inner**alpha


def _estimate(exp, points, w, mask, beta, alpha, budget, seed, tag, use_oracle):
    if not mask.any():
        return 0.0, 0.0, (0.0 if use_oracle else None), (0.0 if use_oracle else None)
    sel = points[mask]
    lr = mc_log_ratios(exp, sel, budget, seed, tag)
    vals = _power_integral(lr, w[mask], beta, alpha)
    est = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(budget))
    oracle = oracle_se = None
    if use_oracle and _enumerable(exp):
        mean, var = expectation(exact_law(exp, sel), lambda L: _power_integral(L, w[mask], beta, alpha))
        oracle, oracle_se = mean, math.sqrt(var / budget)
    return est, se, oracle, oracle_se


def _hausdorff(points, w, D, mask, radius, alpha):
    if not mask.any():
        return 0.0
    idx = np.flatnonzero(mask)
    wset = WeightedParameterSet(list(points[idx]), w[idx], distances=D[np.ix_(idx, idx)])
    return hausdorff_constant(wset, radius, alpha).hausdorff_constant


def _require(cond, message):
    if not cond:
        raise PreconditionViolated(message)


# -- propositions ------------------------------------------------------------------


def check_prop2(exp, prior, eps, alpha=0.5, delta=0.25, mc_budget=10_000, seed=0, theta1=None,
                metric=None, slack=3.0, oracle=True):
    """Entropy bound on the alpha-moment of the integrated likelihood ratio outside an eps-ball."""
    _require(0 < delta < 0.5, f"delta must lie in (0, 1/2), got {delta}")
    _require(0 < alpha < 1, f"alpha must lie in (0, 1), got {alpha}")
    _require(eps > 0, "eps must be > 0")
    D = average_hellinger_metric(exp) if metric is None else np.asarray(metric, float)
    check_inequality_one(exp, D)
    points, w = _finite_prior(prior)
    t0 = exp.truth
    d_truth = D[points, t0]
    mask = _shell_mask(points, d_truth, eps, theta1)
    est, se, orc, orc_se = _estimate(exp, points, w, mask, 1.0, alpha, mc_budget, seed, "prop2", oracle)
    C = _hausdorff(points, w, D[np.ix_(points, points)], mask, delta * eps, alpha)
    rhs = 2.0 * math.exp(-0.5 * (1 - alpha) * (1 - 2 * delta) ** 2 * exp.n * eps**2) * C
    cfg = _config(exp, prior, eps=eps, alpha=alpha, delta=delta, mc_budget=mc_budget, seed=seed,
                  shell=int(mask.sum()), hausdorff=C)
    return BoundCheck("prop2", est, se, rhs, slack, cfg, orc, orc_se)


def check_prop0_prop3(exp, prior, eps, alpha=0.5, beta=0.5, mc_budget=10_000, seed=0, theta1=None,
                      metric=None, slack=3.0, oracle=True):
    """Pseudo-likelihood bound; d_n^0 by default (named prop3), a supplied d_n^1 gives prop0."""
    _require(0 < alpha < 1, f"alpha must lie in (0, 1), got {alpha}")
    _require(0 < beta < 1, f"beta must lie in (0, 1), got {beta}")
    _require(eps > 0, "eps must be > 0")
    name = "prop3" if metric is None else "prop0"
    D = average_hellinger_metric(exp) if metric is None else np.asarray(metric, float)
    check_inequality_one(exp, D)
    points, w = _finite_prior(prior)
    d_truth = D[points, exp.truth]
    mask = _shell_mask(points, d_truth, eps, theta1)
    est, se, orc, orc_se = _estimate(exp, points, w, mask, beta, alpha, mc_budget, seed, name, oracle)
    rhs = math.exp(-min(beta, 1 - beta) * alpha * exp.n * eps**2) * float(w[mask].sum()) ** alpha
    cfg = _config(exp, prior, eps=eps, alpha=alpha, beta=beta, mc_budget=mc_budget, seed=seed,
                  shell=int(mask.sum()))
    return BoundCheck(name, est, se, rhs, slack, cfg, orc, orc_se)


def prop4_delta_cap(a0, a1):
    return math.sqrt(a0) / (2.0 * math.sqrt(a1))


def check_prop4(m, prior, eps, alpha=0.25, delta=None, mc_budget=10_000, seed=0, theta1=None,
                slack=3.0, oracle=True):
    """Markov-chain version with the transition Hellinger metric and bracketing constants."""
    a0, a1 = m.check_bounds()
    cap = prop4_delta_cap(a0, a1)
    delta = cap / 2.0 if delta is None else delta
    _require(0 < alpha < 0.5, f"alpha must lie in (0, 1/2), got {alpha}")
    _require(0 < delta < cap, f"delta must lie in (0, {cap:.6g}), got {delta}")
    _require(eps > 0, "eps must be > 0")
    D = transition_metric(m)
    points, w = _finite_prior(prior)
    d_truth = D[points, m.truth]
    mask = _shell_mask(points, d_truth, eps, theta1)
    est, se, orc, orc_se = _estimate(m, points, w, mask, 1.0, alpha, mc_budget, seed, "prop4", oracle)
    C = _hausdorff(points, w, D[np.ix_(points, points)], mask, delta * eps, alpha)
    rate = (0.5 - alpha) * (math.sqrt(a0) / 2 - math.sqrt(a1) * delta) ** 2
    rhs = 2.0 * math.exp(-rate * m.n * eps**2) * C
    cfg = _config(m, prior, eps=eps, alpha=alpha, delta=delta, a0=a0, a1=a1, mc_budget=mc_budget,
                  seed=seed, shell=int(mask.sum()), hausdorff=C)
    return BoundCheck("prop4", est, se, rhs, slack, cfg, orc, orc_se)


# -- evidence lemmas ------------------------------------------------------------------


def check_lemma2(exp, prior, eps, c=1.0, trials=10_000, seed=0, beta=None, slack=3.0, oracle=True):
    """Small-evidence probability bound.

    Markov chains use the W1_n neighbourhood and threshold exp(-n eps^2 (3 a1 + 4c));
    a ``beta`` in (0, 1] selects the pseudo-likelihood version on Wbar_n with
    threshold exp(-n eps^2 (3 + 2c) beta); otherwise W_n with exp(-n eps^2 (3 + 2c)).
    """
    _require(eps > 0 and c > 0, "need eps > 0 and c > 0")
    n = exp.n
    if isinstance(exp, FiniteMarkovModel):
        name, kind = "lemma5", "W1"
        a0, a1 = exp.check_bounds()
        log_thr_rate = -n * eps**2 * (3 * a1 + 4 * c)
        power = 1.0
    elif beta is not None:
        _require(0 < beta <= 1, f"beta must lie in (0, 1], got {beta}")
        name, kind = "lemma4", "Wbar"
        log_thr_rate = -n * eps**2 * (3 + 2 * c) * beta
        power = float(beta)
    else:
        name, kind = "lemma2", "W"
        log_thr_rate = -n * eps**2 * (3 + 2 * c)
        power = 1.0
    mass, _ = prior_mass(NeighborhoodSpec(kind, eps, n), exp, prior)
    if mass <= 0:
        raise EmptyNeighborhood(f"prior gives no mass to {kind}(theta0, {eps})")
    log_thr = log_thr_rate + math.log(mass)
    points, w = _finite_prior(prior)
    logw = np.log(np.where(w > 0, w, 1.0)) + np.where(w > 0, 0.0, -np.inf)

    def below(lr):
        with np.errstate(invalid="ignore"):
            scaled = np.where(np.isneginf(lr), -np.inf, power * lr)
        m = scaled + logw[None, :]
        top = m.max(axis=1)
        log_ev = top + np.log(np.exp(m - top[:, None]).sum(axis=1))
        return (log_ev <= log_thr).astype(float)

    lr = mc_log_ratios(exp, points, trials, seed, name)
    hits = below(lr)
    p = float(hits.mean())
    se = math.sqrt(p * (1 - p) / trials)
    orc = orc_se = None
    if oracle and _enumerable(exp):
        orc, var = expectation(exact_law(exp, points), below)
        orc_se = math.sqrt(var / trials)
    rhs = math.exp(-n * eps**2 * c)
    cfg = _config(exp, prior, eps=eps, c=c, beta=beta, trials=trials, seed=seed,
                  neighborhood=kind, neighborhood_mass=mass, log_threshold=log_thr)
    return BoundCheck(name, p, se, rhs, slack, cfg, orc, orc_se)


# -- entropy conditions ------------------------------------------------------------------


@dataclass
class ShellCondition:
    js: list
    lhs: list
    rhs: list
    passes: list
    global_variant: bool = False

    @property
    def first_failure(self):
        for j, ok in zip(self.js, self.passes):
            if not ok:
                return j
        return None

    @property
    def passed(self):
        return all(self.passes)

    def to_record(self):
        return {"name": "global_condition" if self.global_variant else "shell_condition",
                "js": self.js, "lhs": self.lhs, "rhs": self.rhs, "passes": self.passes,
                "first_failure": self.first_failure, "verdict": "pass" if self.passed else "fail"}


def check_shell_condition(prior, d_matrix, d_to_truth, n, eps, alpha, K3, c1, w_mass, j_max=8,
                          sieve=None, e_matrix=None, global_variant=False):
    """Entropy-versus-concentration condition per shell j*eps < d <= 2 j*eps, j = 2..j_max.

    ``w_mass`` is the prior mass of the concentration neighbourhood; the
    global variant compares C(eps, sieve, alpha)^K3 with exp(c1 n eps^2) w_mass^alpha.
    An empty shell makes its condition vacuous.
    """
    weights = np.asarray(prior.weights, dtype=float)
    points = np.arange(weights.size)
    d_to_truth = np.asarray(d_to_truth, dtype=float)
    E = np.asarray(d_matrix if e_matrix is None else e_matrix, dtype=float)
    in_sieve = np.ones(weights.size, bool) if sieve is None else np.asarray(sieve, bool)
    log_w = math.log(w_mass) if w_mass > 0 else -math.inf
    js, lhs, rhs, ok = [], [], [], []
    shells = [1] if global_variant else range(2, j_max + 1)
    for j in shells:
        if global_variant:
            mask = in_sieve.copy()
        else:
            mask = in_sieve & (d_to_truth > j * eps) & (d_to_truth <= 2 * j * eps)
        log_rhs = c1 * j * j * n * eps**2 + alpha * log_w
        if not mask.any():
            js.append(j), lhs.append(0.0), rhs.append(_exp(log_rhs)), ok.append(True)
            continue
        C = _hausdorff(points, weights, E, mask, j * eps, alpha)
        left = C**K3 if K3 else 1.0
        js.append(j)
        lhs.append(float(left))
        rhs.append(_exp(log_rhs))
        ok.append(bool(math.log(left) <= log_rhs + 1e-12) if left > 0 else True)
    return ShellCondition(js, lhs, rhs, ok, global_variant)


def _exp(x):
    return math.exp(x) if x < 709.0 else math.inf


def _config(exp, prior, **kw):
    cfg = {"experiment": getattr(exp, "name", type(exp).__name__), "n": int(exp.n),
           "prior_size": len(prior.points)}
    cfg.update({k: (float(v) if isinstance(v, (np.floating,)) else v) for k, v in kw.items()})
    return cfg
