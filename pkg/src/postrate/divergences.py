"""Hellinger-type distances, Kullback-Leibler moments and closed forms.

Finite densities are 1-d arrays over a common outcome set.  H* is the
reweighted Hellinger distance

    H*(f, g)^2 = sum (sqrt f - sqrt g)^2 * (2/3 sqrt(f/g) + 1/3),

which satisfies ``E_f[sqrt(f/g)] = 1 + 1.5 H*^2`` exactly.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import special, stats

from .errors import EmptyList, GridMismatch, NotPositiveDefinite, OutOfRange, StateSpaceTooLarge

MAX_PRODUCT_STATES = 10**6


def _pair(f, g):
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape or f.ndim != 1:
        raise GridMismatch(f"densities on different grids: {f.shape} vs {g.shape}")
    return f, g


def _ratio(f, g):
    """f/g with 0/0 -> 1 and f/0 -> inf."""
    with np.errstate(divide="ignore", invalid="ignore"):
        r = f / g
    r = np.where((f == 0) & (g == 0), 1.0, r)
    return np.where((f > 0) & (g == 0), np.inf, r)


def hellinger(f, g):
    f, g = _pair(f, g)
    return math.sqrt(math.fsum((np.sqrt(f) - np.sqrt(g)) ** 2))


def hellinger_star_sq(f, g):
    f, g = _pair(f, g)
    if np.any((f > 0) & (g == 0)):
        return math.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        root = np.where(f > 0, np.sqrt(f / np.where(g > 0, g, 1.0)), 0.0)
    terms = (np.sqrt(f) - np.sqrt(g)) ** 2 * (2.0 / 3.0 * root + 1.0 / 3.0)
    return math.fsum(terms)


def hellinger_star(f, g):
    """Asymmetric modified Hellinger distance; +inf when g misses part of supp(f)."""
    return math.sqrt(hellinger_star_sq(f, g))


def inverse_root_moment(f, g):
    """E_f[sqrt(f/g)], the inverse square-root moment of the likelihood ratio g/f."""
    f, g = _pair(f, g)
    if np.any((f > 0) & (g == 0)):
        return math.inf
    pos = f > 0
    return math.fsum(f[pos] * np.sqrt(f[pos] / g[pos]))


def hellinger_affinity(f, g):
    """E_f[sqrt(g/f)] = sum sqrt(f g)."""
    f, g = _pair(f, g)
    return math.fsum(np.sqrt(f * g))


def sup_ratio(f, g):
    f, g = _pair(f, g)
    return float(np.max(_ratio(f, g)))


@dataclass
class DivergenceReport:
    hellinger: float
    hellinger_star: float
    kl: float
    v_centered: dict = field(default_factory=dict)
    v_raw: dict = field(default_factory=dict)
    sup_ratio: float = 1.0

    def is_zero(self, tol=0.0):
        vals = [self.hellinger, self.hellinger_star, self.kl, *self.v_centered.values(), *self.v_raw.values()]
        return all(abs(v) <= tol for v in vals)


def kl_and_moments(f, g, ks=(2,)):
    """KL divergence K(f, g) with raw and centred absolute log-ratio moments.

    V_k = E_f|log(f/g)|^k and V_{k,0} = E_f|log(f/g) - K|^k.  The centred
    moment is a second pass over the terms once K is known.
    """
    f, g = _pair(f, g)
    ks = [int(k) for k in ks]
    if any(k < 1 for k in ks):
        raise ValueError("moment orders must be >= 1")
    hs = hellinger_star(f, g)
    report = DivergenceReport(
        hellinger=hellinger(f, g), hellinger_star=hs, kl=0.0, sup_ratio=sup_ratio(f, g)
    )
    if np.any((f > 0) & (g == 0)):
        report.kl = math.inf
        report.v_raw = {k: math.inf for k in ks}
        report.v_centered = {k: math.inf for k in ks}
        return report
    pos = f > 0
    fp = f[pos]
    lr = np.log(fp) - np.log(g[pos])
    kl = math.fsum(fp * lr)
    # clamp tiny negative rounding
    report.kl = max(kl, 0.0)
    for k in ks:
        report.v_raw[k] = math.fsum(fp * np.abs(lr) ** k)
        report.v_centered[k] = math.fsum(fp * np.abs(lr - kl) ** k)
    return report


def divergence_report(f, g, ks=(2,)):
    return kl_and_moments(f, g, ks)


def avg_hellinger(per_coord):
    """Root mean square of coordinatewise Hellinger distances."""
    per_coord = list(per_coord)
    if not per_coord:
        raise EmptyList("need at least one coordinate pair")
    sq = [hellinger(f, g) ** 2 for f, g in per_coord]
    return math.sqrt(math.fsum(sq) / len(sq))


def avg_hellinger_star_sq(per_coord):
    """(1/n) sum_i H*_i^2 over coordinate pairs."""
    per_coord = list(per_coord)
    if not per_coord:
        raise EmptyList("need at least one coordinate pair")
    return math.fsum(hellinger_star_sq(f, g) for f, g in per_coord) / len(per_coord)


class ProductAffinity(NamedTuple):
    hellinger: float
    hellinger_star: float
    # 1 + 1.5 H*^2 on the product space vs product of per-coordinate factors
    hstar_joint: float
    hstar_factored: float
    # 1 - H^2/2 on the product space vs product of per-coordinate factors
    affinity_joint: float
    affinity_factored: float


def product_pmf(pmfs):
    """Tensor product of finite pmfs, flattened in C order."""
    out = np.ones(1)
    for p in pmfs:
        out = np.multiply.outer(out, np.asarray(p, dtype=float)).ravel()
    return out


def product_affinity_check(per_coord):
    """Evaluate both product identities by explicit tensor enumeration.

    Returns the product-space H and H* along with both sides of
    ``1 + 1.5 H*^2 = prod(1 + 1.5 H*_i^2)`` and ``1 - H^2/2 = prod(1 - H_i^2/2)``.
    """
    per_coord = list(per_coord)
    if not per_coord:
        raise EmptyList("need at least one coordinate pair")
    states = 1
    for f, g in per_coord:
        _pair(f, g)
        states *= len(f)
    if states > MAX_PRODUCT_STATES:
        raise StateSpaceTooLarge(f"{states} product states exceed {MAX_PRODUCT_STATES}")
    F = product_pmf([f for f, _ in per_coord])
    G = product_pmf([g for _, g in per_coord])
    H = hellinger(F, G)
    hs_sq = hellinger_star_sq(F, G)
    hs_fact = math.prod(1.0 + 1.5 * hellinger_star_sq(f, g) for f, g in per_coord)
    aff_fact = math.prod(1.0 - 0.5 * hellinger(f, g) ** 2 for f, g in per_coord)
    return ProductAffinity(
        hellinger=H,
        hellinger_star=math.sqrt(hs_sq),
        hstar_joint=1.0 + 1.5 * hs_sq,
        hstar_factored=hs_fact,
        affinity_joint=1.0 - 0.5 * H**2,
        affinity_factored=aff_fact,
    )


def product_hstar_sq(per_coord):
    """Joint H*^2 of a product density from its coordinates, via the factorisation."""
    prod = math.prod(1.0 + 1.5 * hellinger_star_sq(f, g) for f, g in per_coord)
    return (prod - 1.0) / 1.5


def product_hellinger_sq(per_coord):
    prod = math.prod(1.0 - 0.5 * hellinger(f, g) ** 2 for f, g in per_coord)
    return 2.0 * (1.0 - prod)


# --- Gaussian closed forms -------------------------------------------------


def _quadratic_form(delta, precision):
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    precision = np.atleast_2d(np.asarray(precision, dtype=float))
    if precision.shape != (delta.size, delta.size):
        raise GridMismatch(f"precision {precision.shape} does not match delta of size {delta.size}")
    if not np.allclose(precision, precision.T, rtol=0, atol=1e-12 * max(1.0, np.abs(precision).max())):
        raise NotPositiveDefinite("precision matrix is not symmetric")
    try:
        chol = np.linalg.cholesky(precision)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    z = chol.T @ delta
    return float(z @ z)


def gaussian_closed_forms(delta, precision):
    """(H^2, H*^2) between two normals sharing a covariance.

    With q the Mahalanobis form of the mean difference,
    H^2 = 2 - 2 exp(-q/8) and H*^2 = (2/3)(exp(3q/8) - 1).
    """
    q = _quadratic_form(delta, precision)
    return 2.0 - 2.0 * math.exp(-q / 8.0), (2.0 / 3.0) * math.expm1(3.0 * q / 8.0)


def gaussian_kl_moments(delta, precision, ks=(2,)):
    """KL and centred log-ratio moments for a common-covariance normal pair.

    The log-ratio is N(q/2, q) under the first density, so
    V_{k,0} = q^{k/2} 2^{k/2} Gamma((k+1)/2) / sqrt(pi).
    """
    q = _quadratic_form(delta, precision)
    centred = {}
    for k in ks:
        centred[int(k)] = q ** (k / 2.0) * 2.0 ** (k / 2.0) * math.gamma((k + 1) / 2.0) / math.sqrt(math.pi)
    return q / 2.0, centred


# --- Poisson -----------------------------------------------------------------


def _poisson_terms(a, b, xs):
    xs = np.asarray(xs, dtype=float)
    lg = special.gammaln(xs + 1.0)
    # sqrt pmfs in log space
    la = 0.5 * (-a + xs * math.log(a) - lg) if a > 0 else np.where(xs == 0, 0.0, -np.inf)
    lb = 0.5 * (-b + xs * math.log(b) - lg) if b > 0 else np.where(xs == 0, 0.0, -np.inf)
    ra, rb = np.exp(la), np.exp(lb)
    with np.errstate(over="ignore"):
        weight = 2.0 / 3.0 * np.exp(la - lb) + 1.0 / 3.0
    return (ra - rb) ** 2 * weight


def poisson_hstar_sq(a, b, trunc=60):
    """Truncated series for H*(Poi(a), Poi(b))^2 over x < trunc."""
    return math.fsum(_poisson_terms(a, b, np.arange(int(trunc))))


def poisson_series_tail(a, b, trunc=60):
    """Upper bound on the omitted terms x >= trunc of the H* series.

    Each term equals (2/3) f^{3/2} g^{-1/2} - f + g/3 <= (2/3) f^{3/2} g^{-1/2} + g/3,
    and f^{3/2} g^{-1/2} is a scaled Poisson(a^{3/2}/b^{1/2}) mass.
    """
    c = a**1.5 / math.sqrt(b)
    scale = math.exp(-1.5 * a + 0.5 * b + c)
    return 2.0 / 3.0 * scale * stats.poisson.sf(trunc - 1, c) + stats.poisson.sf(trunc - 1, b) / 3.0


def poisson_lipschitz_constant(L, U, trunc=60):
    """C(L, U) with H*(Poi(a), Poi(b))^2 <= C(L, U) (a - b)^2 on [L, U]."""
    if not 0 < L <= U:
        raise OutOfRange(f"need 0 < L <= U, got L={L}, U={U}")
    xs = np.arange(int(trunc), dtype=float)
    with np.errstate(divide="ignore"):
        log_inner = np.logaddexp(0.5 * xs * math.log(U), np.log(xs) + (0.5 * xs - 1.0) * math.log(U))
    logs = 2.0 * log_inner + 0.5 * xs * math.log(U / L) - special.gammaln(xs + 1.0)
    return math.exp((U - 3.0 * L) / 2.0) * math.fsum(np.exp(logs))


def poisson_hstar_bound(a, b, L, U, trunc=60):
    """H*(Poi(a), Poi(b))^2 summed over x < trunc, for rates in [L, U]."""
    if not 0 < L <= U:
        raise OutOfRange(f"need 0 < L <= U, got L={L}, U={U}")
    if not (L <= a <= U and L <= b <= U):
        raise OutOfRange(f"rates ({a}, {b}) outside [{L}, {U}]")
    if trunc < 1:
        raise OutOfRange("trunc must be >= 1")
    return poisson_hstar_sq(a, b, trunc)


def poisson_hellinger_sq(a, b):
    """Closed form H(Poi(a), Poi(b))^2 = 2 - 2 exp(-(sqrt a - sqrt b)^2 / 2)."""
    return 2.0 - 2.0 * math.exp(-0.5 * (math.sqrt(a) - math.sqrt(b)) ** 2)


def metric_satisfies_ineq1(d, hellinger_joint, n, tol=1e-12):
    """Check d^2 <= -(2/n) log(1 - H^2/2) for a single pair."""
    arg = 1.0 - 0.5 * hellinger_joint**2
    if arg <= 0:
        return True
    return d**2 <= -2.0 / n * math.log(arg) + tol
