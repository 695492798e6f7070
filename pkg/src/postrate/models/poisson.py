"""Poisson regression with a bounded increasing link on fixed covariates."""

import math

import numpy as np
from scipy import special, stats

from ..divergences import poisson_lipschitz_constant
from ..errors import OutOfRange
from ..experiment import DiscreteExperiment

TAIL_TOL = 1e-12


def poisson_coord_pmf(m, theta, i, x):
    """P(X_i = x) for rate theta(z_i)."""
    rate = float(m.rates(theta)[i])
    return float(stats.poisson.pmf(x, rate))


def truncation_point(U, tol=TAIL_TOL):
    """Smallest T with P(Poi(U) >= T) < tol; Poisson tails are increasing in the rate."""
    T = int(math.ceil(U)) + 1
    while stats.poisson.sf(T - 1, U) >= tol:
        T += 1
    return T


class PoissonRegModel:
    """Independent X_i ~ Poi(theta(z_i)) with theta: R -> [L, U] increasing.

    A link is any callable; ``links`` registers a finite family of them.
    """

    def __init__(self, z, L, U, links=None, truth=0, name="poisson-reg"):
        if not 0 < L <= U:
            raise OutOfRange(f"need 0 < L <= U, got L={L}, U={U}")
        self.z = np.asarray(z, dtype=float)
        self.L, self.U = float(L), float(U)
        self.links = list(links or [])
        self.truth = truth
        self.name = name
        self.n = self.z.size

    def rates(self, theta):
        link = self.links[theta] if isinstance(theta, (int, np.integer)) else theta
        r = np.asarray(link(self.z), dtype=float) * np.ones(self.n)
        if np.any(r < self.L - 1e-12) or np.any(r > self.U + 1e-12):
            raise OutOfRange(f"link leaves [{self.L}, {self.U}]")
        if np.any(np.diff(r[np.argsort(self.z, kind="stable")]) < -1e-12):
            raise OutOfRange("link is not increasing")
        return r

    def rate_table(self):
        return np.array([self.rates(t) for t in range(len(self.links))])

    def as_discrete(self, trunc=None):
        """Exact finite experiment; the mass above the truncation point is lumped into the last outcome.

        Returns the experiment and the largest lumped tail mass.
        """
        T = truncation_point(self.U) if trunc is None else int(trunc)
        rates = self.rate_table()
        x = np.arange(T)
        pmf = stats.poisson.pmf(x[None, None, :], rates[:, :, None])
        tail = stats.poisson.sf(T - 1, rates)
        pmf[..., -1] += tail
        exp = DiscreteExperiment(pmf, truth=int(self.truth), name=self.name)
        return exp, float(tail.max())

    def l2_distance(self, t1, t2):
        """L2(P_n^z) distance between two links."""
        return float(np.sqrt(np.mean((self.rates(t1) - self.rates(t2)) ** 2)))

    def avg_hstar_bound(self, t1, t2, trunc=60):
        """C(L, U) * int (theta1 - theta2)^2 dP_n^z."""
        C = poisson_lipschitz_constant(self.L, self.U, trunc)
        return C * self.l2_distance(t1, t2) ** 2


def step_links(z, L, U, levels, breaks):
    """Increasing step links taking values ``levels[j]`` on the cells cut by ``breaks``."""
    out = []
    for lv in levels:
        lv = np.asarray(lv, dtype=float)
        if np.any(np.diff(lv) < 0) or lv.min() < L or lv.max() > U:
            raise OutOfRange("levels must be increasing inside [L, U]")
        out.append(_StepLink(tuple(breaks), tuple(lv)))
    return out


class _StepLink:
    def __init__(self, breaks, levels):
        self.breaks = np.asarray(breaks, dtype=float)
        self.levels = np.asarray(levels, dtype=float)

    def __call__(self, z):
        return self.levels[np.searchsorted(self.breaks, np.asarray(z, float), side="right")]

    def __repr__(self):
        return f"StepLink({self.levels.tolist()})"


def log_poisson_pmf(x, rate):
    x = np.asarray(x, dtype=float)
    return x * np.log(rate) - rate - special.gammaln(x + 1)
