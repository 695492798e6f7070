"""Prior constructions: finite grids, uniform step coefficients, conjugate
Gaussian sequences, partition-uniform priors and data-dependent power priors."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .entropy import WeightedParameterSet, covering_number
from .errors import OutOfSupport, RegistryMiss, UnsupportedKind

KINDS = ("grid", "step_uniform", "gauss_seq", "partition_uniform", "power_data")


@dataclass
class PriorSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedKind(f"unknown prior kind {self.kind!r}")
        p = self.params
        if self.kind in ("grid", "partition_uniform"):
            w = np.asarray(p["weights"], dtype=float)
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise ValueError("finite prior weights must be non-negative and sum to 1")
            p["weights"] = w
        elif self.kind == "step_uniform":
            if p["M"] <= 0 or int(p["K"]) < 1:
                raise ValueError("step_uniform needs M > 0 and K >= 1")
        elif self.kind == "gauss_seq":
            if int(p["k"]) < 1:
                raise ValueError("gauss_seq needs k >= 1")
        elif self.kind == "power_data":
            if not 0 < p["beta"] < 1:
                raise ValueError(f"power_data needs 0 < beta < 1, got {p['beta']}")
            if not isinstance(p["base"], PriorSpec):
                raise ValueError("power_data needs a base PriorSpec")

    @property
    def finite(self):
        return self.kind in ("grid", "partition_uniform")

    @property
    def points(self):
        return list(self.params["points"])

    @property
    def weights(self):
        return self.params["weights"]

    def weighted_set(self, distances=None, metric=None):
        """The finite prior as a WeightedParameterSet for entropy computations."""
        if not self.finite:
            raise UnsupportedKind(f"{self.kind} prior is not finite")
        return WeightedParameterSet(self.points, self.weights, distances=distances, metric=metric)


@dataclass(frozen=True)
class PowerLogWeight:
    """Base log-weight and the coefficient of the log-likelihood the posterior must add."""

    base: float
    loglik_coef: float


def grid_prior(points, weights=None):
    points = list(points)
    w = np.full(len(points), 1.0 / len(points)) if weights is None else np.asarray(weights, float)
    return PriorSpec("grid", {"points": points, "weights": w / w.sum()})


def step_uniform_prior(M, K, A=None):
    """beta_k i.i.d. uniform on [-M, M]; ``A`` is the half-width of the step window."""
    return PriorSpec("step_uniform", {"M": float(M), "K": int(K), "A": None if A is None else float(A)})


def gauss_seq_prior(k, gamma=1.0, scale=1.0):
    """theta_(k) ~ N(0, Sigma_k) with Sigma_k = diag(1 / (scale * k * i^(2 gamma))).

    ``scale = 1`` meets the quadratic-form bound with constant 1; ``scale < 1``
    keeps the eigenvalues of Sigma_k^-1 below k * i^(2 gamma).
    """
    return PriorSpec("gauss_seq", {"k": int(k), "gamma": float(gamma), "scale": float(scale)})


def power_data_prior(base, beta):
    return PriorSpec("power_data", {"base": base, "beta": float(beta)})


def gauss_seq_precision(spec):
    """Diagonal of Sigma_k^-1."""
    p = spec.params
    i = np.arange(1, p["k"] + 1, dtype=float)
    return p["scale"] * p["k"] * i ** (2.0 * p["gamma"])


def condition_c_ratio(spec, alpha):
    """alpha Sigma_k^-1 alpha^T / (k sum alpha_i^2 i^(2 gamma)) for rows of ``alpha``."""
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    p = spec.params
    i = np.arange(1, p["k"] + 1, dtype=float)
    lam = gauss_seq_precision(spec)
    return (alpha**2 @ lam) / (p["k"] * (alpha**2 @ i ** (2.0 * p["gamma"])))


def partition_uniform_prior(points, distances, radius):
    """Cells from a minimal cover of closed balls of ``radius``; mass 1/K per cell, split evenly.

    Cell representatives are the ball centres.
    """
    points = list(points)
    wset = WeightedParameterSet(list(range(len(points))), np.ones(len(points)), distances=distances)
    cover = covering_number(wset, radius)
    K = cover.covering_number
    assign = np.asarray(cover.assignment)
    sizes = np.bincount(assign, minlength=K)
    weights = 1.0 / (K * sizes[assign])
    centers = [int(c) for c in cover.ball_centers]
    cells = [np.flatnonzero(assign == k).tolist() for k in range(K)]
    return PriorSpec(
        "partition_uniform",
        {"points": points, "weights": weights, "cells": cells, "representatives": centers, "radius": radius},
    )


def cell_union_mass(spec, cell_ids):
    cells = spec.params["cells"]
    return float(sum(spec.weights[cells[c]].sum() for c in set(cell_ids)))


def sample_prior(spec, count, seed):
    """``count`` i.i.d. prior draws; vectors come back stacked as rows."""
    if count < 1:
        raise ValueError("count must be >= 1")
    gen = rng.stream(seed, f"prior-{spec.kind}", 0)
    p = spec.params
    if spec.kind == "grid":
        idx = gen.choice(len(p["points"]), size=count, p=p["weights"])
        return [p["points"][i] for i in idx]
    if spec.kind == "partition_uniform":
        cells = p["cells"]
        cell = gen.integers(len(cells), size=count)
        u = gen.random(count)
        return [p["points"][cells[c][min(int(v * len(cells[c])), len(cells[c]) - 1)]] for c, v in zip(cell, u)]
    if spec.kind == "step_uniform":
        return gen.uniform(-p["M"], p["M"], size=(count, p["K"]))
    if spec.kind == "gauss_seq":
        sd = 1.0 / np.sqrt(gauss_seq_precision(spec))
        return gen.standard_normal((count, p["k"])) * sd[None, :]
    raise UnsupportedKind("power_data priors depend on the data; sample through the posterior")


def prior_logweight(spec, theta):
    """Log-density of ``theta`` with respect to the prior's base measure, up to a constant."""
    p = spec.params
    if spec.finite:
        for i, pt in enumerate(p["points"]):
            if _equal(pt, theta):
                w = p["weights"][i]
                if w == 0:
                    break
                return math.log(w)
        raise OutOfSupport(f"{theta!r} is not a support point")
    if spec.kind == "step_uniform":
        beta = np.asarray(theta, dtype=float).reshape(-1)
        if beta.size != p["K"] or np.any(np.abs(beta) > p["M"]):
            raise OutOfSupport("coefficients outside [-M, M]^K")
        return -p["K"] * math.log(2 * p["M"])
    if spec.kind == "gauss_seq":
        th = np.asarray(theta, dtype=float).reshape(-1)
        k = p["k"]
        if np.any(th[k:] != 0):
            raise OutOfSupport("coordinates beyond k must vanish")
        head = np.zeros(k)
        head[: min(k, th.size)] = th[:k]
        return float(-0.5 * np.sum(gauss_seq_precision(spec) * head**2))
    base = prior_logweight(p["base"], theta)
    return PowerLogWeight(base, -(1.0 - p["beta"]))


def _equal(a, b):
    if isinstance(a, (int, np.integer)) and isinstance(b, (int, np.integer)):
        return int(a) == int(b)
    try:
        return bool(np.array_equal(np.asarray(a), np.asarray(b)))
    except (TypeError, ValueError):
        return a is b


_REGISTRY = {
    "grid": grid_prior,
    "step_uniform": step_uniform_prior,
    "gauss_seq": gauss_seq_prior,
    "power_data": power_data_prior,
    "partition_uniform": partition_uniform_prior,
}


def build_prior(name, **kwargs):
    try:
        return _REGISTRY[name](**kwargs)
    except KeyError as exc:
        raise RegistryMiss(f"unknown prior {name!r}") from exc
