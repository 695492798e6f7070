"""Registered bound-check instances.

The main battery uses experiments small enough for exact enumeration, so each
Monte Carlo left-hand side is paired with its exact value.  The Poisson
partition-prior instance is too large to enumerate and runs Monte Carlo only.
"""

import math
from dataclasses import dataclass

import numpy as np

from .. import rng
from ..divergences import poisson_hstar_sq
from ..experiment import DiscreteExperiment
from ..models import bernoulli_grid, inid_bernoulli, poisson_steps, two_state_chain
from ..models.poisson import PoissonRegModel
from ..neighborhoods import NeighborhoodSpec, avg_hstar_sq, prior_mass
from ..priors import grid_prior, partition_uniform_prior
from .checks import (
    average_hellinger_metric,
    check_lemma2,
    check_prop0_prop3,
    check_prop2,
    check_prop4,
    check_shell_condition,
    iid_affinity_metric,
    prop4_delta_cap,
)


@dataclass
class BatteryItem:
    label: str
    run: object  # callable(mc_budget, seed) -> BoundCheck


def main_battery():
    """At least twelve instances spanning prop2, prop0, prop3, prop4 and lemmas 2, 4, 5."""
    bern = bernoulli_grid(20)
    bern30 = bernoulli_grid(30)
    inid = inid_bernoulli(16)
    chain = two_state_chain(20)
    p5 = grid_prior(range(5))
    p4 = grid_prior(range(4))
    a0, a1 = chain.bounds
    cap = prop4_delta_cap(a0, a1)
    items = [
        BatteryItem("prop2-bernoulli-a0.25", lambda B, s: check_prop2(bern, p5, 0.3, 0.25, 0.25, B, s)),
        BatteryItem("prop2-bernoulli-a0.5", lambda B, s: check_prop2(bern, p5, 0.3, 0.5, 0.25, B, s)),
        BatteryItem("prop2-bernoulli-a0.75", lambda B, s: check_prop2(bern, p5, 0.3, 0.75, 0.25, B, s)),
        BatteryItem("prop2-inid", lambda B, s: check_prop2(inid, p5, 0.2, 0.5, 0.25, B, s)),
        BatteryItem("prop3-bernoulli-b0.3", lambda B, s: check_prop0_prop3(bern, p5, 0.3, 0.5, 0.3, B, s)),
        BatteryItem("prop3-bernoulli-b0.5", lambda B, s: check_prop0_prop3(bern, p5, 0.3, 0.5, 0.5, B, s)),
        BatteryItem("prop3-bernoulli-b0.7", lambda B, s: check_prop0_prop3(bern, p5, 0.3, 0.5, 0.7, B, s)),
        BatteryItem("prop3-inid-b0.5", lambda B, s: check_prop0_prop3(inid, p5, 0.2, 0.5, 0.5, B, s)),
        BatteryItem("prop0-bernoulli-affinity",
                    lambda B, s: check_prop0_prop3(bern, p5, 0.3, 0.5, 0.5, B, s, metric=iid_affinity_metric(bern))),
        BatteryItem("prop4-chain", lambda B, s: check_prop4(chain, p4, 0.1, 0.25, cap / 2, B, s)),
        BatteryItem("prop4-chain-delta0.9cap", lambda B, s: check_prop4(chain, p4, 0.1, 0.25, 0.9 * cap, B, s)),
        BatteryItem("lemma2-bernoulli", lambda B, s: check_lemma2(bern30, p5, 0.2, 1.0, B, s)),
        BatteryItem("lemma4-inid-b0.5", lambda B, s: check_lemma2(inid, p5, 0.2, 1.0, B, s, beta=0.5)),
        BatteryItem("lemma5-chain", lambda B, s: check_lemma2(chain, p4, 0.1, 1.0, B, s)),
    ]
    return items


def run_battery(items, mc_budget=10_000, seed=0):
    return [(it.label, it.run(mc_budget, rng.child_seed(seed, it.label, 0))) for it in items]


# -- Poisson partition-prior instance ----------------------------------------------------


@dataclass
class PoissonPartitionInstance:
    model: PoissonRegModel
    experiment: DiscreteExperiment
    prior: object
    d0: np.ndarray  # d_n^0 distance matrix
    dbar: np.ndarray
    kappa: float
    c: float
    eps: float
    tail: float

    @property
    def n(self):
        return self.model.n


def poisson_partition_instance(n=216, c=1.5, levels=(1.0, 1.05, 2.0, 2.05, 3.0), truth_levels=(1.05, 2.0, 2.05)):
    """Increasing three-piece links on z_i = (i - 1/2)/n with a partition-uniform prior.

    dbar = sqrt(kappa) / c * L2(P_n^z), where kappa is the largest H*^2 / (a - b)^2
    over the level set, so that (1/(c^2 n)) sum_i H*_i^2 <= dbar^2 on the grid.
    Cells are closed dbar-balls of radius eps_n / (2c) with eps_n = n^(-1/3).
    """
    model = poisson_steps(n, min(levels), max(levels), levels, truth_levels)
    links = model.links
    exp, tail = model.as_discrete()
    kappa = max(poisson_hstar_sq(a, b) / (a - b) ** 2 for a in levels for b in levels if a != b)
    P = len(links)
    rates = model.rate_table()
    l2 = np.sqrt(np.mean((rates[:, None, :] - rates[None, :, :]) ** 2, axis=2))
    dbar = math.sqrt(kappa) / c * l2
    eps = n ** (-1.0 / 3.0)
    prior = partition_uniform_prior(list(range(P)), dbar, eps / (2 * c))
    d0 = average_hellinger_metric(exp)
    return PoissonPartitionInstance(model, exp, prior, d0, dbar, kappa, c, eps, tail)


def poisson_battery(inst, alpha=0.5, beta=0.5, c1=0.1, j_max=8):
    """Concentration-only shell condition plus the beta-power bound and evidence lemma."""
    n, eps = inst.n, inst.eps
    wbar, _ = prior_mass(NeighborhoodSpec("Wbar", eps, n), inst.experiment, inst.prior)
    d_truth = inst.d0[:, inst.experiment.truth]
    shell = check_shell_condition(inst.prior, inst.d0, d_truth, n, eps, alpha, 0, c1, wbar, j_max)
    return {
        "shell": shell,
        "wbar_mass": wbar,
        "prop3": lambda B, s: check_prop0_prop3(inst.experiment, inst.prior, eps, alpha, beta, B, s, oracle=False),
        "lemma4": lambda B, s: check_lemma2(inst.experiment, inst.prior, eps, 1.0, B, s, beta=beta, oracle=False),
    }


def representative_cell_contained(inst):
    """The cell holding the truth lies inside Wbar_n(theta0, eps_n)."""
    t0 = inst.experiment.truth
    cells = inst.prior.params["cells"]
    cell = next(c for c in cells if t0 in c)
    return all(avg_hstar_sq(inst.experiment, t) <= inst.eps**2 * (1 + 1e-12) for t in cell)
