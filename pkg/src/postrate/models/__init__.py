"""Model registry addressable by name from run configs."""

import math

import numpy as np

from ..errors import RegistryMiss
from ..experiment import DiscreteExperiment
from .autoregression import ar_model
from .gaussian_sequence import GaussSeqModel
from .markov import two_state_family
from .poisson import PoissonRegModel, step_links

BERNOULLI_PS = (0.5, 0.3, 0.1, 0.7, 0.9)
CHAIN_PS = (0.3, 0.2, 0.5, 0.7)
CHAIN_QS = (0.4, 0.6, 0.3, 0.2)


def bernoulli_grid(n=20, ps=BERNOULLI_PS):
    """i.i.d. Bernoulli experiment on a finite grid; the truth is the first entry."""
    return DiscreteExperiment(np.array([[p, 1 - p] for p in ps]), n=n, name="bernoulli-grid")


def inid_bernoulli(n=16, shift=0.15):
    """Independent coordinates whose success probabilities drift with the index."""
    base = np.array([0.5, 0.35, 0.2, 0.65, 0.8])
    drift = shift * np.sin(np.linspace(0, math.pi, n))
    probs = np.clip(base[:, None] + drift[None, :] * np.array([0, 1, 1, -1, -1])[:, None], 0.05, 0.95)
    return DiscreteExperiment(np.stack([probs, 1 - probs], axis=-1), name="inid-bernoulli")


def two_state_chain(n=20, ps=CHAIN_PS, qs=CHAIN_QS):
    return two_state_family(ps, qs, n=n)


def poisson_steps(n=216, L=1.0, U=3.0, levels=(1.0, 1.05, 2.0, 2.05, 3.0), truth=(1.05, 2.0, 2.05),
                  breaks=(1 / 3, 2 / 3)):
    """Increasing three-piece step links on z_i = (i - 1/2)/n."""
    z = (np.arange(n) + 0.5) / n
    combos = [(a, b, c) for a in levels for b in levels for c in levels if a <= b <= c]
    links = step_links(z, L, U, combos, breaks=breaks)
    return PoissonRegModel(z, L, U, links=links, truth=combos.index(tuple(truth)), name="poisson-reg")


def gauss_seq(n=64, gamma=1.0, rho=0.0, dim=None):
    return GaussSeqModel(n, gamma, rho=rho, dim=dim)


def ar(n=100, M=2.0):
    return ar_model(lambda x: 0.5 * M * np.tanh(x), M, n=n)


REGISTRY = {
    "bernoulli-grid": bernoulli_grid,
    "inid-bernoulli": inid_bernoulli,
    "two-state": two_state_chain,
    "poisson-reg": poisson_steps,
    "gauss-seq": gauss_seq,
    "ar": ar,
}


def build_experiment(name, **params):
    try:
        builder = REGISTRY[name]
    except KeyError:
        raise RegistryMiss(f"unknown experiment {name!r}; known: {sorted(REGISTRY)}") from None
    return builder(**params)
