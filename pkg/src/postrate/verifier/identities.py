"""Exact identity and sandwich suites over random finite densities.

Every record compares two numbers that must agree (or be ordered) up to a
stated tolerance.  The Gaussian records compare closed forms against direct
numerical integration, which shares no code with the closed forms.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from .. import rng
from ..divergences import (
    gaussian_closed_forms,
    hellinger,
    hellinger_affinity,
    hellinger_star,
    hellinger_star_sq,
    inverse_root_moment,
    poisson_hellinger_sq,
    poisson_hstar_sq,
    poisson_lipschitz_constant,
    poisson_series_tail,
    product_affinity_check,
    sup_ratio,
)
from ..entropy import WeightedParameterSet, hausdorff_constant

IDENTITY_TOL = 1e-12
QUADRATURE_TOL = 1e-8


@dataclass
class IdentityRecord:
    """``kind`` is "eq" or "le".

    Tolerances are relative to max(1, |rhs|), so they act as absolute
    tolerances on quantities of order one and stay above float resolution on
    large product-space values.
    """

    name: str
    lhs: float
    rhs: float
    tol: float = IDENTITY_TOL
    kind: str = "eq"
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("eq", "le"):
            raise ValueError(f"unknown record kind {self.kind!r}")
        if self.tol < 0:
            raise ValueError("tolerance must be non-negative")

    @property
    def error(self):
        return abs(self.lhs - self.rhs) if self.kind == "eq" else max(0.0, self.lhs - self.rhs)

    @property
    def passed(self):
        return bool(self.error <= self.tol * max(1.0, abs(self.rhs)))

    def to_record(self):
        out = asdict(self)
        out["error"] = self.error
        out["verdict"] = "pass" if self.passed else "fail"
        return out


def random_pair(gen, size):
    f = gen.dirichlet(np.ones(size))
    g = gen.dirichlet(np.ones(size))
    return f, g


def pair_records(f, g, label):
    hs = hellinger_star_sq(f, g)
    h = hellinger(f, g)
    return [
        IdentityRecord(f"{label}/inverse-root-moment", inverse_root_moment(f, g), 1.0 + 1.5 * hs),
        IdentityRecord(f"{label}/affinity", hellinger_affinity(f, g), 1.0 - 0.5 * h**2),
    ]


def product_records(coords, label):
    res = product_affinity_check(coords)
    states = math.prod(len(f) for f, _ in coords)
    cfg = {"coords": len(coords), "states": states}
    return [
        IdentityRecord(f"{label}/product-hstar", res.hstar_joint, res.hstar_factored, config=cfg),
        IdentityRecord(f"{label}/product-affinity", res.affinity_joint, res.affinity_factored, config=cfg),
    ]


def sandwich_records(f, g, label):
    h, hs = hellinger(f, g), hellinger_star(f, g)
    s = sup_ratio(f, g)
    return [
        IdentityRecord(f"{label}/sandwich-lower", h / math.sqrt(3.0), hs, kind="le"),
        IdentityRecord(f"{label}/sandwich-upper", hs, s**0.25 * h, kind="le"),
    ]


def hausdorff_records(wset, delta, alpha, label):
    cert = hausdorff_constant(wset, delta, alpha, exact=True)
    pi = wset.mass()
    C = cert.hausdorff_constant
    cfg = {"points": len(wset), "delta": delta, "alpha": alpha, "N": cert.covering_number}
    return [
        IdentityRecord(f"{label}/hausdorff-lower", pi**alpha, C, kind="le", config=cfg),
        IdentityRecord(f"{label}/hausdorff-upper", C, pi**alpha * cert.covering_number ** (1 - alpha),
                       kind="le", config=cfg),
    ]


# -- Gaussian quadrature oracle ----------------------------------------------------------


def _gauss_integrand(delta, precision):
    """Integrands of H^2 and H*^2 for N(0, S) vs N(delta, S), S = precision^-1."""
    P = np.asarray(precision, dtype=float)
    d = np.asarray(delta, dtype=float)
    logdet = float(np.linalg.slogdet(P)[1])
    k = d.size
    c = 0.5 * logdet - 0.5 * k * math.log(2 * math.pi)

    def parts(*x):
        x = np.asarray(x)
        lf = c - 0.5 * x @ P @ x
        y = x - d
        lg = c - 0.5 * y @ P @ y
        sf, sg = math.exp(0.5 * lf), math.exp(0.5 * lg)
        return (sf - sg) ** 2, (sf - sg) ** 2 * (2.0 / 3.0 * math.exp(0.5 * (lf - lg)) + 1.0 / 3.0)

    return parts


def gaussian_quadrature(delta, precision, width=14.0):
    """(H^2, H*^2) by adaptive quadrature over a box around both means."""
    d = np.atleast_1d(np.asarray(delta, dtype=float))
    P = np.atleast_2d(np.asarray(precision, dtype=float))
    parts = _gauss_integrand(d, P)
    sd = np.sqrt(np.diag(np.linalg.inv(P)))
    lo = np.minimum(0.0, d) - width * sd
    hi = np.maximum(0.0, d) + width * sd
    opts = {"epsabs": 1e-12, "epsrel": 1e-12, "limit": 200}
    out = []
    for j in (0, 1):
        if d.size == 1:
            val, _ = integrate.quad(lambda x: parts(x)[j], lo[0], hi[0], **opts)
        elif d.size == 2:
            val, _ = integrate.nquad(lambda x, y: parts(x, y)[j], [(lo[0], hi[0]), (lo[1], hi[1])], opts=opts)
        else:
            raise ValueError("quadrature oracle supports one or two dimensions")
        out.append(val)
    return tuple(out)


def random_gaussian_case(gen, max_q=10.0):
    """Random (delta, precision) in one or two dimensions with quadratic form <= max_q."""
    k = int(gen.integers(1, 3))
    A = gen.normal(size=(k, k))
    P = A @ A.T + 0.5 * np.eye(k)
    d = gen.normal(size=k)
    q = float(d @ P @ d)
    target = gen.uniform(0.05, max_q)
    return d * math.sqrt(target / q), P


def gaussian_records(delta, precision, label):
    h2, hs2 = gaussian_closed_forms(delta, precision)
    qh2, qhs2 = gaussian_quadrature(delta, precision)
    cfg = {"dim": int(np.size(delta))}
    return [
        IdentityRecord(f"{label}/gauss-H2", h2, qh2, QUADRATURE_TOL, config=cfg),
        IdentityRecord(f"{label}/gauss-Hstar2", hs2, qhs2, QUADRATURE_TOL, config=cfg),
    ]


def poisson_records(a, b, L, U, label):
    hs = poisson_hstar_sq(a, b, trunc=80)
    h2_series = math.fsum(
        (math.exp(0.5 * (-a + x * math.log(a) - math.lgamma(x + 1)))
         - math.exp(0.5 * (-b + x * math.log(b) - math.lgamma(x + 1)))) ** 2
        for x in range(80)
    )
    cfg = {"a": a, "b": b, "L": L, "U": U}
    return [
        IdentityRecord(f"{label}/poisson-H2", h2_series, poisson_hellinger_sq(a, b), config=cfg),
        IdentityRecord(f"{label}/poisson-lipschitz", hs, poisson_lipschitz_constant(L, U) * (a - b) ** 2,
                       kind="le", config=cfg),
        IdentityRecord(f"{label}/poisson-tail", poisson_series_tail(a, b, 80), 1e-12, kind="le", config=cfg),
    ]


# -- suites -----------------------------------------------------------------------------


def builtin_suite(seed=0):
    """Roughly forty identity records on a fixed discrete battery plus closed forms."""
    gen = rng.stream(seed, "identity-builtin", 0)
    records = []
    for i in range(8):
        f, g = random_pair(gen, int(gen.integers(2, 7)))
        records += pair_records(f, g, f"pair{i}")
        records += sandwich_records(f, g, f"pair{i}")
    for i in range(3):
        coords = [random_pair(gen, int(gen.integers(2, 5))) for _ in range(int(gen.integers(2, 6)))]
        records += product_records(coords, f"product{i}")
    records += gaussian_records(np.array([0.8]), np.array([[4.0]]), "gauss-1d")
    records += poisson_records(1.3, 2.1, 1.0, 3.0, "poisson0")
    return records


def identity_suite(pairs=200, products=10, seed=0, max_states=10**6):
    """Acceptance suite: both pair identities on random pairs and product factorisations."""
    gen = rng.stream(seed, "identity-suite", 0)
    records = []
    for i in range(pairs):
        f, g = random_pair(gen, int(gen.integers(2, 12)))
        records += pair_records(f, g, f"pair{i}")
    for i in range(products):
        b = int(gen.integers(2, 11))
        m = max(1, int(math.floor(math.log(max_states) / math.log(b))))
        m = int(gen.integers(1, m + 1)) if i < products - 1 else m
        coords = [random_pair(gen, b) for _ in range(m)]
        records += product_records(coords, f"product{i}")
    return records


def sandwich_suite(pairs=1000, instances=100, seed=0, max_points=12):
    gen = rng.stream(seed, "sandwich-suite", 0)
    records = []
    for i in range(pairs):
        f, g = random_pair(gen, int(gen.integers(2, 12)))
        records += sandwich_records(f, g, f"pair{i}")
    for i in range(instances):
        m = int(gen.integers(1, max_points + 1))
        pts = gen.uniform(0, 1, size=(m, 2))
        D = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        w = gen.dirichlet(np.ones(m)) * gen.uniform(0.2, 1.0)
        wset = WeightedParameterSet(list(range(m)), w, distances=D)
        records += hausdorff_records(wset, float(gen.uniform(0.05, 0.6)), float(gen.uniform(0.05, 0.95)), f"set{i}")
    return records


def gaussian_suite(cases=20, seed=0, max_q=10.0):
    gen = rng.stream(seed, "gaussian-suite", 0)
    records = []
    for i in range(cases):
        d, P = random_gaussian_case(gen, max_q)
        records += gaussian_records(d, P, f"gauss{i}")
    return records
