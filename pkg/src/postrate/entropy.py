"""Covering numbers and Hausdorff alpha-constants on weighted finite sets.

Balls are closed (radius <= delta) and centred at points of the set itself.
The Hausdorff alpha-constant is the minimum of ``sum_k Pi(B_k)^alpha`` over
partitions whose blocks each fit inside one such ball.
"""

from dataclasses import dataclass, field

import numpy as np

EXACT_COVER_MAX = 20
EXACT_PARTITION_MAX = 12
_REL_TOL = 1e-12


@dataclass
class WeightedParameterSet:
    """Finite parameter set with prior masses and a pairwise distance matrix."""

    points: list
    weights: np.ndarray
    distances: np.ndarray = None
    metric: object = None

    def __post_init__(self):
        self.points = list(self.points)
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if self.weights.size != len(self.points):
            raise ValueError("one weight per point required")
        if np.any(self.weights < 0):
            raise ValueError("prior weights must be non-negative")
        if self.distances is None:
            if self.metric is None:
                raise ValueError("need a metric or a distance matrix")
            m = len(self.points)
            D = np.zeros((m, m))
            for i in range(m):
                for j in range(i + 1, m):
                    D[i, j] = D[j, i] = self.metric(self.points[i], self.points[j])
            self.distances = D
        else:
            self.distances = np.asarray(self.distances, dtype=float)
        if self.distances.shape != (len(self.points), len(self.points)):
            raise ValueError("distance matrix shape does not match the points")
        if not np.allclose(self.distances, self.distances.T) or np.any(np.diag(self.distances) != 0):
            raise ValueError("metric must be symmetric with zero diagonal")

    def __len__(self):
        return len(self.points)

    def mass(self):
        return float(self.weights.sum())

    def subset(self, mask):
        idx = np.flatnonzero(np.asarray(mask, dtype=bool))
        return WeightedParameterSet(
            points=[self.points[i] for i in idx],
            weights=self.weights[idx],
            distances=self.distances[np.ix_(idx, idx)],
            metric=self.metric,
        )

    def diameter(self):
        return float(self.distances.max()) if len(self) else 0.0


@dataclass
class CoverCertificate:
    delta: float
    ball_centers: list
    assignment: list
    covering_number: int
    alpha: float = None
    hausdorff_constant: float = None
    exact: bool = True
    mass: float = 0.0
    blocks: list = field(default_factory=list)

    def sandwich(self):
        """(Pi^alpha, C, Pi^alpha N^(1-alpha))."""
        lo = self.mass**self.alpha if self.mass > 0 else 0.0
        return lo, self.hausdorff_constant, lo * self.covering_number ** (1.0 - self.alpha)


def _ball_masks(D, delta):
    close = D <= delta + _REL_TOL * max(1.0, abs(delta))
    weights = 1 << np.arange(D.shape[0], dtype=object)
    return [int((weights * close[c]).sum()) for c in range(D.shape[0])]


def _bits(mask):
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def _greedy_cover(balls, m):
    uncovered = (1 << m) - 1
    centers = []
    while uncovered:
        gains = [bin(b & uncovered).count("1") for b in balls]
        best = int(np.argmax(gains))  # lowest index wins ties
        centers.append(best)
        uncovered &= ~balls[best]
    return centers


def _exact_cover(balls, m):
    best = _greedy_cover(balls, m)
    best_len = [len(best)]
    result = [list(best)]
    full = (1 << m) - 1
    max_cov = max(bin(b).count("1") for b in balls)

    def dfs(uncovered, chosen):
        if not uncovered:
            if len(chosen) < best_len[0]:
                best_len[0] = len(chosen)
                result[0] = list(chosen)
            return
        remaining = bin(uncovered).count("1")
        if len(chosen) + -(-remaining // max_cov) >= best_len[0]:
            return
        low = (uncovered & -uncovered).bit_length() - 1
        options = [c for c in range(m) if balls[c] >> low & 1]
        options.sort(key=lambda c: (-bin(balls[c] & uncovered).count("1"), c))
        for c in options:
            chosen.append(c)
            dfs(uncovered & ~balls[c], chosen)
            chosen.pop()

    dfs(full, [])
    return sorted(result[0])


def _assign(D, centers, delta):
    assignment = []
    for p in range(D.shape[0]):
        for k, c in enumerate(centers):
            if D[p, c] <= delta + _REL_TOL * max(1.0, abs(delta)):
                assignment.append(k)
                break
        else:  # pragma: no cover - centers always cover
            raise RuntimeError("cover does not cover every point")
    return assignment


def covering_number(wset, delta, exact=None):
    """Minimal number of closed delta-balls centred at set points covering the set.

    Exact (branch and bound) for at most 20 points unless ``exact`` is given;
    greedy otherwise, with ties broken by lowest point index.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    m = len(wset)
    if m == 0:
        return CoverCertificate(delta, [], [], 0, exact=True, mass=0.0)
    if exact is None:
        exact = m <= EXACT_COVER_MAX
    balls = _ball_masks(wset.distances, delta)
    centers = _exact_cover(balls, m) if exact else _greedy_cover(balls, m)
    return CoverCertificate(
        delta=delta,
        ball_centers=[wset.points[c] for c in centers],
        assignment=_assign(wset.distances, centers, delta),
        covering_number=len(centers),
        exact=exact,
        mass=wset.mass(),
    )


def _block_costs(weights, alpha, m):
    masks = np.arange(1 << m)
    bits = (masks[:, None] >> np.arange(m)) & 1
    mass = bits @ weights
    with np.errstate(divide="ignore"):
        cost = np.where(mass > 0, np.power(np.maximum(mass, 0.0), alpha), 0.0)
    return cost


def _exact_partition(wset, delta, alpha):
    m = len(wset)
    balls = _ball_masks(wset.distances, delta)
    size = 1 << m
    feasible = np.zeros(size, dtype=bool)
    for b in set(balls):
        # every submask of a ball is a feasible block
        sub = b
        while sub:
            feasible[sub] = True
            sub = (sub - 1) & b
    cost = _block_costs(wset.weights, alpha, m).tolist()
    feas = feasible.tolist()
    dp = [0.0] * size
    choice = [0] * size
    for S in range(1, size):
        low = S & -S
        rest = S ^ low
        best = float("inf")
        best_t = 0
        sub = rest
        while True:
            T = sub | low
            if feas[T]:
                cand = cost[T] + dp[S ^ T]
                if cand < best:
                    best, best_t = cand, T
            if sub == 0:
                break
            sub = (sub - 1) & rest
        dp[S] = best
        choice[S] = best_t
    blocks = []
    S = size - 1
    while S:
        blocks.append(choice[S])
        S ^= choice[S]
    return dp[size - 1], blocks, balls


def _greedy_partition(wset, delta, alpha):
    m = len(wset)
    balls = _ball_masks(wset.distances, delta)
    w = wset.weights
    remaining = (1 << m) - 1
    blocks = []
    total = 0.0
    while remaining:
        best_c, best_mass, best_count = 0, -1.0, -1
        for c, b in enumerate(balls):
            blk = b & remaining
            if not blk:
                continue
            idx = _bits(blk)
            mass = float(w[idx].sum())
            if mass > best_mass or (mass == best_mass and len(idx) > best_count):
                best_c, best_mass, best_count = c, mass, len(idx)
        blk = balls[best_c] & remaining
        blocks.append(blk)
        total += best_mass**alpha if best_mass > 0 else 0.0
        remaining &= ~blk
    return total, blocks, balls


def hausdorff_constant(wset, delta, alpha, exact=None):
    """Hausdorff alpha-constant C(delta, set, alpha) with its cover certificate.

    Exact subset dynamic programme for at most 12 points; greedy heaviest-ball
    partition otherwise.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    cover = covering_number(wset, delta)
    m = len(wset)
    if m == 0:
        cover.alpha = alpha
        cover.hausdorff_constant = 0.0
        return cover
    if exact is None:
        exact = m <= EXACT_PARTITION_MAX
    value, blocks, balls = (_exact_partition if exact else _greedy_partition)(wset, delta, alpha)
    centers, assignment = [], [None] * m
    for k, blk in enumerate(blocks):
        c = next(c for c in range(m) if blk & ~balls[c] == 0)
        centers.append(wset.points[c])
        for p in _bits(blk):
            assignment[p] = k
    return CoverCertificate(
        delta=delta,
        ball_centers=centers,
        assignment=assignment,
        covering_number=cover.covering_number,
        alpha=alpha,
        hausdorff_constant=float(value),
        exact=bool(exact and cover.exact),
        mass=wset.mass(),
        blocks=[_bits(b) for b in blocks],
    )


def shell(wset, d_to_truth, lo, hi):
    """Restrict to points with lo < d(theta, theta0) <= hi.

    ``d_to_truth`` is a callable on points or an array aligned with them.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if callable(d_to_truth):
        d = np.array([d_to_truth(p) for p in wset.points], dtype=float)
    else:
        d = np.asarray(d_to_truth, dtype=float)
    return wset.subset((d > lo) & (d <= hi))
