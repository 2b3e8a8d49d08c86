"""Exact small-domain oracles: Dirichlet solves, Green's functions, the
Laplacian-walk description of LERW and its domain Markov property.
"""
from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    DeadEnd,
    DomainTooLarge,
    NonConvergent,
    PreconditionViolated,
    SingularSystem,
)
from .lattice import NEIGHBORS, Ball, Domain, as_point, as_points, pack_keys

DEFAULT_CAP = 20 ** 3
RESIDUAL_TOL = 1e-10


# ---------------------------------------------------------------------------
# point indexing and the killed walk operator
# ---------------------------------------------------------------------------

class PointIndex:
    """Sorted packed keys for O(log n) point -> row lookups."""

    def __init__(self, points):
        pts = as_points(points)
        keys = pack_keys(pts)
        order = np.argsort(keys, kind="stable")
        self.points = pts
        self._keys = keys[order]
        self._order = order

    def __len__(self):
        return self.points.shape[0]

    def find(self, points) -> np.ndarray:
        """Row of each point, -1 where absent."""
        q = pack_keys(points)
        if len(self) == 0:
            return np.full(q.shape, -1, dtype=np.int64)
        pos = np.searchsorted(self._keys, q)
        pos = np.minimum(pos, self._keys.size - 1)
        hit = self._keys[pos] == q
        return np.where(hit, self._order[pos], -1)


def _operator(points: np.ndarray, index: PointIndex) -> sp.csc_matrix:
    """I - P for the walk killed on leaving ``points``."""
    n = points.shape[0]
    nb = (points[:, None, :] + NEIGHBORS[None]).reshape(-1, 3)
    col = index.find(nb)
    row = np.repeat(np.arange(n), 6)
    keep = col >= 0
    P = sp.csr_matrix((np.full(keep.sum(), 1.0 / 6.0), (row[keep], col[keep])), shape=(n, n))
    return (sp.identity(n, format="csr") - P).tocsc()


def _factor(A: sp.csc_matrix):
    try:
        return spla.splu(A)
    except RuntimeError as exc:
        raise SingularSystem(str(exc)) from exc


class PointFunction(Mapping):
    """Read-only map from lattice points (tuples) to reals."""

    def __init__(self, points, values):
        self._index = PointIndex(points)
        self.values = np.asarray(values, dtype=float)
        self.values.setflags(write=False)

    @property
    def points(self) -> np.ndarray:
        return self._index.points

    def at(self, points) -> np.ndarray:
        idx = self._index.find(points)
        if np.any(idx < 0):
            raise KeyError("point outside the solved region")
        return self.values[idx]

    def __getitem__(self, p):
        idx = self._index.find(as_point(p))[0]
        if idx < 0:
            raise KeyError(p)
        return float(self.values[idx])

    def __iter__(self):
        return (tuple(int(c) for c in p) for p in self._index.points)

    def __len__(self):
        return len(self._index)


# ---------------------------------------------------------------------------
# Dirichlet problem
# ---------------------------------------------------------------------------

def _point_set(points) -> np.ndarray:
    pts = as_points(points) if len(np.asarray(points)) else np.zeros((0, 3), dtype=np.int64)
    return np.unique(pts, axis=0)


def solve_dirichlet(domain: Domain, zero_set, one_set) -> PointFunction:
    """Harmonic f on ``domain`` minus the data sets, f = 0 on ``zero_set`` and 1 on ``one_set``.

    Every neighbour of a free vertex that leaves the domain must carry data.
    The returned map covers the free vertices and both data sets.
    """
    zero = _point_set(zero_set)
    one = _point_set(one_set)
    if zero.shape[0] == 0 or one.shape[0] == 0:
        raise ValueError("zero_set and one_set must be nonempty")
    if np.intersect1d(pack_keys(zero), pack_keys(one)).size:
        raise ValueError("zero_set and one_set must be disjoint")
    interior = domain.interior_points()
    data_keys = np.concatenate([pack_keys(zero), pack_keys(one)])
    free = interior[~np.isin(pack_keys(interior), data_keys)]
    values = _harmonic(free, zero, one)
    return PointFunction(np.concatenate([free, zero, one]),
                         np.concatenate([values, np.zeros(len(zero)), np.ones(len(one))]))


def _harmonic(free: np.ndarray, zero: np.ndarray, one: np.ndarray) -> np.ndarray:
    if free.shape[0] == 0:
        return np.zeros(0)
    index = PointIndex(free)
    zidx, oidx = PointIndex(zero), PointIndex(one)
    nb = (free[:, None, :] + NEIGHBORS[None]).reshape(-1, 3)
    in_free = index.find(nb) >= 0
    in_one = oidx.find(nb) >= 0
    in_zero = zidx.find(nb) >= 0
    if not np.all(in_free | in_one | in_zero):
        raise ValueError("a free vertex has a neighbour with no boundary data")
    b = in_one.reshape(-1, 6).sum(axis=1) / 6.0
    A = _operator(free, index)
    f = _factor(A).solve(b)
    if not np.all(np.isfinite(f)):
        raise SingularSystem("solution is not finite")
    res = np.abs(A @ f - b).max()
    if res > RESIDUAL_TOL:
        raise NonConvergent(f"harmonic residual {res:.2e}")
    return f


# ---------------------------------------------------------------------------
# Green's functions
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class GreenTable:
    """G_A(x, y): expected visits to y before leaving A, for a walk from x.

    Columns are solved lazily from one sparse LU factorization of I - P.
    """

    domain: Domain
    cap: int = DEFAULT_CAP
    _cols: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        pts = self.domain.interior_points()
        if pts.shape[0] > self.cap:
            raise DomainTooLarge(f"{pts.shape[0]} interior points exceed the cap {self.cap}")
        self.points = pts
        self.index = PointIndex(pts)
        self.operator = _operator(pts, self.index)
        self._lu = _factor(self.operator) if pts.shape[0] else None

    def column(self, y) -> np.ndarray:
        """G(., y) over ``self.points``."""
        j = int(self.index.find(as_point(y))[0])
        if j < 0:
            return np.zeros(self.points.shape[0])
        if j not in self._cols:
            e = np.zeros(self.points.shape[0])
            e[j] = 1.0
            col = self._lu.solve(e)
            col.setflags(write=False)
            self._cols[j] = col
        return self._cols[j]

    def __call__(self, x, y) -> float:
        i = int(self.index.find(as_point(x))[0])
        if i < 0:
            return 0.0
        return float(self.column(y)[i])

    def matrix(self) -> np.ndarray:
        """Dense G over the interior, rows and columns in ``self.points`` order."""
        n = self.points.shape[0]
        return self._lu.solve(np.eye(n)) if n else np.zeros((0, 0))


def green_table(domain: Domain, cap: int = DEFAULT_CAP) -> GreenTable:
    return GreenTable(domain, cap)


class IterativeGreen:
    """G_A(., y) on domains too large to factor, by AMG-preconditioned CG.

    I - P is symmetric positive definite, so CG applies. The hierarchy is
    built once and reused for every column; the true relative residual of
    each solve is checked.
    """

    def __init__(self, domain: Domain, rtol: float = 1e-12):
        import pyamg

        self.domain = domain
        self.rtol = rtol
        self.points = domain.interior_points()
        self.index = PointIndex(self.points)
        self.operator = _operator(self.points, self.index).tocsr()
        self._ml = pyamg.smoothed_aggregation_solver(self.operator, symmetry="symmetric",
                                                     max_coarse=500)
        self._cols: dict = {}

    def column(self, y) -> np.ndarray:
        j = int(self.index.find(as_point(y))[0])
        if j < 0:
            return np.zeros(self.points.shape[0])
        if j not in self._cols:
            b = np.zeros(self.points.shape[0])
            b[j] = 1.0
            x = self._ml.solve(b, tol=self.rtol, accel="cg", maxiter=500)
            res = np.linalg.norm(self.operator @ x - b)
            if not res <= 10 * self.rtol:
                raise NonConvergent(f"relative residual {res:.2e}")
            x.setflags(write=False)
            self._cols[j] = x
        return self._cols[j]

    def __call__(self, x, y) -> float:
        i = int(self.index.find(as_point(x))[0])
        if i < 0:
            return 0.0
        return float(self.column(y)[i])


def _norm(p) -> float:
    return float(np.sqrt(np.dot(p, p)))


def green_ratio_check(domain: Ball, x, xp, y, yp, eps1: float, eps2: float,
                      cap: int = DEFAULT_CAP) -> float:
    """|G(x, y) / G(x', y') - 1| on the closed ball C_n = {|z| <= n}.

    Checks the point configuration first: (i) x, y at distance >= eps2 n from
    the sphere, (ii) eps2 n <= |x - y| <= 10 min(n - |x|, n - |y|),
    (iii) |x - x'|, |y - y'| <= eps1 n. Distances to the boundary are measured
    to the sphere of radius n.
    """
    if not isinstance(domain, Ball):
        raise TypeError("green_ratio_check needs a Ball")
    if not 0 < eps1 < eps2:
        raise PreconditionViolated("eps", "need 0 < eps1 < eps2")
    n = float(domain.lattice_radius)
    c = np.array(domain.center)
    x, xp, y, yp = (np.array(as_point(p)) - c for p in (x, xp, y, yp))
    dx, dy = n - _norm(x), n - _norm(y)
    if min(dx, dy) < eps2 * n:
        raise PreconditionViolated("i", "x or y too close to the boundary")
    dxy = _norm(x - y)
    if dxy < eps2 * n or dxy > 10 * min(dx, dy):
        raise PreconditionViolated("ii", "|x - y| outside [eps2 n, 10 min(n - |x|, n - |y|)]")
    if _norm(x - xp) > eps1 * n or _norm(y - yp) > eps1 * n:
        raise PreconditionViolated("iii", "x' or y' too far from x or y")
    x, xp, y, yp = (tuple(int(v) for v in p + c) for p in (x, xp, y, yp))
    if not (xp in domain and yp in domain):
        raise PreconditionViolated("iii", "x' or y' outside the domain")
    if domain.size() <= cap:
        table = GreenTable(domain, cap)
        g1, g2 = table(x, y), table(xp, yp)
    else:
        table = IterativeGreen(domain)
        g1, g2 = table(x, y), table(xp, yp)
    return abs(g1 / g2 - 1.0)


# ---------------------------------------------------------------------------
# Laplacian walk
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StepDistribution:
    support: np.ndarray
    probabilities: np.ndarray

    def as_dict(self) -> dict:
        return {tuple(int(c) for c in p): float(q) for p, q in zip(self.support, self.probabilities)}


class _Region:
    """Interior points of a domain with a neighbour table, shared by the law computations."""

    def __init__(self, domain: Domain, cap: int):
        pts = domain.interior_points()
        if pts.shape[0] > cap:
            raise DomainTooLarge(f"{pts.shape[0]} interior points exceed the cap {cap}")
        self.domain = domain
        self.points = pts
        self.index = PointIndex(pts)
        nb = (pts[:, None, :] + NEIGHBORS[None]).reshape(-1, 3)
        self.nbr = self.index.find(nb).reshape(-1, 6)   # -1: neighbour is on the outer boundary
        self.full = _operator(pts, self.index)

    def idx(self, p) -> int:
        return int(self.index.find(as_point(p))[0])

    def escape(self, removed: np.ndarray) -> np.ndarray:
        """f over the interior: 1 on the outer boundary, 0 on ``removed``, harmonic elsewhere."""
        n = self.points.shape[0]
        keep = np.ones(n, dtype=bool)
        keep[removed] = False
        free = np.flatnonzero(keep)
        f = np.zeros(n)
        if free.size == 0:
            return f
        A = self.full[free][:, free].tocsc()
        b = (self.nbr[free] < 0).sum(axis=1) / 6.0
        sol = _factor(A).solve(b)
        res = np.abs(A @ sol - b).max()
        if res > RESIDUAL_TOL:
            raise NonConvergent(f"harmonic residual {res:.2e}")
        f[free] = sol
        return f

    def green_diag(self, removed: np.ndarray, i: int) -> float:
        """G_{A'}(p_i, p_i) with A' the interior minus ``removed``."""
        n = self.points.shape[0]
        keep = np.ones(n, dtype=bool)
        keep[removed] = False
        free = np.flatnonzero(keep)
        pos = np.searchsorted(free, i)
        A = self.full[free][:, free].tocsc()
        e = np.zeros(free.size)
        e[pos] = 1.0
        return float(_factor(A).solve(e)[pos])

    def step(self, path_idx: list[int]) -> tuple[list, np.ndarray]:
        """Laplacian step law from the tip of an interior path given by row indices."""
        f = self.escape(np.array(path_idx, dtype=np.int64))
        tip = path_idx[-1]
        on_path = set(path_idx)
        targets, weights = [], []
        for d in range(6):
            j = int(self.nbr[tip, d])
            if j < 0:
                targets.append(tuple(int(c) for c in self.points[tip] + NEIGHBORS[d]))
                weights.append(1.0)
            elif j not in on_path:
                targets.append(j)
                weights.append(f[j])
        w = np.array(weights)
        total = w.sum()
        if not total > 0:
            raise DeadEnd("every free neighbour of the tip has zero escape probability")
        return targets, w / total


def laplacian_step(domain: Domain, erased_so_far, cap: int = DEFAULT_CAP) -> StepDistribution:
    """Law of the next LERW step given the erased path so far.

    p(y) is proportional to f(y), f harmonic off the path with f = 0 on the
    path and f = 1 on the outer boundary.
    """
    region = _Region(domain, cap)
    pts = as_points(getattr(erased_so_far, "points", erased_so_far))
    if pts.shape[0] == 0:
        raise ValueError("erased path must be nonempty")
    idx = region.index.find(pts)
    if np.any(idx < 0):
        raise ValueError("erased path must lie in the domain")
    if np.unique(idx).size != idx.size:
        raise ValueError("erased path must be simple")
    targets, probs = region.step([int(i) for i in idx])
    support = np.array([region.points[t] if isinstance(t, int) else t for t in targets],
                       dtype=np.int64).reshape(-1, 3)
    return StepDistribution(support, probs)


def _as_tuple(region: _Region, t) -> tuple:
    return t if isinstance(t, tuple) else tuple(int(c) for c in region.points[t])


def exact_lerw_law(domain: Domain, start, horizon: int, cap: int = DEFAULT_CAP) -> dict:
    """Exact law of the first ``horizon`` steps of LERW from ``start`` to the boundary.

    Keys are prefixes (tuples of points) of exactly ``horizon`` steps, or
    shorter prefixes that already reached the outer boundary; values sum to 1.
    Computed by depth-first expansion of the Laplacian-step chain rule.
    """
    region = _Region(domain, cap)
    if horizon < 0 or horizon > cap:
        raise DomainTooLarge("horizon must lie in [0, cap]")
    s = region.idx(start)
    if s < 0:
        raise ValueError("start must lie in the domain")
    law: dict = {}

    def expand(path: list[int], prob: float):
        if len(path) - 1 == horizon:
            law[tuple(_as_tuple(region, t) for t in path)] = prob
            return
        targets, probs = region.step(path)
        for t, q in zip(targets, probs):
            if q == 0.0:
                continue
            if isinstance(t, tuple):
                law[tuple(_as_tuple(region, u) for u in path) + (t,)] = prob * q
            else:
                expand(path + [t], prob * q)

    expand([s], 1.0)
    return law


def conditional_law(law: dict, prefix) -> dict:
    """Law of the continuation given ``prefix``, read off a joint prefix law."""
    pre = tuple(as_point(p) for p in prefix)
    k = len(pre)
    sub = {key[k - 1:]: v for key, v in law.items() if key[:k] == pre}
    total = sum(sub.values())
    if total == 0:
        raise ValueError("prefix has probability zero")
    return {key: v / total for key, v in sub.items()}


def continuation_law(domain: Domain, prefix, horizon: int, cap: int = DEFAULT_CAP) -> dict:
    """Law of LE(R) for R a walk from the tip of ``prefix`` conditioned to leave the
    domain before returning to ``prefix``; first ``horizon`` steps.

    Computed through the last-exit decomposition: the loops left at each new
    point are weighted by diagonal Green's functions of the shrinking domain,
    and the final excursion by an escape probability. This does not use the
    Laplacian-step chain rule, so it can serve as a cross-check of it.
    """
    region = _Region(domain, cap)
    pts = as_points(getattr(prefix, "points", prefix))
    lam = [int(i) for i in region.index.find(pts)]
    if min(lam) < 0:
        raise ValueError("prefix must lie in the domain")
    tip = lam[-1]

    def escape_from(i: int, removed: list[int]) -> float:
        f = region.escape(np.array(removed, dtype=np.int64))
        s = 0.0
        for d in range(6):
            j = int(region.nbr[i, d])
            s += 1.0 if j < 0 else f[j]
        return s / 6.0

    h = escape_from(tip, lam)
    if not h > 0:
        raise ValueError("tip cannot reach the boundary")
    law: dict = {}

    def expand(omega: list[int], weight: float):
        # weight: product of (1/6) G factors for omega[1:]
        cur = omega[-1]
        removed = lam + omega[1:]
        if len(omega) - 1 == horizon:
            law[tuple(_as_tuple(region, t) for t in omega)] = weight * escape_from(cur, removed) / h
            return
        for d in range(6):
            j = int(region.nbr[cur, d])
            if j < 0:
                nxt = tuple(int(c) for c in region.points[cur] + NEIGHBORS[d])
                law[tuple(_as_tuple(region, t) for t in omega) + (nxt,)] = weight / 6.0 / h
            elif j not in removed:
                g = region.green_diag(np.array(removed, dtype=np.int64), j)
                expand(omega + [j], weight * g / 6.0)

    expand([tip], 1.0)
    return {k: v for k, v in law.items() if v > 0}


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def empirical_law(samples) -> dict:
    """Empirical law of hashable outcomes."""
    counts: dict = {}
    for s in samples:
        counts[s] = counts.get(s, 0) + 1
    n = sum(counts.values())
    return {k: v / n for k, v in counts.items()}


def lerw_prefix_samples(domain: Domain, start, horizon: int, n: int, rng) -> list:
    """Prefixes of ``n`` Monte Carlo LERWs in the form used by ``exact_lerw_law``."""
    from . import _kernels as K
    from .lattice import generator

    s = as_point(start)
    dint, mask = domain.kernel_spec()
    arr = K.lerw_prefix_batch(s[0], s[1], s[2], dint, mask, n, horizon, generator(rng))
    out = []
    for row in arr:
        row = row[row[:, 0] != K.PAD]
        out.append(tuple(tuple(int(c) for c in p) for p in row))
    return out
