"""Path functionals: length, occupation measure, box counts, quasi-loops,
hittability probes, escape events and one-point hits.

Physical quantities (radii, box sides, positions) are given in units of the
unit ball; they are converted to lattice units with the path's mesh level.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels as K
from .errors import BadRadii, BetaOutOfRange, NoConditioningEvents, ZeroMeanX
from .lattice import Domain, LatticePath, as_points, generator, pack_keys
from .records import EstimateRecord

BETA_RANGE = (1.0, 5.0 / 3.0)


def curve_length(path: LatticePath) -> int:
    """Number of steps M of the path."""
    return path.length


def _lattice(value, mesh: int) -> Fraction:
    return Fraction(value) * 2 ** mesh


def _exact_int(value, mesh: int, what: str) -> int:
    v = _lattice(value, mesh)
    if v.denominator != 1:
        raise ValueError(f"{what} = {value} is not a whole number of lattice steps at mesh {mesh}")
    return int(v)


# ---------------------------------------------------------------------------
# occupation measure
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OccupationMeasure:
    """Equal-weight atoms on the points of a simple path."""

    mesh: int
    beta_used: float
    atoms: np.ndarray
    weight: float

    def total_mass(self) -> float:
        return self.atoms.shape[0] * self.weight

    def mass(self, region: Domain) -> float:
        """Mass of a lattice region at the same mesh."""
        if region.mesh != self.mesh:
            raise ValueError("region and measure live on different meshes")
        return int(region.contains(self.atoms).sum()) * self.weight

    def mass_box(self, lo, hi) -> float:
        """Mass of the closed physical box lo <= x <= hi."""
        p = self.atoms * 2.0 ** -self.mesh
        inside = np.all((p >= np.asarray(lo, float)) & (p <= np.asarray(hi, float)), axis=1)
        return int(inside.sum()) * self.weight


def occupation_measure(path: LatticePath, beta: float, strict: bool = False) -> OccupationMeasure:
    """One atom of weight 2^(-beta n) per path point.

    A beta outside (1, 5/3] triggers a ``BetaOutOfRange`` warning, or an
    exception with ``strict=True``.
    """
    if not (BETA_RANGE[0] < beta <= BETA_RANGE[1]):
        msg = f"beta = {beta} outside (1, 5/3]"
        if strict:
            raise BetaOutOfRange(msg)
        warnings.warn(msg, BetaOutOfRange, stacklevel=2)
    if not path.is_simple():
        raise ValueError("occupation measure needs a simple path")
    pts = path.points.copy()
    pts.setflags(write=False)
    return OccupationMeasure(path.mesh, float(beta), pts, 2.0 ** (-beta * path.mesh))


# ---------------------------------------------------------------------------
# minimal cover of the closed unit ball
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BoxCover:
    """Closed boxes of side ``epsilon`` covering the closed unit ball; box 0 holds the origin."""

    epsilon: float
    centers: np.ndarray
    typical: np.ndarray

    def __len__(self):
        return self.centers.shape[0]

    def boxes(self) -> list[tuple[np.ndarray, np.ndarray]]:
        h = self.epsilon / 2
        return [(c - h, c + h) for c in self.centers]

    def membership(self, points) -> np.ndarray:
        """Boolean (len(points), M) matrix of closed-box membership."""
        p = np.asarray(points, dtype=float).reshape(-1, 3)
        d = np.abs(p[:, None, :] - self.centers[None]).max(axis=2)
        return d <= self.epsilon / 2 * (1 + 1e-12)


def _box_dist_origin(centers: np.ndarray, h: float) -> np.ndarray:
    gap = np.maximum(np.abs(centers) - h, 0.0)
    return np.sqrt((gap * gap).sum(axis=1))


def _box_far_corner(centers: np.ndarray, h: float) -> np.ndarray:
    far = np.abs(centers) + h
    return np.sqrt((far * far).sum(axis=1))


def minimal_cover(epsilon: float) -> BoxCover:
    """Tiling of R^3 by closed side-epsilon boxes centred on epsilon Z^3 (a subset
    of the (epsilon/2)-grid), keeping exactly the boxes within distance < 1 of
    the origin.

    Each kept box meets the open unit ball in an open set that no other box
    covers, so no box can be dropped.
    """
    if not 0 < epsilon <= 2:
        raise ValueError("epsilon must lie in (0, 2]")
    h = epsilon / 2
    J = int(math.ceil(1 / epsilon + 0.5))
    ax = np.arange(-J, J + 1)
    grid = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 3)
    centers = grid * float(epsilon)
    keep = _box_dist_origin(centers, h) < 1.0
    grid, centers = grid[keep], centers[keep]
    origin = np.flatnonzero(np.all(grid == 0, axis=1))
    order = np.concatenate([origin, np.flatnonzero(~np.all(grid == 0, axis=1))])
    centers = centers[order]
    near = _box_dist_origin(centers, h)
    far = _box_far_corner(centers, h)
    dist_sphere = np.where((near <= 1) & (far >= 1), 0.0, np.minimum(np.abs(1 - near), np.abs(far - 1)))
    typical = np.flatnonzero(np.minimum(near, dist_sphere) > epsilon)
    return BoxCover(float(epsilon), centers, typical)


# ---------------------------------------------------------------------------
# box decomposition
# ---------------------------------------------------------------------------

def fine_exponent(k: int, mesh: int) -> int:
    """Default sub-box exponent q: k^4, capped at mesh - 2 so that sub-boxes keep
    at least 4 lattice points per side."""
    return max(1, min(k ** 4, mesh - 2))


@dataclass(frozen=True)
class BoxPartition:
    """Closed cube B (physical side ``side`` around ``center``) cut into sub-cubes of
    side ``sub_side``; B'_i is the closed cube of half-side ``enlargement * sub_side``
    around the centre of B_i.

    Sub-cubes are half-open [a, a + s) on each axis except the last one, which is
    closed, so the X_i partition the lattice points of B.
    """

    center: tuple = (0.5, 0.0, 0.0)
    side: float = 0.5
    sub_side: float = 0.5
    enlargement: float = 3.0

    @classmethod
    def for_level(cls, k: int, mesh: int, center=(0.5, 0.0, 0.0), q: int | None = None,
                  enlargement: float = 3.0) -> "BoxPartition":
        q = fine_exponent(k, mesh) if q is None else q
        return cls(tuple(center), 2.0 ** -k, 2.0 ** -q, enlargement)

    def lattice(self, mesh: int):
        c = np.array([_exact_int(v, mesh, "center") for v in self.center])
        half = _exact_int(self.side / 2, mesh, "side / 2")
        s = _exact_int(self.sub_side, mesh, "sub_side")
        if (2 * half) % s:
            raise ValueError("sub_side must divide side")
        e2 = _lattice(2 * self.enlargement * self.sub_side, mesh)   # doubled half-side of B'
        return c - half, c + half, s, (2 * half) // s, e2


@dataclass(frozen=True, eq=False)
class BoxStats:
    X_i: np.ndarray
    Y_i: np.ndarray

    @property
    def X(self) -> int:
        return int(self.X_i.sum())

    @property
    def Y(self) -> int:
        return int(self.Y_i.sum())


def _enlarged_ranges(pts: np.ndarray, lo: np.ndarray, s: int, n_cells: int, e2: Fraction) -> np.ndarray:
    """Index ranges [i0, i1) of cells whose enlarged cube contains each point.

    Cell i has doubled centre 2 lo + (2 i + 1) s; the point is inside iff
    |2 p - 2 lo - (2 i + 1) s| <= e2 on every axis.
    """
    num = 2 * (pts - lo)                         # doubled offset
    a = Fraction(e2)
    # (2i+1) s >= num - e2  <=>  i >= (num - e2 - s) / (2 s)
    lo_num = (num * a.denominator - (a.numerator + s * a.denominator))
    hi_num = (num * a.denominator + (a.numerator - s * a.denominator))
    den = 2 * s * a.denominator
    i0 = -((-lo_num) // den)                     # ceil
    i1 = hi_num // den + 1                       # floor + 1
    i0 = np.clip(i0, 0, n_cells)
    i1 = np.clip(i1, 0, n_cells)
    return np.stack([i0[:, 0], i1[:, 0], i0[:, 1], i1[:, 1], i0[:, 2], i1[:, 2]], axis=1)


def box_stats(path: LatticePath, partition: BoxPartition) -> BoxStats:
    """Point counts X_i of the path in each sub-cube and hit indicators Y_i of the
    enlarged cubes B'_i."""
    lo, hi, s, n_cells, e2 = partition.lattice(path.mesh)
    pts = path.points
    X = np.zeros((n_cells,) * 3, dtype=np.int64)
    inB = np.all((pts >= lo) & (pts <= hi), axis=1)
    if inB.any():
        idx = np.minimum((pts[inB] - lo) // s, n_cells - 1)
        np.add.at(X, (idx[:, 0], idx[:, 1], idx[:, 2]), 1)
    Y = np.zeros((n_cells,) * 3, dtype=np.int8)
    reach = int(math.ceil(e2 / 2))
    near = np.all((pts >= lo - reach) & (pts <= hi + reach), axis=1)
    if near.any():
        ranges = _enlarged_ranges(pts[near], lo, s, n_cells, e2)
        ranges = ranges[np.all(ranges[:, 0::2] < ranges[:, 1::2], axis=1)]
        K.mark_boxes(np.ascontiguousarray(ranges), Y)
    return BoxStats(X, Y)


@dataclass(frozen=True)
class ReferenceBox:
    """Reference cell B_0 of side ``side`` around ``center`` (half-open on each
    axis, like an interior partition cell) and its enlargement B'_0 (closed cube of
    half-side ``enlargement * side``)."""

    center: tuple = (0.5, 0.0, 0.0)
    side: float = 2.0 ** -4
    enlargement: float = 3.0

    def images(self) -> np.ndarray:
        """Distinct images of the centre under the 48 symmetries of the cubic lattice."""
        c = np.asarray(self.center, dtype=float)
        out = set()
        for perm in itertools.permutations(range(3)):
            for signs in itertools.product((1.0, -1.0), repeat=3):
                out.add(tuple(float(v) for v in c[list(perm)] * np.array(signs)))
        return np.array(sorted(out))

    def stats(self, path: LatticePath, center=None) -> tuple[int, int]:
        n = path.mesh
        center = self.center if center is None else center
        c2 = np.array([2 * _exact_int(v, n, "center") for v in center])
        s = _exact_int(self.side, n, "side")
        e2 = math.floor(_lattice(2 * self.enlargement * self.side, n))
        p2 = 2 * path.points
        X0 = int(np.all((p2 >= c2 - s) & (p2 < c2 + s), axis=1).sum())
        Y0 = int(np.any(np.abs(p2 - c2).max(axis=1) <= e2))
        return X0, Y0

    def pooled_stats(self, path: LatticePath) -> tuple[int, int]:
        """Sums of X_0 and Y_0 over all symmetric images of the reference box."""
        xs, ys = zip(*(self.stats(path, c) for c in self.images()))
        return int(sum(xs)), int(sum(ys))


def alpha0_estimate(samples: Iterable, ref: ReferenceBox, pooled: bool = False) -> EstimateRecord:
    """E(X_0 | Y_0 = 1) from paths, or from precomputed (X_0, Y_0) pairs.

    With ``pooled`` every symmetric image of the reference box contributes, and
    the estimate is the ratio sum(X_0) / sum(Y_0) (X_0 vanishes when Y_0 does);
    the standard error is the delta-method one for a ratio of means.
    """
    xs, ys = [], []
    for smp in samples:
        if isinstance(smp, LatticePath):
            x0, y0 = ref.pooled_stats(smp) if pooled else ref.stats(smp)
        else:
            x0, y0 = smp
        xs.append(x0)
        ys.append(y0)
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if y.sum() == 0:
        raise NoConditioningEvents("no sample hit the enlarged reference box")
    a = x.sum() / y.sum()
    n = x.size
    if n > 1:
        d = x - a * y
        se = math.sqrt(d.var(ddof=1) / n) / y.mean()
    else:
        se = 0.0
    return EstimateRecord(float(a), float(se), int(np.count_nonzero(y)), {"samples": n, "pooled": pooled})


def l2_discrepancy(X, Y, alpha0: float) -> float:
    """mean((X - alpha0 Y)^2) / mean(X)^2 over samples."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.size == 0:
        raise ValueError("no samples")
    m = X.mean()
    if m == 0:
        raise ZeroMeanX("mean of X is zero")
    return float(np.mean((X - alpha0 * Y) ** 2) / m ** 2)


# ---------------------------------------------------------------------------
# quasi-loops
# ---------------------------------------------------------------------------

def _ball_offsets(R2: float) -> np.ndarray:
    """Integer offsets o with |o|^2 < R2."""
    m = int(math.floor(math.sqrt(R2))) + 1
    ax = np.arange(-m, m + 1)
    g = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 3)
    return g[(g * g).sum(axis=1) < R2]


def quasi_loops(s: float, r: float, path: LatticePath, first_only: bool = False) -> np.ndarray:
    """Lattice points x where the path has an (s, r)-quasi-loop: two times k <= l with
    path(k), path(l) in the open ball B(x, s) and path[k, l] leaving B(x, r).

    Radii are physical. With ``first_only`` the scan stops at the first such x.
    """
    if not 0 < s < r:
        raise BadRadii("need 0 < s < r")
    scale = 2.0 ** path.mesh
    S, Rr = s * scale, r * scale
    pts = np.ascontiguousarray(path.points)
    empty = np.zeros((0, 3), dtype=np.int64)
    if pts.shape[0] < 2:
        return empty
    pairs = cKDTree(pts).query_pairs(2 * S, output_type="ndarray")
    if pairs.shape[0] == 0:
        return empty
    pairs = np.sort(pairs, axis=1)
    # the path must move more than r - s away from path(k) before time l
    e = K.escape_indices(pts, (Rr - S) ** 2)
    pairs = pairs[pairs[:, 1] >= e[pairs[:, 0]]]
    if pairs.shape[0] == 0:
        return empty
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    offsets = _ball_offsets(S * S)
    found = K.quasi_loop_scan(pts, np.ascontiguousarray(pairs), offsets, S * S, Rr * Rr,
                              (Rr + S) ** 2, first_only)
    if found.shape[0] == 0:
        return empty
    keys = pack_keys(found)
    return found[np.argsort(keys)]


def quasi_loops_bruteforce(s: float, r: float, path: LatticePath, candidates) -> np.ndarray:
    """Direct check of the definition at each candidate point; quadratic in the path length."""
    scale = 2.0 ** path.mesh
    S2, R2 = (s * scale) ** 2, (r * scale) ** 2
    pts = path.points
    out = []
    for x in as_points(candidates):
        d2 = ((pts - x) ** 2).sum(axis=1)
        near = np.flatnonzero(d2 < S2)
        far = d2 >= R2
        hit = False
        for a in near:
            for b in near[near >= a]:
                if far[a:b + 1].any():
                    hit = True
                    break
            if hit:
                break
        if hit:
            out.append(x)
    return np.array(out, dtype=np.int64).reshape(-1, 3)


# ---------------------------------------------------------------------------
# hittability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProbeResult:
    worst: float
    tested: int
    candidates: int
    empty: bool = False
    per_point: tuple = field(default=(), repr=False)


def hittability_probe(path: LatticePath, epsilon: float, probes: int, rng,
                      max_candidates: int = 32) -> ProbeResult:
    """Worst empirical escape probability over points near the path.

    Candidates are lattice points within distance epsilon^2 of the path; up to
    ``max_candidates`` of them are drawn at random. From each, ``probes``
    independent walks are run until they leave the open ball B(x, sqrt(epsilon));
    a walk escapes if it never touches the path, its start included.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    gen = generator(rng)
    scale = 2 ** path.mesh
    D = epsilon ** 2 * scale
    pts = path.points
    offs = _ball_offsets(D * D * (1 + 1e-12))
    cand = (pts[:, None, :] + offs[None]).reshape(-1, 3)
    keys, first = np.unique(pack_keys(cand), return_index=True)
    cand = cand[first]
    if cand.shape[0] == 0:
        return ProbeResult(0.0, 0, 0, True)
    n_c = cand.shape[0]
    if n_c > max_candidates:
        pick = np.sort(gen.choice(n_c, size=max_candidates, replace=False))
        tested = cand[pick]
    else:
        tested = cand
    gkeys, _ = K.build_index(np.ascontiguousarray(pts))
    r2max = math.ceil(Fraction(epsilon) * scale ** 2) - 1
    probs = []
    for x in tested:
        ok = K.probe_escapes(x[0], x[1], x[2], r2max, gkeys, probes, gen)
        probs.append(ok / probes)
    return ProbeResult(float(max(probs)), len(probs), n_c, False, tuple(probs))


# ---------------------------------------------------------------------------
# escape events and one-point hits
# ---------------------------------------------------------------------------

def escape_event_sample(m: int, n: int, rng) -> int:
    """1 iff LE(S1[0, T1])[s, end] misses S2[1, T2] for independent walks from 0
    stopped on leaving the lattice ball of radius n; s is the last index at which
    the loop erasure lies in the ball of radius m (m = 0: the whole erasure)."""
    if m != 0 and not 1 <= m <= n:
        raise BadRadii("need 1 <= m <= n (or m = 0 for the full curve)")
    if n < 1:
        raise BadRadii("need n >= 1")
    r2n = n * n - 1
    r2m = m * m - 1 if m else 0
    return int(K.escape_trial(r2n, r2m, m == 0, generator(rng)))


def one_point_hit(x: Sequence[float], path: LatticePath) -> int:
    """1 iff the path passes through the lattice point nearest to the physical point x."""
    xp = np.asarray(x, dtype=float)
    if not 0 < np.linalg.norm(xp) < 1:
        raise ValueError("x must lie in the unit ball minus the origin")
    target = np.rint(xp * 2 ** path.mesh).astype(np.int64)
    return int(np.any(np.all(path.points == target, axis=1)))
