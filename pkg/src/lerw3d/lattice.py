"""Lattice geometry on 2^-n Z^3, random-walk sampling and seeded streams.

Points are integer triples in lattice units; the physical position of a point
at mesh level n is ``coords * 2**-n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from . import _kernels as K
from .errors import (
    CoordinateOverflow,
    InvalidPath,
    NeverExits,
    NeverHits,
    StoppingBudgetExceeded,
)

NEIGHBORS = np.array(
    [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=np.int64
)


def as_points(points) -> np.ndarray:
    """Coerce a point or sequence of points to an int64 (k, 3) array."""
    arr = np.asarray(points, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr.reshape(1, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"expected points of shape (k, 3), got {arr.shape}")
    if arr.size and np.abs(arr).max() >= K.COORD_LIMIT:
        raise CoordinateOverflow(f"coordinate magnitude must stay below 2^20, got {np.abs(arr).max()}")
    return arr


def as_point(p) -> tuple:
    arr = np.asarray(p, dtype=np.int64).reshape(3)
    return (int(arr[0]), int(arr[1]), int(arr[2]))


def pack_keys(points: np.ndarray) -> np.ndarray:
    """Packed 64-bit keys, 21 bits per axis in two's complement."""
    pts = as_points(points)
    m = np.int64(K.MASK21)
    return (pts[:, 0] & m) | ((pts[:, 1] & m) << 21) | ((pts[:, 2] & m) << 42)


def check_mesh(n: int) -> int:
    if int(n) != n or n < 0:
        raise ValueError(f"mesh level must be a nonnegative integer, got {n}")
    return int(n)


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LatticePath:
    """Nearest-neighbour path [p(0), ..., p(m)]; ``length`` is m."""

    points: np.ndarray
    mesh: int = 0

    def __post_init__(self):
        pts = as_points(self.points)
        if pts.shape[0] == 0:
            raise InvalidPath("a path needs at least one point")
        steps = np.abs(np.diff(pts, axis=0)).sum(axis=1)
        if steps.size and not np.all(steps == 1):
            bad = int(np.flatnonzero(steps != 1)[0])
            raise InvalidPath(f"points {bad} and {bad + 1} are not lattice neighbours")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "mesh", check_mesh(self.mesh))

    @property
    def length(self) -> int:
        return self.points.shape[0] - 1

    def __len__(self) -> int:
        return self.points.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return type(self)(self.points[i], self.mesh) if isinstance(self, SimplePath) \
                else LatticePath(self.points[i], self.mesh)
        return as_point(self.points[i])

    def __eq__(self, other):
        if not isinstance(other, LatticePath):
            return NotImplemented
        return self.mesh == other.mesh and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.mesh, self.points.tobytes()))

    def __repr__(self):
        return f"{type(self).__name__}(length={self.length}, mesh={self.mesh})"

    @property
    def start(self) -> tuple:
        return as_point(self.points[0])

    @property
    def end(self) -> tuple:
        return as_point(self.points[-1])

    def physical(self) -> np.ndarray:
        return self.points * 2.0 ** -self.mesh

    def is_simple(self) -> bool:
        return np.unique(pack_keys(self.points)).size == self.points.shape[0]

    def tuples(self) -> list:
        return [tuple(map(int, p)) for p in self.points]


class SimplePath(LatticePath):
    """A path with pairwise distinct points."""

    def __post_init__(self):
        super().__post_init__()
        if not self.is_simple():
            raise InvalidPath("path revisits a point")


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

class Domain:
    """Finite subset of 2^-n Z^3 with an exact membership test."""

    mesh: int

    def contains(self, points) -> np.ndarray:
        raise NotImplementedError

    def __contains__(self, p) -> bool:
        return bool(self.contains(as_points(p))[0])

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Inclusive integer bounding box of the interior."""
        raise NotImplementedError

    def interior_points(self) -> np.ndarray:
        lo, hi = self.bounds()
        axes = [np.arange(lo[a], hi[a] + 1) for a in range(3)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        return grid[self.contains(grid)]

    def size(self) -> int:
        return int(self.interior_points().shape[0])

    def outer_boundary(self) -> np.ndarray:
        pts = self.interior_points()
        nb = (pts[:, None, :] + NEIGHBORS[None]).reshape(-1, 3)
        nb = nb[~self.contains(nb)]
        return np.unique(nb, axis=0)

    def inner_boundary(self) -> np.ndarray:
        pts = self.interior_points()
        nb = (pts[:, None, :] + NEIGHBORS[None]).reshape(-1, 3)
        out = ~self.contains(nb).reshape(-1, 6)
        return pts[out.any(axis=1)]

    def kernel_spec(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError


def _ceil_sq_minus_one(r: Fraction) -> int:
    """Largest integer d2 with d2 < r^2."""
    r2 = r * r
    return math.ceil(r2) - 1


@dataclass(frozen=True)
class Ball(Domain):
    """Discrete ball {x : |x - center| < radius} (``closed``: <=); radius is physical."""

    center: tuple = (0, 0, 0)
    radius: float = 1.0
    mesh: int = 0
    closed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        object.__setattr__(self, "mesh", check_mesh(self.mesh))
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def lattice_radius(self) -> Fraction:
        return Fraction(self.radius) * 2 ** self.mesh

    @property
    def r2max(self) -> int:
        r = self.lattice_radius
        return math.floor(r * r) if self.closed else _ceil_sq_minus_one(r)

    def contains(self, points) -> np.ndarray:
        pts = as_points(points) - np.array(self.center)
        return (pts * pts).sum(axis=1) <= self.r2max

    def bounds(self):
        R = math.isqrt(max(self.r2max, 0))
        c = np.array(self.center)
        return c - R, c + R

    def kernel_spec(self):
        c = self.center
        return np.array([0, c[0], c[1], c[2], 0, 0, 0, self.r2max], dtype=np.int64), _NOMASK


@dataclass(frozen=True)
class Box(Domain):
    """Closed lattice box lo <= x <= hi (integer corners, lattice units)."""

    lo: tuple = (0, 0, 0)
    hi: tuple = (0, 0, 0)
    mesh: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lo", as_point(self.lo))
        object.__setattr__(self, "hi", as_point(self.hi))
        object.__setattr__(self, "mesh", check_mesh(self.mesh))
        if any(a > b for a, b in zip(self.lo, self.hi)):
            raise ValueError("empty box")

    @classmethod
    def centered(cls, center, half_side: float, mesh: int = 0) -> "Box":
        """Closed box of physical half-side ``half_side`` around a lattice point."""
        h = math.floor(Fraction(half_side) * 2 ** mesh)
        c = np.array(as_point(center))
        return cls(tuple(c - h), tuple(c + h), mesh)

    def contains(self, points) -> np.ndarray:
        pts = as_points(points)
        return np.all((pts >= np.array(self.lo)) & (pts <= np.array(self.hi)), axis=1)

    def bounds(self):
        return np.array(self.lo), np.array(self.hi)

    def kernel_spec(self):
        return np.array([1, *self.lo, *self.hi, 0], dtype=np.int64), _NOMASK


@dataclass(frozen=True, eq=False)
class ExplicitSet(Domain):
    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=np.int64))
    mesh: int = 0

    def __post_init__(self):
        pts = np.unique(as_points(self.points), axis=0)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "mesh", check_mesh(self.mesh))
        if pts.shape[0]:
            lo = pts.min(axis=0)
            shape = tuple(pts.max(axis=0) - lo + 1)
            mask = np.zeros(shape, dtype=np.uint8)
            mask[tuple((pts - lo).T)] = 1
        else:
            lo = np.zeros(3, dtype=np.int64)
            mask = np.zeros((1, 1, 1), dtype=np.uint8)
        object.__setattr__(self, "_lo", lo)
        object.__setattr__(self, "_mask", mask)

    def contains(self, points) -> np.ndarray:
        pts = as_points(points) - self._lo
        shape = np.array(self._mask.shape)
        ok = np.all((pts >= 0) & (pts < shape), axis=1)
        res = np.zeros(pts.shape[0], dtype=bool)
        if ok.any():
            res[ok] = self._mask[tuple(pts[ok].T)] != 0
        return res

    def bounds(self):
        return self._lo, self._lo + np.array(self._mask.shape) - 1

    def interior_points(self):
        return self.points.copy()

    def kernel_spec(self):
        lo = self._lo
        return np.array([2, lo[0], lo[1], lo[2], 0, 0, 0, 0], dtype=np.int64), self._mask


_NOMASK = np.zeros((1, 1, 1), dtype=np.uint8)
_UNBOUNDED = np.array([-1, 0, 0, 0, 0, 0, 0, 0], dtype=np.int64)


def unit_ball(n: int) -> Ball:
    """Lattice points of the open unit ball at mesh level n."""
    return Ball((0, 0, 0), 1.0, n)


# ---------------------------------------------------------------------------
# randomness
# ---------------------------------------------------------------------------

class RngStream:
    """Reproducible stream determined by (master_seed, stream_index).

    Streams are derived with ``SeedSequence(master_seed, spawn_key=(stream_index,))``,
    so trial i can be replayed in isolation.
    """

    def __init__(self, master_seed: int, stream_index: int = 0):
        if stream_index < 0:
            raise ValueError("stream_index must be nonnegative")
        self.master_seed = int(master_seed) & 0xFFFFFFFFFFFFFFFF
        self.stream_index = int(stream_index)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index})"


RngLike = Union[RngStream, np.random.Generator, int]


def generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    return RngStream(int(rng)).generator


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExitDomain:
    domain: Domain


@dataclass(frozen=True, eq=False)
class HitSet:
    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", as_points(self.points))


@dataclass(frozen=True)
class MaxSteps:
    k: int


StopRule = Union[ExitDomain, HitSet, MaxSteps]


def sample_srw(start, stop: Union[StopRule, Sequence[StopRule]], rng: RngLike, mesh: int | None = None) -> LatticePath:
    """Simple random walk from ``start`` until the first time a stopping rule fires.

    Several rules may be combined; if a ``MaxSteps`` budget runs out before an
    ``ExitDomain``/``HitSet`` rule fires, ``StoppingBudgetExceeded`` carries the
    partial path.
    """
    rules = list(stop) if isinstance(stop, (list, tuple)) else [stop]
    start = as_point(start)
    dint, mask = _UNBOUNDED, _NOMASK
    hkeys = np.full(1, K.EMPTY, dtype=np.int64)
    use_hit = False
    max_steps = -1
    for rule in rules:
        if isinstance(rule, ExitDomain):
            if start not in rule.domain:
                raise ValueError("start must lie inside the domain")
            dint, mask = rule.domain.kernel_spec()
            mesh = rule.domain.mesh if mesh is None else mesh
        elif isinstance(rule, HitSet):
            if rule.points.shape[0] == 0:
                raise ValueError("empty target set")
            if np.any(np.all(rule.points == np.array(start), axis=1)):
                raise ValueError("start must not lie in the target set")
            hkeys, _ = K.build_index(rule.points)
            use_hit = True
        elif isinstance(rule, MaxSteps):
            if rule.k < 0:
                raise ValueError("MaxSteps needs k >= 0")
            max_steps = int(rule.k)
        else:
            raise TypeError(f"unknown stopping rule {rule!r}")
    if dint[0] < 0 and not use_hit and max_steps < 0:
        raise ValueError("walk would never stop")
    pts, status = K.srw_walk(start[0], start[1], start[2], dint, mask, hkeys, use_hit,
                             max_steps, generator(rng))
    path = LatticePath(pts, mesh or 0)
    if status:
        raise StoppingBudgetExceeded(path)
    return path


def first_exit_index(path: LatticePath, region: Domain) -> int:
    inside = region.contains(path.points)
    if not inside[0]:
        raise ValueError("path must start inside the region")
    out = np.flatnonzero(~inside)
    if out.size == 0:
        raise NeverExits("path ends inside the region")
    return int(out[0])


def last_hit_index(path: LatticePath, target) -> int:
    if isinstance(target, Domain):
        hit = target.contains(path.points)
    else:
        hit = np.isin(pack_keys(path.points), pack_keys(target))
    idx = np.flatnonzero(hit)
    if idx.size == 0:
        raise NeverHits("path never visits the target")
    return int(idx[-1])
