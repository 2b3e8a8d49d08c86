"""Wired uniform spanning trees by Wilson's algorithm.

The boundary of the domain is wired into a single super-vertex, but each
interior-to-boundary edge keeps the boundary point it lands on, so the branch
from a vertex is an honest lattice path ending outside the domain.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import sympy

from . import _kernels as K
from .errors import DomainTooLarge, EmptyDomain, InvalidPath, NotInDomain
from .lattice import NEIGHBORS, Domain, LatticePath, SimplePath, as_point, as_points, generator
from .laplacian import PointIndex

NOT_IN_TREE = -2
BOUNDARY = -1


@dataclass(frozen=True)
class FirstWalkPath:
    """Seed the tree with a given simple path from an interior point to the boundary."""

    path: LatticePath


@dataclass(frozen=True, eq=False)
class WiredTree:
    """Parent structure of a wired spanning tree.

    ``parent[i]`` is the row of the parent of ``points[i]``, or -1 when the
    parent edge goes to the boundary; ``attach[i]`` is the parent point in
    either case.
    """

    domain: Domain
    points: np.ndarray
    parent: np.ndarray
    attach: np.ndarray
    mesh: int = 0

    def __post_init__(self):
        object.__setattr__(self, "_index", PointIndex(self.points))
        for a in (self.points, self.parent, self.attach):
            a.setflags(write=False)

    def row(self, x) -> int:
        i = int(self._index.find(as_point(x))[0])
        if i < 0:
            raise NotInDomain(f"{as_point(x)} is not an interior point")
        return i

    def parent_of(self, x) -> tuple:
        return tuple(int(c) for c in self.attach[self.row(x)])

    def key(self) -> tuple:
        """Hashable identity of the tree: the parent point of every vertex in order."""
        return tuple(map(tuple, self.attach.tolist()))

    def depths(self) -> np.ndarray:
        """Number of edges from each vertex to the boundary super-vertex."""
        n = self.points.shape[0]
        depth = np.full(n, -1, dtype=np.int64)
        for i in range(n):
            chain = []
            j = i
            while j != BOUNDARY and depth[j] < 0:
                chain.append(j)
                if len(chain) > n:
                    raise InvalidPath("parent map has a cycle")
                j = self.parent[j]
            base = 0 if j == BOUNDARY else depth[j]
            for k, c in enumerate(reversed(chain)):
                depth[c] = base + k + 1
        return depth

    def check(self) -> None:
        """Raise unless the parent map is a spanning tree of lattice edges."""
        if np.any(self.parent == NOT_IN_TREE):
            raise InvalidPath("some vertices are not in the tree")
        step = np.abs(self.attach - self.points).sum(axis=1)
        if np.any(step != 1):
            raise InvalidPath("parent edge is not a lattice edge")
        inside = self.domain.contains(self.attach)
        if np.any(inside != (self.parent >= 0)):
            raise InvalidPath("boundary flags disagree with the domain")
        self.depths()

    def edges(self) -> list[tuple]:
        return [(tuple(p), tuple(a)) for p, a in zip(self.points.tolist(), self.attach.tolist())]


class WilsonSampler:
    """Reusable Wilson sampler for one domain and one ordering."""

    def __init__(self, domain: Domain, ordering: Union[Sequence, FirstWalkPath, None] = None):
        pts = domain.interior_points()
        if pts.shape[0] == 0:
            raise EmptyDomain("domain has no interior points")
        self.domain = domain
        self.points = pts
        self.index = PointIndex(pts)
        self.ikeys, self.ivals = K.build_index(pts)
        self.seed_path = None
        first: list = []
        if isinstance(ordering, FirstWalkPath):
            self.seed_path = ordering.path
            first = [self.seed_path.start]
        elif ordering is not None:
            first = [as_point(p) for p in ordering]
        rows = self.index.find(as_points(first)) if first else np.zeros(0, dtype=np.int64)
        if np.any(rows < 0):
            raise NotInDomain("ordering contains points outside the domain")
        seen = np.zeros(pts.shape[0], dtype=bool)
        order = []
        for r in rows:
            if not seen[r]:
                order.append(r)
                seen[r] = True
        # interior_points is lexicographic, so the rest follow in that order
        order.extend(np.flatnonzero(~seen).tolist())
        self.order = np.array(order, dtype=np.int64)
        self._seed = self._seed_arrays() if self.seed_path is not None else None

    def _seed_arrays(self):
        path = as_points(self.seed_path.points)
        rows = self.index.find(path)
        if rows[-1] >= 0 or np.any(rows[:-1] < 0):
            raise InvalidPath("seed path must stay inside and end on the boundary")
        if not self.seed_path.is_simple():
            raise InvalidPath("seed path must be simple")
        n = self.points.shape[0]
        parent = np.full(n, NOT_IN_TREE, dtype=np.int64)
        attach = np.zeros((n, 3), dtype=np.int64)
        for t in range(len(rows) - 1):
            parent[rows[t]] = rows[t + 1] if rows[t + 1] >= 0 else BOUNDARY
            attach[rows[t]] = path[t + 1]
        return parent, attach

    def sample(self, rng) -> WiredTree:
        n = self.points.shape[0]
        if self._seed is None:
            parent = np.full(n, NOT_IN_TREE, dtype=np.int64)
            attach = np.zeros((n, 3), dtype=np.int64)
        else:
            parent, attach = self._seed[0].copy(), self._seed[1].copy()
        parent, attach = K.wilson_fill(self.points, self.order, self.ikeys, self.ivals,
                                       parent, attach, generator(rng))
        return WiredTree(self.domain, self.points, parent, attach, self.domain.mesh)


def wilson_sample(domain: Domain, ordering=None, rng=0) -> WiredTree:
    """Wired UST on ``domain`` by Wilson's algorithm.

    ``ordering`` is a sequence of interior points (any missing points follow in
    lexicographic order) or ``FirstWalkPath(gamma)`` to start from a given
    loop-erased path.
    """
    return WilsonSampler(domain, ordering).sample(rng)


def tree_path(tree: WiredTree, x) -> SimplePath:
    """Branch of the tree from ``x`` to the boundary, ending at the boundary point."""
    i = tree.row(x)
    pts = [tuple(int(c) for c in tree.points[i])]
    while i != BOUNDARY:
        pts.append(tuple(int(c) for c in tree.attach[i]))
        i = int(tree.parent[i])
        if len(pts) > tree.points.shape[0] + 1:
            raise InvalidPath("parent map has a cycle")
    return SimplePath(np.array(pts, dtype=np.int64), tree.mesh)


def tree_distance(tree: WiredTree, x, y) -> int:
    """Graph distance in the wired tree; branches that only meet at the
    boundary super-vertex are joined there."""
    i, j = tree.row(x), tree.row(y)
    anc = {}
    d, k = 0, i
    while k != BOUNDARY:
        anc[k] = d
        k = int(tree.parent[k])
        d += 1
    depth_x = d
    d, k = 0, j
    while k != BOUNDARY:
        if k in anc:
            return anc[k] + d
        k = int(tree.parent[k])
        d += 1
    return depth_x + d


def matrix_tree_count(domain: Domain, cap: int = 12) -> int:
    """Number of wired spanning trees: det(6 I - A) over the interior, exactly."""
    pts = domain.interior_points()
    n = pts.shape[0]
    if n > cap:
        raise DomainTooLarge(f"{n} interior vertices exceed the cap {cap}")
    if n == 0:
        raise EmptyDomain("domain has no interior points")
    index = PointIndex(pts)
    L = sympy.zeros(n, n)
    for i in range(n):
        L[i, i] = 6
        for j in index.find(pts[i] + NEIGHBORS):
            if j >= 0:
                L[i, int(j)] -= 1
    return int(L.det(method="bareiss"))
