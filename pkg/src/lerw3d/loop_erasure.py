"""Chronological loop erasure and path algebra."""
from __future__ import annotations

from typing import Iterable

import numpy as np

from . import _kernels as K
from .errors import EmptyPath, EndpointMismatch, InvalidPath
from .lattice import Domain, LatticePath, SimplePath, as_point, as_points, generator, pack_keys


def loop_erase(path: LatticePath) -> SimplePath:
    """Forward loop erasure: keep a stack of the erased path and a last-visit map,
    truncate the stack whenever the walk returns to a point on it."""
    if path is None or len(path) == 0:
        raise EmptyPath("cannot loop-erase an empty path")
    return SimplePath(K.loop_erase_array(np.ascontiguousarray(path.points)), path.mesh)


def loop_erase_lep(path: LatticePath) -> SimplePath:
    """Reference erasure by the last-visit recursion t_0 = last(λ(0)),
    t_i = last(λ(t_{i-1} + 1)), stopping once λ(t_l) = λ(m).

    Slow on purpose; used as an oracle for ``loop_erase``.
    """
    if path is None or len(path) == 0:
        raise EmptyPath("cannot loop-erase an empty path")
    keys = pack_keys(path.points)
    m = keys.size - 1
    # last occurrence of the point at each index
    _, first_rev, inv = np.unique(keys[::-1], return_index=True, return_inverse=True)
    last = (m - first_rev)[inv][::-1].tolist()
    keys = keys.tolist()
    ts = [last[0]]
    while keys[ts[-1]] != keys[m]:
        ts.append(last[ts[-1] + 1])
    return SimplePath(path.points[ts], path.mesh)


class StreamingEraser:
    """Online loop erasure; memory scales with the current erased length."""

    def __init__(self, start, mesh: int = 0):
        x, y, z = as_point(start)
        as_points((x, y, z))
        self.mesh = mesh
        self._tip = (x, y, z)
        self._state = K.le_init(x, y, z)

    def push(self, point) -> None:
        p = as_point(point)
        if abs(p[0] - self._tip[0]) + abs(p[1] - self._tip[1]) + abs(p[2] - self._tip[2]) != 1:
            raise InvalidPath(f"{p} is not a neighbour of {self._tip}")
        as_points(p)
        path, pkeys, length, tab, used = self._state
        self._state = K.le_push(p[0], p[1], p[2], path, pkeys, length, tab, used)
        self._tip = p

    def __len__(self) -> int:
        return self._state[2]

    @property
    def path(self) -> SimplePath:
        path, _, length = self._state[:3]
        return SimplePath(path[:length].copy(), self.mesh)


def loop_erase_streaming(points: Iterable, mesh: int = 0) -> SimplePath:
    """Loop erasure of a walk delivered one point at a time."""
    it = iter(points)
    try:
        first = next(it)
    except StopIteration:
        raise EmptyPath("empty step source") from None
    eraser = StreamingEraser(first, mesh)
    for p in it:
        eraser.push(p)
    return eraser.path


def reverse(path: LatticePath) -> LatticePath:
    return type(path)(path.points[::-1].copy(), path.mesh)


def concat(a: LatticePath, b: LatticePath) -> LatticePath:
    if a.end != b.start:
        raise EndpointMismatch(f"{a.end} != {b.start}")
    if a.mesh != b.mesh:
        raise EndpointMismatch("paths live on different meshes")
    return LatticePath(np.concatenate([a.points, b.points[1:]]), a.mesh)


def find_cut_times(path: LatticePath) -> list[int]:
    """Indices k with path[0..k] and path[k+1..] visiting disjoint point sets."""
    keys = pack_keys(path.points)
    n = keys.size
    uniq, inv = np.unique(keys, return_inverse=True)
    first = np.full(uniq.size, n, dtype=np.int64)
    last = np.full(uniq.size, -1, dtype=np.int64)
    idx = np.arange(n)
    np.minimum.at(first, inv, idx)
    np.maximum.at(last, inv, idx)
    # k is blocked when some point has first <= k < last
    cover = np.zeros(n + 1, dtype=np.int64)
    np.add.at(cover, first, 1)
    np.add.at(cover, last, -1)
    blocked = np.cumsum(cover)[:n] > 0
    return [int(k) for k in np.flatnonzero(~blocked)]


def sample_lerw(domain: Domain, rng, start=(0, 0, 0)) -> SimplePath:
    """LE(S[0, T]) for a walk from ``start`` stopped on leaving ``domain``.

    The returned path ends at the exit point, which lies outside the domain.
    """
    s = as_point(start)
    if s not in domain:
        raise ValueError("start must lie inside the domain")
    dint, mask = domain.kernel_spec()
    pts, _, _ = K.lerw_walk(s[0], s[1], s[2], dint, mask, -1, generator(rng))
    return SimplePath(pts, domain.mesh)


def sample_lerw_with_steps(domain: Domain, rng, start=(0, 0, 0)) -> tuple[SimplePath, int]:
    s = as_point(start)
    dint, mask = domain.kernel_spec()
    pts, steps, _ = K.lerw_walk(s[0], s[1], s[2], dint, mask, -1, generator(rng))
    return SimplePath(pts, domain.mesh), int(steps)
