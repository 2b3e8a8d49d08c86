"""Piecewise-linear curves, time rescaling, truncation and curve metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels as K
from .errors import BadDelta, CurveTooShort, EmptySet, NeverExitsBox
from .lattice import LatticePath


@dataclass(frozen=True, eq=False)
class ParamCurve:
    """Curve [0, duration] -> R^3 given by breakpoints and linear interpolation."""

    times: np.ndarray
    positions: np.ndarray
    mesh: int | None = None
    beta: float | None = None

    def __post_init__(self):
        t = np.ascontiguousarray(self.times, dtype=np.float64).reshape(-1)
        p = np.ascontiguousarray(self.positions, dtype=np.float64).reshape(-1, 3)
        if t.size == 0 or t.size != p.shape[0]:
            raise ValueError("need one position per breakpoint, at least one breakpoint")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("breakpoints must start at 0 and increase strictly")
        t.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", p)

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    def __call__(self, t):
        """Position(s) at time(s) t, clamped to [0, duration]."""
        t = np.asarray(t, dtype=np.float64)
        out = np.stack([np.interp(t, self.times, self.positions[:, a]) for a in range(3)], axis=-1)
        return out

    def at_normalized(self, s: np.ndarray) -> np.ndarray:
        """Positions at times s * duration, s in [0, 1]."""
        if self.times.size == 1:
            return np.broadcast_to(self.positions[0], (np.size(s), 3)).copy()
        u = self.times / self.times[-1]
        return np.stack([np.interp(s, u, self.positions[:, a]) for a in range(3)], axis=-1)


def rescale_time(path: LatticePath, beta: float) -> ParamCurve:
    """eta(t) = path(2^(beta n) t): breakpoint j at time j 2^(-beta n), physical positions."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    h = 2.0 ** (-beta * path.mesh)
    times = np.arange(len(path), dtype=np.float64) * h
    return ParamCurve(times, path.physical(), path.mesh, float(beta))


# ---------------------------------------------------------------------------
# exchange format
# ---------------------------------------------------------------------------

def write_curve(curve: ParamCurve, fh) -> None:
    """Header ``mesh=<n> beta=<float> len=<m>``, then m + 1 lines ``t x y z``.

    Floats are written with ``repr`` so reading back is bit-exact.
    """
    mesh = -1 if curve.mesh is None else curve.mesh
    beta = float("nan") if curve.beta is None else curve.beta
    fh.write(f"mesh={mesh} beta={beta!r} len={curve.times.size - 1}\n")
    for t, p in zip(curve.times.tolist(), curve.positions.tolist()):
        fh.write(f"{t!r} {p[0]!r} {p[1]!r} {p[2]!r}\n")


def read_curve(fh) -> ParamCurve:
    head = dict(kv.split("=", 1) for kv in fh.readline().split())
    m = int(head["len"])
    rows = [fh.readline().split() for _ in range(m + 1)]
    arr = np.array([[float(v) for v in r] for r in rows], dtype=np.float64).reshape(-1, 4)
    mesh = int(head["mesh"])
    beta = float(head["beta"])
    return ParamCurve(arr[:, 0], arr[:, 1:], None if mesh < 0 else mesh,
                      None if math.isnan(beta) else beta)


# ---------------------------------------------------------------------------
# rho
# ---------------------------------------------------------------------------

def _sup_aligned(a: ParamCurve, b: ParamCurve) -> float:
    """max over s in [0, 1] of |a(s t_a) - b(s t_b)|.

    On each interval between consecutive normalized breakpoints of either curve
    both curves are affine in s, so the norm of the difference is convex there
    and the maximum sits on the merged breakpoint grid.
    """
    grids = [np.array([0.0, 1.0])]
    for c in (a, b):
        if c.times.size > 1:
            grids.append(c.times / c.times[-1])
    s = np.unique(np.concatenate(grids))
    d = a.at_normalized(s) - b.at_normalized(s)
    return float(np.sqrt((d * d).sum(axis=1)).max())


def rho_distance(a: ParamCurve, b: ParamCurve) -> float:
    """|t_a - t_b| + max_s |a(s t_a) - b(s t_b)|."""
    return abs(a.duration - b.duration) + _sup_aligned(a, b)


# ---------------------------------------------------------------------------
# Hausdorff
# ---------------------------------------------------------------------------

def _as_set(x) -> Union[np.ndarray, ParamCurve]:
    if isinstance(x, ParamCurve):
        return x
    if isinstance(x, LatticePath):
        return np.ascontiguousarray(x.physical(), dtype=np.float64)
    arr = np.asarray(x, dtype=np.float64)
    if arr.size == 0:
        raise EmptySet("empty point set")
    return np.ascontiguousarray(arr.reshape(-1, 3))


def _segments(x) -> tuple[np.ndarray, np.ndarray]:
    """Segment endpoints of a curve's range; a point set gives degenerate segments."""
    if isinstance(x, ParamCurve):
        p = x.positions
        if p.shape[0] == 1:
            return p, p
        return np.ascontiguousarray(p[:-1]), np.ascontiguousarray(p[1:])
    return x, x


def _directed(A, B, tol: float) -> float:
    Ba, Bb = _segments(B)
    if isinstance(A, ParamCurve):
        return float(K.directed_polyline(A.positions, Ba, Bb, tol))
    return float(K.points_to_segments(A, Ba, Bb).max())


def hausdorff_distance(A, B, tol: float = 1e-9) -> float:
    """Hausdorff distance between finite point sets, or between ranges of curves.

    For point sets the value is exact. For curves the directed distances are
    maximized over each segment by branch and bound, to within ``tol``.
    """
    A, B = _as_set(A), _as_set(B)
    if not (isinstance(A, ParamCurve) or isinstance(B, ParamCurve)):
        da = cKDTree(B).query(A)[0].max()
        db = cKDTree(A).query(B)[0].max()
        return float(max(da, db))
    return max(_directed(A, B, tol), _directed(B, A, tol))


# ---------------------------------------------------------------------------
# truncation at box exits
# ---------------------------------------------------------------------------

def box_exit_time(curve: ParamCurve, m: float) -> tuple[float, int, float]:
    """First time the curve leaves the open box {|x|_inf < m}.

    Returns (tau, j, w): tau lies on segment j -> j + 1 at fraction w.
    """
    sup = np.abs(curve.positions).max(axis=1)
    out = np.flatnonzero(sup >= m)
    if out.size == 0:
        raise NeverExitsBox(f"curve stays inside the box of half-side {m}")
    j = int(out[0])
    if j == 0:
        return 0.0, 0, 0.0
    p0, p1 = curve.positions[j - 1], curve.positions[j]
    w = 1.0
    for a in range(3):
        dp = p1[a] - p0[a]
        if dp == 0:
            continue
        for side in (m, -m):
            c = (side - p0[a]) / dp
            if 0.0 <= c <= w:
                q = p0 + c * (p1 - p0)
                if np.abs(q).max() >= m * (1 - 1e-15):
                    w = c
    t0, t1 = curve.times[j - 1], curve.times[j]
    tau = t1 if w == 1.0 else t0 + w * (t1 - t0)
    return float(tau), j - 1, float(w)


def truncate_at_box_exit(curve: ParamCurve, m: float) -> tuple[ParamCurve, float]:
    """Curve stopped at its first exit from the open box of half-side m, and that exit time."""
    tau, j, w = box_exit_time(curve, m)
    if tau == 0.0:
        return ParamCurve(np.zeros(1), curve.positions[:1], curve.mesh, curve.beta), 0.0
    if w == 1.0:
        return ParamCurve(curve.times[:j + 2], curve.positions[:j + 2], curve.mesh, curve.beta), tau
    p0, p1 = curve.positions[j], curve.positions[j + 1]
    end = p0 + w * (p1 - p0)
    if tau <= curve.times[j]:
        return ParamCurve(curve.times[:j + 1], curve.positions[:j + 1], curve.mesh, curve.beta), float(curve.times[j])
    times = np.append(curve.times[:j + 1], tau)
    pos = np.vstack([curve.positions[:j + 1], end])
    return ParamCurve(times, pos, curve.mesh, curve.beta), tau


def exit_time_increment(curve: ParamCurve, r: float, delta: float) -> float:
    """t_{r + delta} - t_r for first exits from the open boxes of half-sides r and r + delta."""
    if not delta >= 0:
        raise BadDelta("delta must be nonnegative")
    t_r = box_exit_time(curve, r)[0]
    t_rd = box_exit_time(curve, r + delta)[0]
    return t_rd - t_r


# ---------------------------------------------------------------------------
# chi
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChiValue:
    """Partial sum up to level K; the true value lies in [value, value + tail]."""

    value: float
    tail: float
    K: int = field(default=8)


def _max_gap(a: ParamCurve, b: ParamCurve, k: float) -> float:
    """max over t in [0, k] of |a(t) - b(t)|; exact on the merged breakpoint grid."""
    t = np.concatenate([a.times[a.times <= k], b.times[b.times <= k], [0.0, k]])
    t = np.unique(t)
    d = a(t) - b(t)
    return float(np.sqrt((d * d).sum(axis=1)).max())


def chi_time(a: ParamCurve, b: ParamCurve, K: int = 8) -> ChiValue:
    """sum_{k <= K} 2^-k max_{0 <= t <= k} min(|a(t) - b(t)|, 1), with tail 2^-K."""
    if a.duration < K or b.duration < K:
        raise CurveTooShort(f"curves must be defined on [0, {K}]")
    total = 0.0
    for k in range(1, K + 1):
        total += 2.0 ** -k * min(_max_gap(a, b, float(k)), 1.0)
    return ChiValue(total, 2.0 ** -K, K)


def _box_truncations(curve: ParamCurve, K: int) -> list:
    """Truncations at the boxes of half-side 1..K, cached on the (immutable) curve."""
    cache = curve.__dict__.setdefault("_box_truncations", {})
    if K not in cache:
        cache[K] = [truncate_at_box_exit(curve, m)[0] for m in range(1, K + 1)]
    return cache[K]


def chi_box(a: ParamCurve, b: ParamCurve, K: int = 8) -> ChiValue:
    """sum_{m <= K} 2^-m min(rho(a^(m), b^(m)), 1), with tail 2^-K; a^(m) is a stopped
    at its first exit from the open box of half-side m."""
    ta, tb = _box_truncations(a, K), _box_truncations(b, K)
    total = 0.0
    for m in range(1, K + 1):
        total += 2.0 ** -m * min(rho_distance(ta[m - 1], tb[m - 1]), 1.0)
    return ChiValue(total, 2.0 ** -K, K)


# ---------------------------------------------------------------------------
# modulus of continuity and ensemble summaries
# ---------------------------------------------------------------------------

def modulus_of_continuity(curve: ParamCurve, delta: float) -> float:
    """sup over |t - s| <= delta of |curve(t) - curve(s)|.

    Over each cell of breakpoint pairs the difference is affine in (s, t), so
    the supremum sits at breakpoint pairs or at window edges t_i +- delta.
    """
    if not 0 < delta <= curve.duration:
        raise BadDelta("need 0 < delta <= duration")
    return float(K.modulus_scan(curve.times, curve.positions, float(delta)))


def binned_tv(a, b, edges) -> float:
    """Total variation between the binned empirical laws of two 1-d samples.

    A surrogate for comparing curve ensembles through scalar summaries such as
    exit times; values outside the edges fall into the end bins.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    edges = np.asarray(edges, dtype=float)
    nb = edges.size + 1
    ha = np.bincount(np.searchsorted(edges, a, side="right"), minlength=nb) / a.size
    hb = np.bincount(np.searchsorted(edges, b, side="right"), minlength=nb) / b.size
    return 0.5 * float(np.abs(ha - hb).sum())
