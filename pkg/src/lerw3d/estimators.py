"""Cross-trial estimators: growth exponent, escape scaling, tails, L^2 trends,
the Green's function constant and truncated infinite LERW.

Trial i at every level uses ``RngStream(seed, i)``, so levels are paired.
"""
from __future__ import annotations

import math
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats

from . import _kernels as K
from .curves import ParamCurve, box_exit_time, rescale_time, truncate_at_box_exit
from .errors import InsufficientLevels
from .laplacian import GreenTable, IterativeGreen
from .lattice import Ball, RngStream, as_points, generator, unit_ball
from .loop_erasure import sample_lerw
from .observables import (
    BoxPartition,
    ReferenceBox,
    alpha0_estimate,
    box_stats,
    escape_event_sample,
    fine_exponent,
    l2_discrepancy,
)
from .records import EstimateRecord, ScalingFit

DEFAULT_BETA = 1.62


# ---------------------------------------------------------------------------
# growth exponent from lengths
# ---------------------------------------------------------------------------

def lerw_length(n: int, rng) -> int:
    """M_n for one LERW from 0 to the boundary of the unit ball at mesh n."""
    dint, mask = unit_ball(n).kernel_spec()
    pts, _, _ = K.lerw_walk(0, 0, 0, dint, mask, -1, generator(rng))
    return pts.shape[0] - 1


def level_means(lengths: Mapping[int, Sequence[float]]) -> list[dict]:
    rows = []
    for n in sorted(lengths):
        x = np.asarray(lengths[n], dtype=float)
        rec = EstimateRecord.from_samples(x)
        rows.append({"n": n, "mean": rec.value, "stderr": rec.stderr, "trials": rec.trials,
                     "log2_mean": math.log2(rec.value),
                     "log2_stderr": rec.stderr / (rec.value * math.log(2))})
    return rows


def fit_levels(rows: list[dict], x_key: str = "n") -> ScalingFit:
    if len(rows) < 3:
        raise InsufficientLevels("need at least 3 levels")
    return ScalingFit.fit([r[x_key] for r in rows], [r["log2_mean"] for r in rows],
                          [r["log2_stderr"] for r in rows])


def beta_from_length(levels: Sequence[int], trials: int, seed: int = 0,
                     sampler: Callable[[int, object], float] | None = None) -> ScalingFit:
    """Slope of log2 E(M_n) against n; trial i at each level uses stream i."""
    if len(levels) < 3:
        raise InsufficientLevels("need at least 3 mesh levels")
    sampler = sampler or lerw_length
    lengths = {n: [sampler(n, RngStream(seed, i)) for i in range(trials)] for n in levels}
    return fit_levels(level_means(lengths))


# ---------------------------------------------------------------------------
# escape probabilities
# ---------------------------------------------------------------------------

def escape_rows(hits: Mapping[int, Sequence[int]]) -> list[dict]:
    """Per-radius proportions; keys are the exponents j of the radii 2^j."""
    rows = []
    for j in sorted(hits):
        x = np.asarray(hits[j])
        rec = EstimateRecord.proportion(int(x.sum()), x.size)
        if rec.value <= 0:
            raise ValueError(f"no escapes at radius 2^{j}")
        rows.append({"j": j, "mean": rec.value, "stderr": rec.stderr, "trials": rec.trials,
                     "log2_mean": math.log2(rec.value),
                     "log2_stderr": rec.stderr / (rec.value * math.log(2))})
    return rows


def beta_from_escape(exponents: Sequence[int], trials: int, seed: int = 0, m: int = 0) -> ScalingFit:
    """Slope of log2 Es(2^j) against j; the implied exponent is 2 + slope."""
    if len(exponents) < 3:
        raise InsufficientLevels("need at least 3 radii")
    hits = {j: [escape_event_sample(m, 2 ** j, RngStream(seed, i)) for i in range(trials)]
            for j in exponents}
    fit = fit_levels(escape_rows(hits), "j")
    fit.meta["beta"] = 2.0 + fit.slope
    return fit


def implied_beta_from_escape(fit: ScalingFit) -> float:
    return 2.0 + fit.slope


# ---------------------------------------------------------------------------
# tails
# ---------------------------------------------------------------------------

def tail_profile(lengths: Sequence[float], b_grid: Sequence[float], confidence: float = 0.95) -> list[dict]:
    """Empirical P(M / mean(M) outside [1/b, b]) with Wilson score intervals."""
    M = np.asarray(lengths, dtype=float)
    if M.size < 100:
        raise ValueError("tail_profile needs at least 100 trials")
    ratio = M / M.mean()
    rows = []
    for b in b_grid:
        k = int(np.count_nonzero((ratio < 1.0 / b) | (ratio > b)))
        ci = stats.binomtest(k, M.size).proportion_ci(confidence, method="wilson")
        rows.append({"b": float(b), "exceedance": k / M.size, "lo": ci.low, "hi": ci.high,
                     "trials": int(M.size)})
    return rows


# ---------------------------------------------------------------------------
# L^2 approximation
# ---------------------------------------------------------------------------

def l2_sample(path, k: int, q: int | None = None, center=(0.5, 0.0, 0.0)) -> dict:
    """X, Y over the partition of the level-k cube and pooled reference counts."""
    n = path.mesh
    q = fine_exponent(k, n) if q is None else q
    st = box_stats(path, BoxPartition.for_level(k, n, center, q))
    x0, y0 = ReferenceBox(tuple(center), 2.0 ** -q).pooled_stats(path)
    return {"X": st.X, "Y": st.Y, "X0": x0, "Y0": y0}


def l2_ratio(samples: Sequence[dict]) -> tuple[float, float]:
    """(discrepancy ratio, alpha0) from ``l2_sample`` records of one cell."""
    a = alpha0_estimate([(s["X0"], s["Y0"]) for s in samples], ReferenceBox()).value
    X = [s["X"] for s in samples]
    Y = [s["Y"] for s in samples]
    return l2_discrepancy(X, Y, a), a


def l2_trend(levels: Sequence[int], ks: Sequence[int], trials: int, seed: int = 0) -> dict:
    """Discrepancy ratio per (n, k) and monotone-trend flags along k and along n."""
    table = {}
    for n in levels:
        paths = [sample_lerw(unit_ball(n), RngStream(seed, i)) for i in range(trials)]
        for k in ks:
            table[(n, k)] = l2_ratio([l2_sample(p, k) for p in paths])[0]
    along_k = {n: all(table[(n, a)] > table[(n, b)] for a, b in zip(ks, ks[1:])) for n in levels}
    along_n = {k: all(table[(a, k)] > table[(b, k)] for a, b in zip(levels, levels[1:])) for k in ks}
    return {"ratio": table, "decreasing_in_k": along_k, "decreasing_in_n": along_n}


# ---------------------------------------------------------------------------
# Green's function constant
# ---------------------------------------------------------------------------

def fit_green_constant(radii: Sequence[float], values: Sequence[float], outer: float | None = None) -> EstimateRecord:
    """Intercept of G(x)|x| regressed on 1/|x|.

    With ``outer`` (the radius of the ball the values came from) each value is
    first divided by 1 - |x| / outer, which removes the leading boundary
    correction G_ball(0, x) ~ a (1/|x| - 1/outer).
    """
    r = np.asarray(radii, dtype=float)
    g = np.asarray(values, dtype=float)
    y = g * r
    if outer is not None:
        y = y / (1.0 - r / outer)
    res = stats.linregress(1.0 / r, y)
    return EstimateRecord(float(res.intercept), float(res.intercept_stderr), int(r.size),
                          {"slope": float(res.slope), "radii": r.tolist()})


def green_constant_fit(radii: Sequence[int], outer_factor: int = 4, cap: int = 8000) -> EstimateRecord:
    """Estimate a in G(x) = a/|x| + O(|x|^-2) from a ball of radius outer_factor * max(radii).

    G(0, x) is read off one column (the one at 0) at the axis points (r, 0, 0)
    and averaged over the six axis directions.
    """
    radii = [int(r) for r in radii]
    if min(radii) < 8:
        raise ValueError("radii must be at least 8 lattice units")
    R = outer_factor * max(radii)
    ball = Ball((0, 0, 0), R)
    table = GreenTable(ball, cap) if ball.size() <= cap else IterativeGreen(ball)
    col = table.column((0, 0, 0))
    vals = []
    for r in radii:
        pts = as_points([(r, 0, 0), (-r, 0, 0), (0, r, 0), (0, -r, 0), (0, 0, r), (0, 0, -r)])
        vals.append(float(col[table.index.find(pts)].mean()))
    rec = fit_green_constant(radii, vals, outer=float(R))
    rec.meta.update({"outer": R, "values": vals})
    return rec


def green_visits_mc(domain, targets, walks: int, rng, start=(0, 0, 0)) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo G_A(start, y) for each target y: (means, standard errors)."""
    tp = as_points(targets)
    tkeys, tvals = K.build_index(tp)
    dint, mask = domain.kernel_spec()
    s = as_points(start)[0]
    sums, sq = K.visit_counts(s[0], s[1], s[2], dint, mask, tkeys, tvals, tp.shape[0], walks,
                              generator(rng))
    mean = sums / walks
    var = sq / walks - mean ** 2
    return mean, np.sqrt(np.maximum(var, 0.0) * walks / max(walks - 1, 1) / walks)


# ---------------------------------------------------------------------------
# truncated infinite LERW
# ---------------------------------------------------------------------------

def ilerw_truncated_sample(r: float, n: int, rng, m: float = 8.0, beta: float = DEFAULT_BETA) -> ParamCurve:
    """LERW from 0 to the sphere of radius m r at mesh n, time-rescaled with beta and
    stopped at its first exit from the open box of half-side r."""
    path = sample_lerw(Ball((0, 0, 0), m * r, n), rng)
    curve, _ = truncate_at_box_exit(rescale_time(path, beta), r)
    return curve


def exit_face(curve: ParamCurve, r: float) -> int:
    """Face of the box of half-side r containing the curve's end: 0..5 for +x, -x, +y, -y, +z, -z."""
    p = curve.positions[-1]
    a = int(np.argmax(np.abs(p)))
    if not math.isclose(abs(p[a]), r, rel_tol=1e-12):
        raise ValueError("curve does not end on the box boundary")
    return 2 * a + (0 if p[a] > 0 else 1)


def exit_increments(path, r: float, deltas: Sequence[float], beta: float = DEFAULT_BETA) -> list[float]:
    """t_{r + delta} - t_r for each delta, on the rescaled curve of ``path``."""
    curve = rescale_time(path, beta)
    t_r = box_exit_time(curve, r)[0]
    return [box_exit_time(curve, r + d)[0] - t_r for d in deltas]
