"""Registered experiments.

Each experiment fixes the stream of every task from its key alone (trial index,
offset by replication or ordering where cells must be independent), so the
runner can schedule tasks in any order.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import stats

from .curves import (
    ParamCurve,
    chi_box,
    chi_time,
    hausdorff_distance,
    rho_distance,
)
from .estimators import (
    DEFAULT_BETA,
    escape_rows,
    exit_face,
    exit_increments,
    fit_levels,
    ilerw_truncated_sample,
    l2_ratio,
    l2_sample,
    lerw_length,
    level_means,
    tail_profile,
)
from .errors import InsufficientLevels
from .laplacian import GreenTable
from .lattice import Ball, ExplicitSet, RngStream, as_points, generator, unit_ball
from .loop_erasure import sample_lerw
from .observables import escape_event_sample, hittability_probe, quasi_loops
from .records import EstimateRecord
from .runner import Experiment, Task, register
from .wilson import WilsonSampler, matrix_tree_count


def _per_trial(p: dict) -> list[Task]:
    return [Task((i,), i) for i in range(p["trials"])]


def _per_level(key: str):
    def tasks(p: dict) -> list[Task]:
        return [Task((v, i), i) for v in p[key] for i in range(p["trials"])]
    return tasks


def _need_levels(key: str, k: int = 3):
    def check(p: dict) -> list[str]:
        return [f"{key}: need at least {k} values"] if len(p[key]) < k else []
    return check


def _wilson_ci(k: int, n: int) -> tuple[float, float]:
    ci = stats.binomtest(k, n).proportion_ci(0.95, method="wilson")
    return float(ci.low), float(ci.high)


def _in_beta_range(b: float) -> bool:
    return 1.0 < b <= 5.0 / 3.0


# ---------------------------------------------------------------------------
# beta-length
# ---------------------------------------------------------------------------

def _bl_run(p, task, seed):
    n, i = task.key
    if p["synthetic_beta"] > 0:
        M = int(round(2.0 ** (p["synthetic_beta"] * n)))
    else:
        M = lerw_length(n, RngStream(seed, task.stream))
    return [{"n": n, "trial": i, "M": M}]


def _bl_reduce(p, rows):
    lengths = {n: [r["M"] for r in rows if r["n"] == n] for n in p["levels"]}
    res = level_means(lengths)
    fit = fit_levels(res)
    return res, {"slope": fit.slope, "intercept": fit.intercept, "slope_stderr": fit.slope_stderr,
                 "beta": fit.slope, "in_range": _in_beta_range(fit.slope)}


register(Experiment(
    "beta-length",
    {"levels": [5, 6, 7, 8, 9], "trials": 2000, "synthetic_beta": 0.0},
    _per_level("levels"), _bl_run, _bl_reduce, ("n", "log2_mean", "log2_stderr"),
    _need_levels("levels")))


# ---------------------------------------------------------------------------
# beta-escape
# ---------------------------------------------------------------------------

def _be_run(p, task, seed):
    j, i = task.key
    hit = escape_event_sample(p["m"], 2 ** j, RngStream(seed, task.stream))
    return [{"j": j, "trial": i, "escape": hit}]


def _be_reduce(p, rows):
    hits = {j: [r["escape"] for r in rows if r["j"] == j] for j in p["exponents"]}
    res = escape_rows(hits)
    fit = fit_levels(res, "j")
    beta = 2.0 + fit.slope
    return res, {"slope": fit.slope, "intercept": fit.intercept, "slope_stderr": fit.slope_stderr,
                 "beta": beta, "in_range": _in_beta_range(beta)}


register(Experiment(
    "beta-escape",
    {"exponents": [4, 5, 6, 7], "trials": 10000, "m": 0},
    _per_level("exponents"), _be_run, _be_reduce, ("j", "log2_mean", "log2_stderr"),
    _need_levels("exponents")))


# ---------------------------------------------------------------------------
# tails
# ---------------------------------------------------------------------------

def _tails_run(p, task, seed):
    return [{"trial": task.key[0], "M": lerw_length(p["n"], RngStream(seed, task.stream))}]


def _tails_reduce(p, rows):
    res = tail_profile([r["M"] for r in rows], sorted(p["b"]))
    ex = [r["exceedance"] for r in res]
    return res, {"exceedance": {str(r["b"]): r["exceedance"] for r in res},
                 "nonincreasing": all(a >= b for a, b in zip(ex, ex[1:])),
                 "max_b": res[-1]["b"], "exceedance_at_max_b": ex[-1]}


register(Experiment(
    "tails", {"n": 7, "trials": 10000, "b": [1.5, 2.0, 3.0, 4.0]},
    _per_trial, _tails_run, _tails_reduce, ("b", "exceedance", "hi"),
    lambda p: ["trials must be ≥ 100"] if p["trials"] < 100 else []))


# ---------------------------------------------------------------------------
# l2-approx
# ---------------------------------------------------------------------------

def _l2_tasks(p):
    T = p["trials"]
    return [Task((r, n, i), r * T + i) for r in range(p["replications"])
            for n in p["levels"] for i in range(T)]


def _l2_run(p, task, seed):
    rep, n, i = task.key
    path = sample_lerw(unit_ball(n), RngStream(seed, task.stream))
    row = {"rep": rep, "n": n, "trial": i}
    for k in p["ks"]:
        s = l2_sample(path, k, center=tuple(p["x0"]))
        row.update({f"{c}_k{k}": s[c] for c in ("X", "Y", "X0", "Y0")})
    return [row]


def _l2_reduce(p, rows):
    res = []
    decreasing = []
    for rep in range(p["replications"]):
        for n in p["levels"]:
            cell = [r for r in rows if r["rep"] == rep and r["n"] == n]
            ratios = []
            for k in p["ks"]:
                smp = [{c: r[f"{c}_k{k}"] for c in ("X", "Y", "X0", "Y0")} for r in cell]
                ratio, a0 = l2_ratio(smp)
                ratios.append(ratio)
                res.append({"rep": rep, "n": n, "k": k, "ratio": ratio, "alpha0": a0,
                            "trials": len(cell)})
            decreasing.append(all(a > b for a, b in zip(ratios, ratios[1:])))
    frac = float(np.mean(decreasing))
    return res, {"fraction_decreasing": frac, "decreasing": decreasing}


register(Experiment(
    "l2-approx",
    {"levels": [8], "ks": [1, 2], "trials": 1000, "replications": 20, "x0": [0.5, 0.0, 0.0]},
    _l2_tasks, _l2_run, _l2_reduce, ("k", "ratio", "")))


# ---------------------------------------------------------------------------
# quasi-loops
# ---------------------------------------------------------------------------

def _ql_run(p, task, seed):
    i = task.key[0]
    path = sample_lerw(unit_ball(p["n"]), RngStream(seed, task.stream))
    out = []
    for eps in p["eps"]:
        found = quasi_loops(eps ** p["M"], math.sqrt(eps), path, first_only=True)
        out.append({"trial": i, "eps": eps, "quasi_loop": int(found.shape[0] > 0)})
    return out


def _ql_reduce(p, rows):
    res = []
    for eps in sorted(p["eps"], reverse=True):
        x = [r["quasi_loop"] for r in rows if r["eps"] == eps]
        rec = EstimateRecord.proportion(sum(x), len(x))
        lo, hi = _wilson_ci(sum(x), len(x))
        res.append({"eps": eps, "prevalence": rec.value, "stderr": rec.stderr, "lo": lo, "hi": hi,
                    "trials": len(x)})
    prev = [r["prevalence"] for r in res]
    return res, {"prevalence": {str(r["eps"]): r["prevalence"] for r in res},
                 "nonincreasing": all(a >= b for a, b in zip(prev, prev[1:])),
                 "all_zero": not any(prev)}


register(Experiment(
    "quasi-loops", {"n": 7, "eps": [0.4, 0.2, 0.1], "M": 3.0, "trials": 1000},
    _per_trial, _ql_run, _ql_reduce, ("eps", "prevalence", "stderr"),
    lambda p: [] if all(0 < e < 1 for e in p["eps"]) else ["eps: values must lie in (0, 1)"]))


# ---------------------------------------------------------------------------
# hittability
# ---------------------------------------------------------------------------

def _hit_run(p, task, seed):
    i = task.key[0]
    gen = generator(RngStream(seed, task.stream))
    path = sample_lerw(unit_ball(p["n"]), gen)
    out = []
    for eps in p["eps"]:
        pr = hittability_probe(path, eps, p["probes"], gen, p["max_candidates"])
        out.append({"trial": i, "eps": eps, "worst": pr.worst, "tested": pr.tested,
                    "candidates": pr.candidates})
    return out


def _hit_reduce(p, rows):
    res = []
    for eps in sorted(p["eps"], reverse=True):
        w = np.array([r["worst"] for r in rows if r["eps"] == eps])
        res.append({"eps": eps, "median_worst": float(np.median(w)), "mean_worst": float(w.mean()),
                    "stderr": float(w.std(ddof=1) / math.sqrt(w.size)) if w.size > 1 else 0.0,
                    "trials": int(w.size)})
    med = [r["median_worst"] for r in res]
    return res, {"median_worst": {str(r["eps"]): r["median_worst"] for r in res},
                 "decreasing": all(a > b for a, b in zip(med, med[1:]))}


register(Experiment(
    "hittability",
    {"n": 7, "eps": [0.2, 0.1, 0.05], "trials": 50, "probes": 100, "max_candidates": 32},
    _per_trial, _hit_run, _hit_reduce, ("eps", "median_worst", "stderr"),
    lambda p: [] if all(0 < e < 1 for e in p["eps"]) else ["eps: values must lie in (0, 1)"]))


# ---------------------------------------------------------------------------
# one-point
# ---------------------------------------------------------------------------

def _point_images(p) -> np.ndarray:
    x0 = np.asarray(p["x0"], dtype=float)
    if not p["pooled"]:
        return x0[None]
    imgs = set()
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1.0, -1.0), repeat=3):
            imgs.add(tuple(x0[list(perm)] * np.array(signs)))
    return np.array(sorted(imgs))


def _op_run(p, task, seed):
    n, i = task.key
    path = sample_lerw(unit_ball(n), RngStream(seed, task.stream))
    targets = np.rint(_point_images(p) * 2 ** n).astype(np.int64)
    keys = set(map(tuple, path.points.tolist()))
    hits = sum(tuple(t) in keys for t in targets.tolist())
    return [{"n": n, "trial": i, "hits": hits, "images": int(targets.shape[0])}]


def _op_reduce(p, rows):
    res = []
    for n in p["levels"]:
        h = np.array([r["hits"] for r in rows if r["n"] == n], dtype=float)
        m = int(rows[0]["images"])
        rec = EstimateRecord.from_samples(h / m)
        if rec.value <= 0:
            raise ValueError(f"no hits at n = {n}")
        res.append({"n": n, "p": rec.value, "stderr": rec.stderr, "trials": rec.trials,
                    "log2_mean": math.log2(rec.value),
                    "log2_stderr": rec.stderr / (rec.value * math.log(2))})
    summary = {"p": {str(r["n"]): r["p"] for r in res},
               "decreasing": all(a["p"] > b["p"] for a, b in zip(res, res[1:]))}
    try:
        fit = fit_levels(res)
        summary.update({"slope": fit.slope, "slope_stderr": fit.slope_stderr,
                        "implied_beta": 3.0 + fit.slope,
                        "slope_gap": abs(fit.slope + (3.0 - p["beta"]))})
    except InsufficientLevels:
        pass
    return res, summary


register(Experiment(
    "one-point",
    {"levels": [5, 6, 7], "trials": 10000, "x0": [0.5, 0.0, 0.0], "pooled": True,
     "beta": DEFAULT_BETA},
    _per_level("levels"), _op_run, _op_reduce, ("n", "log2_mean", "log2_stderr"),
    _need_levels("levels", 2)))


# ---------------------------------------------------------------------------
# ust-uniformity
# ---------------------------------------------------------------------------

UST_POINTS = ((0, 0, 0), (1, 0, 0))
_SAMPLERS: dict = {}


def _ust_domain():
    return ExplicitSet(as_points(UST_POINTS))


def _ust_orderings() -> list[tuple]:
    return [UST_POINTS, UST_POINTS[::-1]]


def ust_tree_keys(domain=None) -> list[tuple]:
    """All wired spanning trees of a domain with few interior points, by brute force
    over parent choices (keys as in ``WiredTree.key``)."""
    domain = domain or _ust_domain()
    pts = domain.interior_points()
    steps = np.array([(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)])
    inside = {tuple(q) for q in pts.tolist()}
    trees = []
    for choice in itertools.product(range(6), repeat=pts.shape[0]):
        attach = [tuple(int(c) for c in pts[i] + steps[c]) for i, c in enumerate(choice)]
        parent = dict(zip(map(tuple, pts.tolist()), attach))
        ok = True
        for v in parent:
            seen = set()
            while v in inside:
                if v in seen:
                    ok = False
                    break
                seen.add(v)
                v = parent[v]
            if not ok:
                break
        if ok:
            trees.append(tuple(attach))
    return sorted(trees)


def _ust_tasks(p):
    S = p["samples"]
    return [Task((o, i), o * S + i) for o in range(p["orderings"]) for i in range(S)]


def _ust_run(p, task, seed):
    o, i = task.key
    if "index" not in _SAMPLERS:
        _SAMPLERS["index"] = {k: j for j, k in enumerate(ust_tree_keys())}
    if o not in _SAMPLERS:
        _SAMPLERS[o] = WilsonSampler(_ust_domain(), _ust_orderings()[o])
    tree = _SAMPLERS[o].sample(RngStream(seed, task.stream))
    return [{"ordering": o, "trial": i, "tree": _SAMPLERS["index"][tree.key()]}]


def _ust_reduce(p, rows):
    n_trees = matrix_tree_count(_ust_domain())
    if n_trees != len(ust_tree_keys()):
        raise RuntimeError("matrix-tree count disagrees with enumeration")
    counts = np.zeros((p["orderings"], n_trees), dtype=np.int64)
    for r in rows:
        counts[r["ordering"], r["tree"]] += 1
    res = []
    gof = []
    for o in range(p["orderings"]):
        N = int(counts[o].sum())
        gof.append(float(stats.chisquare(counts[o]).pvalue))
        for t in range(n_trees):
            f = counts[o, t] / N
            res.append({"ordering": o, "tree": t, "count": int(counts[o, t]), "freq": f,
                        "stderr": math.sqrt(f * (1 - f) / N), "expected": 1.0 / n_trees})
    homog = float(stats.chi2_contingency(counts)[1]) if p["orderings"] > 1 else 1.0
    return res, {"trees": n_trees, "gof_pvalues": gof, "homogeneity_pvalue": homog,
                 "min_pvalue": min(gof + [homog])}


register(Experiment(
    "ust-uniformity", {"samples": 100000, "orderings": 2},
    _ust_tasks, _ust_run, _ust_reduce, ("tree", "freq", "stderr"),
    lambda p: [] if 1 <= p["orderings"] <= 2 and p["samples"] >= 1
    else ["orderings must be 1 or 2 and samples ≥ 1"]))


# ---------------------------------------------------------------------------
# green-check
# ---------------------------------------------------------------------------

def _gc_tasks(p):
    return [Task((b,), b) for b in range(p["batches"])]


def _gc_batch_sizes(p) -> list[int]:
    q, r = divmod(p["walks"], p["batches"])
    return [q + (b < r) for b in range(p["batches"])]


def _gc_run(p, task, seed):
    from . import _kernels as K

    b = task.key[0]
    w = _gc_batch_sizes(p)[b]
    dint, mask = Ball((0, 0, 0), p["radius"]).kernel_spec()
    tk, tv = K.build_index(np.zeros((1, 3), dtype=np.int64))
    s, q = K.visit_counts(0, 0, 0, dint, mask, tk, tv, 1, w, generator(RngStream(seed, task.stream)))
    return [{"batch": b, "walks": w, "sum": float(s[0]), "sumsq": float(q[0])}]


def _gc_reduce(p, rows):
    W = sum(r["walks"] for r in rows)
    S = sum(r["sum"] for r in rows)
    Q = sum(r["sumsq"] for r in rows)
    mean = S / W
    se = math.sqrt(max(Q / W - mean ** 2, 0.0) / (W - 1))
    table = GreenTable(Ball((0, 0, 0), p["radius"]))
    exact = table((0, 0, 0), (0, 0, 0))
    G = table.matrix()
    sym = float(np.abs(G - G.T).max())
    # resolvent identity: G = I + P G
    resid = float(np.abs(table.operator @ G - np.eye(G.shape[0])).max())
    res = [{"radius": p["radius"], "mc": mean, "stderr": se, "exact": exact, "walks": W}]
    return res, {"exact": exact, "mc": mean, "stderr": se,
                 "z": (mean - exact) / se if se > 0 else float("inf"),
                 "rel_err": abs(mean - exact) / exact,
                 "symmetry_err": sym, "resolvent_err": resid}


register(Experiment(
    "green-check", {"radius": 8, "walks": 1000000, "batches": 100},
    _gc_tasks, _gc_run, _gc_reduce, ("radius", "mc", "stderr"),
    lambda p: [] if p["walks"] >= p["batches"] >= 1 and p["radius"] >= 1
    else ["need walks ≥ batches ≥ 1 and radius ≥ 1"]))


# ---------------------------------------------------------------------------
# metric-axioms
# ---------------------------------------------------------------------------

def random_triple(gen: np.random.Generator, exact: bool, K: int = 8) -> list[ParamCurve]:
    """Three random piecewise-linear curves perturbing a common backbone, each of
    duration > K and leaving the box of half-side K + 1.

    ``exact`` curves have dyadic times and positions (multiples of 1/8); the
    others have real-valued breakpoints. Sharing a backbone keeps the distances
    below the truncation level 1 of the chi metrics.
    """
    m = int(gen.integers(3, 30))
    if exact:
        steps = gen.integers(-4, 5, size=(m, 3)) / 8.0
    else:
        steps = gen.normal(0.0, 0.4, size=(m, 3))
    base = np.vstack([np.zeros(3), np.cumsum(steps, axis=0)])
    # a final excursion guarantees an exit from every box up to half-side K
    end = base[-1].copy()
    axis = int(gen.integers(0, 3))
    end[axis] = (K + 2.0) * (1 if gen.random() < 0.5 else -1)
    base = np.vstack([base, end])
    out = []
    for _ in range(3):
        if exact:
            dt = gen.integers(4, 9, size=m + 1) / 8.0
            noise = gen.integers(-1, 2, size=base.shape) / 8.0
        else:
            dt = gen.uniform(0.5, 1.0, size=m + 1)
            noise = gen.normal(0.0, 0.1, size=base.shape)
        noise[0] = 0.0
        times = np.concatenate([[0.0], np.cumsum(dt)])
        times[-1] = max(times[-1], K + 0.5)
        out.append(ParamCurve(times, base + noise))
    return out


def _metrics(p):
    tol = p["hausdorff_tol"]
    return {
        "rho": rho_distance,
        "chi_time": lambda a, b: chi_time(a, b, p["K"]).value,
        "chi_box": lambda a, b: chi_box(a, b, p["K"]).value,
        "hausdorff_points": lambda a, b: hausdorff_distance(a.positions, b.positions),
        "hausdorff_curves": lambda a, b: hausdorff_distance(a, b, tol),
    }


def _ma_run(p, task, seed):
    i = task.key[0]
    gen = generator(RngStream(seed, task.stream))
    out = []
    for family in ("exact", "interpolated"):
        a, b, c = random_triple(gen, family == "exact", p["K"])
        for name, d in _metrics(p).items():
            ab, ba, bc, ac = d(a, b), d(b, a), d(b, c), d(a, c)
            out.append({"trial": i, "family": family, "metric": name,
                        "symmetry": abs(ab - ba), "triangle": max(0.0, ac - ab - bc),
                        "identity": abs(d(a, a)), "positive": int(ab > 0)})
    return out


def _ma_reduce(p, rows):
    res = []
    ok = True
    for family, tol in (("exact", p["tol_exact"]), ("interpolated", p["tol_interpolated"])):
        for name in _metrics(p):
            sel = [r for r in rows if r["family"] == family and r["metric"] == name]
            worst = {k: max(r[k] for r in sel) for k in ("symmetry", "triangle", "identity")}
            pos = min(r["positive"] for r in sel)
            passed = max(worst.values()) <= tol and pos == 1
            ok &= passed
            res.append({"family": family, "metric": name, "max_symmetry": worst["symmetry"],
                        "max_triangle": worst["triangle"], "max_identity": worst["identity"],
                        "all_positive": pos, "tolerance": tol, "passed": int(passed),
                        "index": len(res)})
    return res, {"passed": bool(ok)}


register(Experiment(
    "metric-axioms",
    {"trials": 1000, "K": 8, "tol_exact": 1e-12, "tol_interpolated": 1e-9, "hausdorff_tol": 1e-10},
    _per_trial, _ma_run, _ma_reduce, ("index", "max_triangle", "")))


# ---------------------------------------------------------------------------
# exit-increments
# ---------------------------------------------------------------------------

def _ei_run(p, task, seed):
    i = task.key[0]
    path = sample_lerw(Ball((0, 0, 0), p["m"], p["n"]), RngStream(seed, task.stream))
    inc = exit_increments(path, p["r"], p["deltas"], p["beta"])
    return [{"trial": i, "delta": d, "increment": v, "exceeds": int(v > p["threshold"])}
            for d, v in zip(p["deltas"], inc)]


def _ei_reduce(p, rows):
    res = []
    for d in sorted(p["deltas"], reverse=True):
        x = [r["exceeds"] for r in rows if r["delta"] == d]
        inc = np.array([r["increment"] for r in rows if r["delta"] == d])
        rec = EstimateRecord.proportion(sum(x), len(x))
        lo, hi = _wilson_ci(sum(x), len(x))
        res.append({"delta": d, "p_exceed": rec.value, "stderr": rec.stderr, "lo": lo, "hi": hi,
                    "mean_increment": float(inc.mean()), "trials": len(x)})
    pr = [r["p_exceed"] for r in res]
    return res, {"p_exceed": {str(r["delta"]): r["p_exceed"] for r in res},
                 "decreasing": all(a > b for a, b in zip(pr, pr[1:]))}


register(Experiment(
    "exit-increments",
    {"n": 7, "r": 0.5, "m": 4.0, "deltas": [0.1, 0.05, 0.025], "threshold": 0.2, "trials": 1000,
     "beta": DEFAULT_BETA},
    _per_trial, _ei_run, _ei_reduce, ("delta", "p_exceed", "stderr"),
    lambda p: [] if p["r"] + max(p["deltas"]) < p["m"] and min(p["deltas"]) > 0
    else ["need 0 < delta and r + delta < m"]))


# ---------------------------------------------------------------------------
# ilerw-trunc
# ---------------------------------------------------------------------------

def _il_run(p, task, seed):
    i = task.key[0]
    out = []
    for m in p["ms"]:
        # the same stream for every m: the ensembles are coupled through the walk
        curve = ilerw_truncated_sample(p["r"], p["n"], RngStream(seed, task.stream), m, p["beta"])
        out.append({"trial": i, "m": m, "duration": curve.duration, "face": exit_face(curve, p["r"])})
    return out


def duration_edges(durations, bins: int) -> np.ndarray:
    """Interior bin edges at the quantiles j / bins of a reference sample."""
    return np.quantile(np.asarray(durations, dtype=float), np.arange(1, bins) / bins)


def _il_reduce(p, rows):
    from .curves import binned_tv

    ms = p["ms"]
    dur = {m: [r["duration"] for r in rows if r["m"] == m] for m in ms}
    face = {m: np.bincount([r["face"] for r in rows if r["m"] == m], minlength=6) for m in ms}
    edges = duration_edges(dur[ms[0]], p["bins"])
    res = []
    for m in ms:
        idx = np.searchsorted(edges, dur[m], side="right")
        h = np.bincount(idx, minlength=p["bins"]) / len(dur[m])
        for b in range(p["bins"]):
            res.append({"m": m, "bin": b, "freq": float(h[b]),
                        "stderr": math.sqrt(h[b] * (1 - h[b]) / len(dur[m]))})
    tv = {str(m): binned_tv(dur[ms[0]], dur[m], edges) for m in ms[1:]}
    face_p = {str(m): float(stats.chisquare(face[m]).pvalue) for m in ms}
    return res, {"tv": tv, "max_tv": max(tv.values()) if tv else 0.0, "face_pvalues": face_p,
                 "edges": edges.tolist(), "mean_duration": {str(m): float(np.mean(dur[m])) for m in ms}}


register(Experiment(
    "ilerw-trunc",
    {"r": 1.0, "n": 4, "ms": [8.0, 16.0], "trials": 10000, "bins": 5, "beta": DEFAULT_BETA},
    _per_trial, _il_run, _il_reduce, ("bin", "freq", "stderr"),
    lambda p: ([] if p["r"] >= 1 and min(p["ms"]) > 5 and p["bins"] >= 2
               else ["need r ≥ 1, every m > 5 and bins ≥ 2"])))
