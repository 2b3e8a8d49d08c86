"""Acceptance checks, one function per criterion.

Each returns a ``Check`` with the measured quantities; nothing here adjusts a
threshold after seeing data. ``selftest`` runs the exact-oracle subset.
"""
from __future__ import annotations

import filecmp
import json
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .laplacian import (
    GreenTable,
    conditional_law,
    continuation_law,
    empirical_law,
    exact_lerw_law,
    lerw_prefix_samples,
    total_variation,
)
from .lattice import NEIGHBORS, Ball, Box, LatticePath, RngStream
from .loop_erasure import loop_erase, loop_erase_lep
from .runner import ExperimentConfig, run


@dataclass
class Check:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0
    budget: float = float("inf")

    def line(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        info = ", ".join(f"{k}={_short(v)}" for k, v in self.details.items())
        return f"[{state}] criterion {self.number:2d} {self.name}: {info} ({self.seconds:.1f}s / {self.budget:.0f}s)"


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_short(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


def _timed(number, name, budget):
    def deco(fn):
        def wrapper(*args, **kwargs):
            t0 = time.perf_counter()
            passed, details = fn(*args, **kwargs)
            dt = time.perf_counter() - t0
            return Check(number, name, bool(passed and dt < budget), details, dt, budget)
        wrapper.__name__ = fn.__name__
        wrapper.__doc__ = fn.__doc__
        return wrapper
    return deco


def _run(experiment: str, workdir, seed: int = 1, workers: int = 1, **params) -> dict:
    out = Path(workdir) / f"{experiment}-s{seed}-w{workers}"
    run(ExperimentConfig(experiment, params, seed, workers, str(out)))
    return json.loads((out / "summary.json").read_text())


# ---------------------------------------------------------------------------

@_timed(1, "loop erasure vs last-visit recursion", 30)
def loop_erasure_exact(paths: int = 10_000, max_len: int = 10_000, seed: int = 1):
    """Forward eraser against the last-visit oracle on random walk paths."""
    gen = np.random.default_rng(seed)
    mismatch = not_idempotent = bad_ends = 0
    for _ in range(paths):
        k = int(gen.integers(0, max_len + 1))
        steps = NEIGHBORS[gen.integers(0, 6, size=k)]
        w = LatticePath(np.vstack([np.zeros((1, 3), dtype=np.int64), np.cumsum(steps, axis=0)]))
        a = loop_erase(w)
        b = loop_erase_lep(w)
        mismatch += a != b
        not_idempotent += loop_erase(a) != a
        bad_ends += a.start != w.start or a.end != w.end
    return mismatch == not_idempotent == bad_ends == 0, {
        "paths": paths, "mismatches": mismatch, "not_idempotent": not_idempotent,
        "endpoint_errors": bad_ends}


@_timed(2, "Laplacian walk law vs Monte Carlo", 300)
def laplacian_ground_truth(samples: int = 1_000_000, horizon: int = 3, seed: int = 2):
    """Exact horizon-3 prefix law on the wired 5x5x5 box against loop-erased walks."""
    box = Box((0, 0, 0), (4, 4, 4))
    start = (2, 2, 2)
    exact = exact_lerw_law(box, start, horizon)
    emp = empirical_law(lerw_prefix_samples(box, start, horizon, samples, RngStream(seed, 0)))
    tv = total_variation(exact, emp)
    return tv <= 0.01, {"tv": tv, "samples": samples, "prefixes": len(exact),
                        "exact_mass": sum(exact.values())}


@_timed(3, "domain Markov property", 60)
def domain_markov(horizon: int = 4):
    """Conditional law read off the joint Laplacian-walk law equals the law of
    loop-erased conditioned walks from the tip, on 4x4x4 boxes."""
    worst = 0.0
    cases = 0
    for lo in ((0, 0, 0), (-1, -2, 0)):
        box = Box(lo, tuple(c + 3 for c in lo))
        starts = [tuple(c + 1 for c in lo), tuple(c + 2 for c in lo)]
        for start in starts:
            law = exact_lerw_law(box, start, horizon)
            prefixes = {key[:j] for key in law for j in (2, 3) if len(key) > j
                        and all(box.contains(np.array(key[:j])))}
            for pre in sorted(prefixes):
                cond = conditional_law(law, pre)
                rest = horizon - (len(pre) - 1)
                cont = continuation_law(box, pre, rest)
                worst = max(worst, total_variation(cond, cont))
                cases += 1
    return worst <= 1e-9, {"max_tv": worst, "prefixes": cases}


@_timed(4, "Wilson uniformity", 120)
def wilson_uniformity(workdir, samples: int = 100_000, seed: int = 4):
    s = _run("ust-uniformity", workdir, seed, samples=samples, orderings=2)
    ok = min(s["gof_pvalues"]) >= 1e-3 and s["homogeneity_pvalue"] >= 1e-3
    return ok, {"trees": s["trees"], "gof_p": s["gof_pvalues"], "homogeneity_p": s["homogeneity_pvalue"]}


@_timed(5, "Green's function", 180)
def green_check(workdir, seed: int = 5):
    s = _run("green-check", workdir, seed, radius=8, walks=1_000_000)
    ok = (abs(s["z"]) <= 3 and s["rel_err"] <= 0.02 and s["symmetry_err"] <= 1e-9
          and s["resolvent_err"] <= 1e-9)
    return ok, {k: s[k] for k in ("exact", "mc", "z", "rel_err", "symmetry_err", "resolvent_err")}


@_timed(6, "growth exponent", 1800)
def growth_exponent(workdir, seed: int = 6):
    L = _run("beta-length", workdir, seed, levels=[5, 6, 7, 8, 9], trials=2000)
    E = _run("beta-escape", workdir, seed, exponents=[4, 5, 6, 7], trials=10000)
    gap = abs(E["beta"] - L["beta"])
    ok = L["in_range"] and L["slope_stderr"] <= 0.03 and gap <= 0.1
    return ok, {"beta_length": L["beta"], "stderr": L["slope_stderr"], "beta_escape": E["beta"],
                "escape_stderr": E["slope_stderr"], "gap": gap}


@_timed(7, "exponential tails", 600)
def tails(workdir, seed: int = 7):
    s = _run("tails", workdir, seed, n=7, trials=10000, b=[1.5, 2.0, 3.0, 4.0])
    ok = s["exceedance_at_max_b"] <= 0.05 and s["nonincreasing"]
    return ok, {"exceedance": s["exceedance"], "nonincreasing": s["nonincreasing"]}


@_timed(8, "L2 approximation trend", 1200)
def l2_trend(workdir, seed: int = 8, trials: int = 1000, replications: int = 20):
    s = _run("l2-approx", workdir, seed, levels=[8], ks=[1, 2], trials=trials,
             replications=replications)
    return s["fraction_decreasing"] >= 0.7, {"fraction_decreasing": s["fraction_decreasing"],
                                             "replications": replications}


@_timed(9, "quasi-loop prevalence", 600)
def quasi_loop_decay(workdir, seed: int = 9):
    s = _run("quasi-loops", workdir, seed, n=7, eps=[0.4, 0.2, 0.1], trials=1000)
    return s["nonincreasing"], {"prevalence": s["prevalence"], "all_zero": s["all_zero"]}


@_timed(10, "metric axioms", 60)
def metric_axioms(workdir, seed: int = 10):
    s = _run("metric-axioms", workdir, seed, trials=1000)
    return s["passed"], {"passed": s["passed"]}


@_timed(11, "exit-time increments", 600)
def exit_increments(workdir, seed: int = 11):
    s = _run("exit-increments", workdir, seed, n=7, r=0.5, deltas=[0.1, 0.05, 0.025], trials=1000)
    return s["decreasing"], {"p_exceed": s["p_exceed"]}


@_timed(12, "ILERW truncation robustness", 900)
def ilerw_truncation(workdir, seed: int = 12):
    s = _run("ilerw-trunc", workdir, seed, ms=[8.0, 16.0], trials=10000)
    return s["max_tv"] <= 0.02, {"tv": s["max_tv"], "face_p": s["face_pvalues"]}


DETERMINISM_CONFIGS = [
    ("beta-length", {"levels": [4, 5, 6], "trials": 40}),
    ("quasi-loops", {"n": 5, "trials": 20}),
    ("ust-uniformity", {"samples": 300}),
    ("metric-axioms", {"trials": 10}),
    ("ilerw-trunc", {"trials": 40, "n": 3}),
]


@_timed(13, "determinism across runs and workers", float("inf"))
def determinism(workdir, seed: int = 13, configs=None):
    configs = DETERMINISM_CONFIGS if configs is None else configs
    bad = []
    for name, params in configs:
        dirs = []
        for tag, workers in (("a", 1), ("b", 1), ("c", 8)):
            d = Path(workdir) / f"det-{name}-{tag}"
            run(ExperimentConfig(name, params, seed, workers, str(d)))
            dirs.append(d)
        for f in ("trials.csv", "results.csv", "summary.json"):
            for d in dirs[1:]:
                if not filecmp.cmp(dirs[0] / f, d / f, shallow=False):
                    bad.append(f"{name}/{f}")
    return not bad, {"experiments": len(configs), "differences": bad or "none"}


def all_checks(workdir) -> list:
    return [
        lambda: loop_erasure_exact(),
        lambda: laplacian_ground_truth(),
        lambda: domain_markov(),
        lambda: wilson_uniformity(workdir),
        lambda: green_check(workdir),
        lambda: growth_exponent(workdir),
        lambda: tails(workdir),
        lambda: l2_trend(workdir),
        lambda: quasi_loop_decay(workdir),
        lambda: metric_axioms(workdir),
        lambda: exit_increments(workdir),
        lambda: ilerw_truncation(workdir),
        lambda: determinism(workdir),
    ]


# ---------------------------------------------------------------------------
# selftest: exact oracles only
# ---------------------------------------------------------------------------

@_timed(0, "green table symmetry and resolvent", 60)
def green_exact(radius: int = 5):
    t = GreenTable(Ball((0, 0, 0), radius))
    G = t.matrix()
    sym = float(np.abs(G - G.T).max())
    res = float(np.abs(t.operator @ G - np.eye(G.shape[0])).max())
    return sym <= 1e-9 and res <= 1e-9, {"symmetry_err": sym, "resolvent_err": res}


def selftest(out=print) -> bool:
    """Exact-oracle checks: loop erasure, domain Markov property, Green identities,
    metric axioms, determinism. Returns True when all pass."""
    with tempfile.TemporaryDirectory() as tmp:
        checks = [
            loop_erasure_exact(paths=2000, max_len=5000),
            domain_markov(horizon=3),
            green_exact(),
            metric_axioms(tmp),
            determinism(tmp, configs=DETERMINISM_CONFIGS[:3]),
        ]
    for c in checks:
        out(c.line())
    return all(c.passed for c in checks)
