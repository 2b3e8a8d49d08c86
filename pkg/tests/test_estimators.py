import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from lerw3d.errors import InsufficientLevels
from lerw3d.estimators import (
    beta_from_length,
    escape_rows,
    exit_face,
    fit_green_constant,
    fit_levels,
    green_constant_fit,
    green_visits_mc,
    ilerw_truncated_sample,
    implied_beta_from_escape,
    l2_ratio,
    level_means,
    tail_profile,
)
from lerw3d.laplacian import GreenTable
from lerw3d.lattice import Ball, RngStream
from lerw3d.observables import l2_discrepancy
from lerw3d.records import EstimateRecord, ScalingFit


# --- scaling fits ----------------------------------------------------------------

def test_beta_length_synthetic():
    fit = beta_from_length([4, 6, 8, 10], trials=3, sampler=lambda n, rng: round(2 ** (1.5 * n)))
    assert abs(fit.slope - 1.5) <= 1e-9
    assert fit.slope_stderr <= 1e-9


@given(st.floats(1.01, 1.66), st.lists(st.integers(2, 12), min_size=3, max_size=6, unique=True))
def test_exact_power_laws_recovered(beta, levels):
    rows = level_means({n: [2.0 ** (beta * n)] * 2 for n in levels})
    assert abs(fit_levels(rows).slope - beta) <= 1e-9


def test_escape_synthetic_implied_beta():
    rows = [{"j": j, "log2_mean": -0.4 * j, "log2_stderr": 0.0} for j in (4, 5, 6, 7)]
    fit = fit_levels(rows, "j")
    assert implied_beta_from_escape(fit) == pytest.approx(1.6, abs=1e-12)


def test_escape_rows_from_hits():
    rows = escape_rows({4: [1, 0, 1, 1], 5: [1, 0, 0, 0]})
    assert rows[0]["mean"] == 0.75 and rows[1]["mean"] == 0.25
    with pytest.raises(ValueError):
        escape_rows({6: [0, 0]})


def test_insufficient_levels():
    with pytest.raises(InsufficientLevels):
        beta_from_length([5, 6], trials=2)
    with pytest.raises(InsufficientLevels):
        ScalingFit.fit([1, 2], [1, 2])


def test_records():
    r = EstimateRecord.from_samples([1.0, 2.0, 3.0])
    assert (r.value, r.trials) == (2.0, 3)
    assert r.stderr == pytest.approx(1 / np.sqrt(3))
    with pytest.raises(ValueError):
        EstimateRecord(1.0, -1.0, 1)


# --- tails -----------------------------------------------------------------------

def test_tail_profile_properties():
    x = np.random.default_rng(1).gamma(4.0, size=5000)
    rows = tail_profile(x, [1.0, 1.5, 2.0, 3.0, 4.0])
    assert rows[0]["exceedance"] == pytest.approx(1.0, abs=1e-3)
    ex = [r["exceedance"] for r in rows]
    assert all(a >= b for a, b in zip(ex, ex[1:]))
    assert all(r["lo"] <= r["exceedance"] <= r["hi"] for r in rows)
    with pytest.raises(ValueError):
        tail_profile(x[:50], [2.0])


# --- L2 ----------------------------------------------------------------------------

def _l2_records(seed, a=3.0):
    g = np.random.default_rng(seed)
    Y = g.integers(0, 5, 200)
    Y0 = g.integers(0, 2, 200)
    return [{"X": a * y + g.integers(0, 3), "Y": y, "X0": a * y0, "Y0": y0} for y, y0 in zip(Y, Y0)]


def test_l2_synthetic_zero():
    Y = np.random.default_rng(2).integers(0, 4, 100)
    assert l2_discrepancy(1.7 * Y, Y, 1.7) == 0.0
    recs = [dict(r, X=3.0 * r["Y"]) for r in _l2_records(2)]
    ratio, a = l2_ratio(recs)
    assert a == 3.0 and ratio == 0.0


@given(st.integers(0, 10 ** 6))
def test_l2_ratio_scale_invariant(seed):
    recs = _l2_records(seed)
    doubled = [{k: 2 * v for k, v in r.items()} for r in recs]
    assert l2_ratio(recs)[0] == pytest.approx(l2_ratio(doubled)[0], rel=1e-12)


# --- Green's function constant ----------------------------------------------------

def test_green_constant_synthetic():
    r = np.array([8.0, 12.0, 16.0, 24.0])
    rec = fit_green_constant(r, 1.5 / r)
    assert rec.value == pytest.approx(1.5, abs=1e-12)


def test_green_mc_agrees_with_solve():
    ball = Ball((0, 0, 0), 4)
    targets = [(0, 0, 0), (1, 0, 0), (2, 1, 0), (0, 0, 3)]
    mean, se = green_visits_mc(ball, targets, 40_000, RngStream(3))
    exact = np.array([GreenTable(ball)((0, 0, 0), y) for y in targets])
    assert np.all(np.abs(mean - exact) <= 3 * se)


@pytest.mark.slow
def test_green_constant_refines_with_outer_radius():
    fits = [green_constant_fit([8, 9, 10], outer_factor=f).value for f in (2, 3, 4)]
    assert abs(fits[0] - fits[2]) > abs(fits[1] - fits[2])


# --- truncated infinite LERW -----------------------------------------------------------

def test_ilerw_endpoint_and_faces():
    faces = []
    for i in range(3000):
        c = ilerw_truncated_sample(1.0, 3, RngStream(4, i), m=4.0)
        assert np.abs(c.positions[-1]).max() == pytest.approx(1.0, abs=1e-12)
        assert np.abs(c.positions[:-1]).max() < 1.0
        faces.append(exit_face(c, 1.0))
    counts = np.bincount(faces, minlength=6)
    assert stats.chisquare(counts).pvalue >= 1e-3
