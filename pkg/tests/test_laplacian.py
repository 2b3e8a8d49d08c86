import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lerw3d.errors import DomainTooLarge, PreconditionViolated
from lerw3d.laplacian import (
    GreenTable,
    conditional_law,
    continuation_law,
    empirical_law,
    exact_lerw_law,
    green_ratio_check,
    green_table,
    laplacian_step,
    lerw_prefix_samples,
    solve_dirichlet,
    total_variation,
)
from lerw3d.lattice import NEIGHBORS, Ball, Box, ExplicitSet, RngStream, SimplePath


# --- independent oracles -----------------------------------------------------

def gauss_seidel(interior, zero, one, sweeps=4000, tol=1e-13):
    """Plain dict-based Gauss-Seidel for the same Dirichlet problem."""
    zero, one = set(zero), set(one)
    free = [p for p in interior if p not in zero and p not in one]
    f = {p: 0.0 for p in free}
    f.update({p: 0.0 for p in zero})
    f.update({p: 1.0 for p in one})
    for _ in range(sweeps):
        delta = 0.0
        for p in free:
            v = sum(f[tuple(np.add(p, d))] for d in NEIGHBORS.tolist()) / 6.0
            delta = max(delta, abs(v - f[p]))
            f[p] = v
        if delta < tol:
            break
    return f


def dense_green(points):
    """(I - P)^{-1} for the walk killed off ``points``, built entry by entry."""
    pts = [tuple(p) for p in points]
    where = {p: i for i, p in enumerate(pts)}
    P = np.zeros((len(pts), len(pts)))
    for i, p in enumerate(pts):
        for d in NEIGHBORS.tolist():
            j = where.get(tuple(np.add(p, d)))
            if j is not None:
                P[i, j] += 1 / 6
    return np.linalg.inv(np.eye(len(pts)) - P), P


small_sets = st.sets(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2)),
                     min_size=1, max_size=30)


# --- Dirichlet ---------------------------------------------------------------

def test_dirichlet_single_interior_point():
    ball = Ball((0, 0, 0), 1)
    assert ball.interior_points().tolist() == [[0, 0, 0]]
    f = solve_dirichlet(ball, [(0, 0, 0)], ball.outer_boundary())
    assert f[(0, 0, 0)] == 0.0
    assert all(f[tuple(p)] == 1.0 for p in ball.outer_boundary().tolist())


def test_dirichlet_symmetric_neighbours():
    ball = Ball((0, 0, 0), 4)
    f = solve_dirichlet(ball, [(0, 0, 0)], ball.outer_boundary())
    vals = f.at(NEIGHBORS)
    assert np.ptp(vals) < 1e-12
    assert 0 < vals[0] < 1


def test_dirichlet_matches_gauss_seidel():
    box = Box((0, 0, 0), (4, 4, 4))
    zero = [(2, 2, 2)]
    one = [tuple(p) for p in box.outer_boundary().tolist()]
    f = solve_dirichlet(box, zero, one)
    ref = gauss_seidel([tuple(p) for p in box.interior_points().tolist()], zero, one)
    assert max(abs(f[p] - v) for p, v in ref.items()) <= 1e-8


def test_dirichlet_rejects_overlapping_data():
    box = Box((0, 0, 0), (2, 2, 2))
    with pytest.raises(ValueError):
        solve_dirichlet(box, [(1, 1, 1)], [(1, 1, 1)])


# --- Green's functions -------------------------------------------------------

def test_green_single_vertex():
    assert green_table(ExplicitSet([(0, 0, 0)]))((0, 0, 0), (0, 0, 0)) == pytest.approx(1.0, abs=1e-15)


def test_green_two_vertices():
    # return probability 1/36 per excursion: G(0, 0) = 36/35, G(0, e1) = 6/35
    t = GreenTable(ExplicitSet([(0, 0, 0), (1, 0, 0)]))
    assert t((0, 0, 0), (0, 0, 0)) == pytest.approx(36 / 35, rel=1e-14)
    assert t((0, 0, 0), (1, 0, 0)) == pytest.approx(6 / 35, rel=1e-14)
    assert t((0, 0, 0), (5, 5, 5)) == 0.0


@given(small_sets)
def test_green_matches_dense_inverse(pts):
    dom = ExplicitSet(sorted(pts))
    t = GreenTable(dom)
    G = t.matrix()
    ref, P = dense_green(t.points)
    assert np.abs(G - ref).max() <= 1e-9
    assert np.abs(G - G.T).max() <= 1e-9
    assert np.abs(G - np.eye(len(G)) - P @ G).max() <= 1e-9
    assert np.all(np.diag(G) >= 1 - 1e-12)


def test_green_cap():
    with pytest.raises(DomainTooLarge):
        GreenTable(Box((0, 0, 0), (20, 20, 20)))


def test_green_ratio_identity_and_preconditions():
    ball = Ball((0, 0, 0), 12, closed=True)
    x, y = (-3, 0, 0), (3, 0, 0)
    assert green_ratio_check(ball, x, x, y, y, 1 / 16, 1 / 4) == 0.0
    with pytest.raises(PreconditionViolated):
        # |x - y| = 1 < eps2 n
        green_ratio_check(ball, x, x, (-2, 0, 0), (-2, 0, 0), 1 / 16, 1 / 4)
    with pytest.raises(PreconditionViolated):
        green_ratio_check(ball, x, (-3, 5, 0), y, y, 1 / 16, 1 / 4)


@pytest.mark.slow
def test_green_ratio_shrinks_with_eps1():
    ball = Ball((0, 0, 0), 64, closed=True)
    x, y = (-16, 0, 0), (16, 0, 0)
    coarse = green_ratio_check(ball, x, (-18, 0, 0), y, y, 1 / 32, 1 / 4)
    fine = green_ratio_check(ball, x, (-17, 0, 0), y, y, 1 / 64, 1 / 4)
    assert 0 < fine < coarse


# --- Laplacian walk ----------------------------------------------------------

def test_step_uniform_from_centre():
    d = laplacian_step(Ball((0, 0, 0), 4), [(0, 0, 0)])
    assert np.allclose(d.probabilities, 1 / 6, atol=1e-12)
    assert sorted(map(tuple, d.support.tolist())) == sorted(map(tuple, NEIGHBORS.tolist()))


def test_step_forced_onto_free_neighbour():
    lam = [(1, 0, 0), (1, 1, 0), (0, 1, 0), (-1, 1, 0), (-1, 0, 0), (-1, -1, 0),
           (0, -1, 0), (0, -1, 1), (0, 0, 1), (0, 0, 0)]
    d = laplacian_step(Ball((0, 0, 0), 5), SimplePath(lam))
    assert d.as_dict() == {(0, 0, -1): 1.0}


@settings(max_examples=20)
@given(st.integers(0, 10 ** 6), st.integers(1, 4))
def test_step_probabilities_sum_to_one(seed, k):
    box = Box((0, 0, 0), (5, 5, 5))
    pre = lerw_prefix_samples(box, (2, 3, 2), k, 1, RngStream(seed))[0]
    if not all(box.contains(np.array(pre))):
        return
    d = laplacian_step(box, pre)
    assert abs(d.probabilities.sum() - 1) <= 1e-12
    assert np.all(d.probabilities >= 0)


@pytest.mark.slow
def test_step_matches_monte_carlo_conditional():
    box = Box((-3, -3, -3), (3, 3, 3))
    exact = laplacian_step(box, [(0, 0, 0), (1, 0, 0)]).as_dict()
    samples = lerw_prefix_samples(box, (0, 0, 0), 2, 10 ** 6, RngStream(3))
    nxt = [s[2] for s in samples if s[1] == (1, 0, 0)]
    n = len(nxt)
    counts = {p: 0 for p in exact}
    for p in nxt:
        counts[p] += 1
    for p, q in exact.items():
        assert abs(counts[p] / n - q) <= 3 * np.sqrt(q * (1 - q) / n)


def test_law_horizon_one():
    law = exact_lerw_law(Ball((0, 0, 0), 3), (0, 0, 0), 1)
    assert len(law) == 6
    assert all(abs(v - 1 / 6) < 1e-12 for v in law.values())


@pytest.mark.parametrize("horizon", [2, 3])
def test_law_total_mass(horizon):
    law = exact_lerw_law(Box((0, 0, 0), (3, 3, 3)), (1, 1, 1), horizon)
    assert abs(sum(law.values()) - 1) <= 1e-12
    assert all(len(k) - 1 <= horizon for k in law)


def test_law_against_monte_carlo_small():
    box = Box((0, 0, 0), (3, 3, 3))
    exact = exact_lerw_law(box, (1, 1, 1), 2)
    emp = empirical_law(lerw_prefix_samples(box, (1, 1, 1), 2, 200_000, RngStream(7)))
    assert total_variation(exact, emp) <= 0.01


def test_domain_markov_small():
    box = Box((0, 0, 0), (3, 3, 3))
    law = exact_lerw_law(box, (1, 1, 1), 3)
    for pre in [((1, 1, 1), (2, 1, 1)), ((1, 1, 1), (1, 2, 1), (1, 2, 2))]:
        cond = conditional_law(law, pre)
        cont = continuation_law(box, pre, 3 - (len(pre) - 1))
        assert total_variation(cond, cont) <= 1e-9


def test_law_cap():
    with pytest.raises(DomainTooLarge):
        exact_lerw_law(Box((0, 0, 0), (1, 1, 1)), (0, 0, 0), 1, cap=4)


def test_exact_law_is_symmetric_in_a_cube():
    law = exact_lerw_law(Box((0, 0, 0), (2, 2, 2)), (1, 1, 1), 2)
    # the probability of a prefix is invariant under permuting axes
    for key, v in law.items():
        for perm in itertools.permutations(range(3)):
            img = tuple(tuple(p[a] for a in perm) for p in key)
            assert abs(law[img] - v) < 1e-12
