import numpy as np
import pytest
from hypothesis import given, strategies as st

from lerw3d.errors import CoordinateOverflow, InvalidPath, StoppingBudgetExceeded
from lerw3d.lattice import (
    Ball,
    Box,
    ExitDomain,
    ExplicitSet,
    HitSet,
    LatticePath,
    MaxSteps,
    RngStream,
    SimplePath,
    as_points,
    first_exit_index,
    last_hit_index,
    pack_keys,
    sample_srw,
    unit_ball,
)

coords = st.integers(-(2 ** 19), 2 ** 19)


@given(st.lists(st.tuples(coords, coords, coords), min_size=1, max_size=50))
def test_pack_keys_injective(pts):
    keys = pack_keys(pts)
    assert len(set(keys.tolist())) == len(set(pts))


def test_coordinate_limit():
    with pytest.raises(CoordinateOverflow):
        as_points([(2 ** 20, 0, 0)])


def test_path_must_be_nearest_neighbour():
    with pytest.raises(InvalidPath):
        LatticePath([(0, 0, 0), (1, 1, 0)])
    with pytest.raises(InvalidPath):
        SimplePath([(0, 0, 0), (1, 0, 0), (0, 0, 0)])
    p = LatticePath([(0, 0, 0), (1, 0, 0)], mesh=3)
    assert p.length == 1 and p.end == (1, 0, 0)
    assert np.allclose(p.physical()[1], [1 / 8, 0, 0])


def test_open_ball_excludes_sphere():
    # radius 1 at mesh 2 is 4 lattice units; (4,0,0) is on the sphere
    b = unit_ball(2)
    assert (3, 0, 0) in b and (4, 0, 0) not in b
    assert Ball((0, 0, 0), 1.0, 2, closed=True).contains([(4, 0, 0)])[0]


def test_ball_size_matches_direct_count():
    b = Ball((0, 0, 0), 5)
    ax = np.arange(-6, 7)
    g = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), -1).reshape(-1, 3)
    assert b.size() == int(((g ** 2).sum(1) < 25).sum())


def test_boundaries_of_box():
    box = Box((0, 0, 0), (2, 2, 2))
    assert box.size() == 27
    # outer boundary: 6 faces of 9 points
    assert box.outer_boundary().shape[0] == 54
    assert box.inner_boundary().shape[0] == 26


def test_explicit_set_membership():
    s = ExplicitSet([(0, 0, 0), (5, 5, 5)])
    assert s.contains([(0, 0, 0), (5, 5, 5), (1, 0, 0)]).tolist() == [True, True, False]
    assert s.size() == 2


def test_rng_stream_reproducible():
    a = RngStream(7, 3).generator.random(5)
    b = RngStream(7, 3).generator.random(5)
    c = RngStream(7, 4).generator.random(5)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_srw_exits_domain_once():
    b = Ball((0, 0, 0), 6)
    w = sample_srw((0, 0, 0), ExitDomain(b), RngStream(1, 0))
    inside = b.contains(w.points)
    assert inside[:-1].all() and not inside[-1]
    assert first_exit_index(w, b) == w.length


def test_srw_hits_set():
    w = sample_srw((0, 0, 0), [HitSet([(2, 0, 0)]), ExitDomain(Ball((0, 0, 0), 5))], RngStream(2, 0))
    assert w.end == (2, 0, 0) or w.end not in Ball((0, 0, 0), 5)
    if w.end == (2, 0, 0):
        assert last_hit_index(w, [(2, 0, 0)]) == w.length


def test_srw_budget():
    with pytest.raises(StoppingBudgetExceeded) as err:
        sample_srw((0, 0, 0), [ExitDomain(Ball((0, 0, 0), 100)), MaxSteps(10)], RngStream(3, 0))
    assert err.value.partial.length == 10


def test_srw_step_distribution_uniform():
    # first steps of many walks: uniform over 6 directions
    counts = np.zeros(6)
    dirs = {(1, 0, 0): 0, (-1, 0, 0): 1, (0, 1, 0): 2, (0, -1, 0): 3, (0, 0, 1): 4, (0, 0, -1): 5}
    for i in range(3000):
        w = sample_srw((0, 0, 0), ExitDomain(Ball((0, 0, 0), 1)), RngStream(9, i))
        counts[dirs[w.end]] += 1
    from scipy.stats import chisquare
    assert chisquare(counts).pvalue > 1e-3
