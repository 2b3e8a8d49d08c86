import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import walk_from_dirs, walks
from lerw3d.errors import EmptyPath, EndpointMismatch, InvalidPath
from lerw3d.lattice import Ball, LatticePath, RngStream, unit_ball
from lerw3d.loop_erasure import (
    concat,
    find_cut_times,
    loop_erase,
    loop_erase_lep,
    loop_erase_streaming,
    reverse,
    sample_lerw,
    sample_lerw_with_steps,
)


def naive_erase(points):
    """Chronological erasure written the obvious way: on a revisit, drop the loop."""
    out = []
    for p in map(tuple, points):
        if p in out:
            del out[out.index(p) + 1:]
        else:
            out.append(p)
    return out


def test_small_examples():
    w = LatticePath([(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0), (0, 0, 0), (0, 0, 1)])
    assert loop_erase(w).tuples() == [(0, 0, 0), (0, 0, 1)]
    w = LatticePath([(0, 0, 0), (1, 0, 0), (0, 0, 0)])
    assert loop_erase(w).tuples() == [(0, 0, 0)]
    with pytest.raises(EmptyPath):
        loop_erase(None)


@given(walks)
def test_forward_matches_lep_and_naive(w):
    a = loop_erase(w)
    assert a == loop_erase_lep(w)
    assert a.tuples() == naive_erase(w.points)


@given(walks)
def test_idempotent_and_endpoints(w):
    a = loop_erase(w)
    assert loop_erase(a) == a
    assert a.start == w.start and a.end == w.end
    assert a.is_simple()


@given(walks)
def test_streaming_matches(w):
    assert loop_erase_streaming(map(tuple, w.points)) == loop_erase(w)


def test_streaming_rejects_jumps():
    with pytest.raises(InvalidPath):
        loop_erase_streaming([(0, 0, 0), (2, 0, 0)])


@given(walks)
def test_cut_times_bruteforce(w):
    pts = [tuple(p) for p in w.points]
    expect = [k for k in range(len(pts)) if not set(pts[:k + 1]) & set(pts[k + 1:])]
    assert find_cut_times(w) == expect


@given(walks, walks)
def test_erasure_factorizes_at_cut_time(a, b):
    # shift b so it starts where a ends
    b = LatticePath(b.points + np.array(a.end) - b.points[0])
    w = concat(a, b)
    for k in find_cut_times(w):
        left = LatticePath(w.points[:k + 1])
        right = LatticePath(w.points[k:])
        assert loop_erase(w) == concat(loop_erase(left), loop_erase(right))


def test_reverse_and_concat():
    w = walk_from_dirs([0, 2, 4])
    assert reverse(reverse(w)) == w
    with pytest.raises(EndpointMismatch):
        concat(w, w)


def test_sample_lerw_ends_outside():
    d = Ball((0, 0, 0), 7)
    for i in range(20):
        p = sample_lerw(d, RngStream(4, i))
        inside = d.contains(p.points)
        assert inside[:-1].all() and not inside[-1]
        assert p.is_simple() and p.start == (0, 0, 0)


def test_sample_lerw_matches_erasure_of_same_walk():
    # the fused kernel erases the walk it draws: with the same stream, the SRW
    # sampler reproduces that walk and its erasure must agree
    from lerw3d.lattice import ExitDomain, sample_srw
    d = unit_ball(4)
    for i in range(10):
        p = sample_lerw(d, RngStream(5, i))
        w = sample_srw((0, 0, 0), ExitDomain(d), RngStream(5, i))
        assert p == loop_erase(w)


def test_steps_at_least_length():
    p, steps = sample_lerw_with_steps(unit_ball(4), RngStream(6, 0))
    assert steps >= p.length


@given(st.integers(0, 3))
def test_single_point(k):
    w = LatticePath([(k, 0, 0)])
    assert loop_erase(w).tuples() == [(k, 0, 0)]
