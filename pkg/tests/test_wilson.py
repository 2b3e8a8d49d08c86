import itertools
from collections import Counter, deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from lerw3d.errors import DomainTooLarge, EmptyDomain, NotInDomain
from lerw3d.lattice import NEIGHBORS, Ball, Box, ExplicitSet, RngStream
from lerw3d.loop_erasure import sample_lerw
from lerw3d.wilson import (
    FirstWalkPath,
    WilsonSampler,
    matrix_tree_count,
    tree_distance,
    tree_path,
    wilson_sample,
)

TWO = ExplicitSet([(0, 0, 0), (1, 0, 0)])


def enumerate_trees(points):
    """Every parent assignment (one lattice neighbour per vertex) without a cycle."""
    pts = [tuple(p) for p in points]
    inside = set(pts)
    trees = []
    for choice in itertools.product(range(6), repeat=len(pts)):
        parent = {p: tuple(np.add(p, NEIGHBORS[c]).tolist()) for p, c in zip(pts, choice)}
        ok = True
        for p in pts:
            seen, q = set(), p
            while q in inside:
                if q in seen:
                    ok = False
                    break
                seen.add(q)
                q = parent[q]
            if not ok:
                break
        if ok:
            trees.append(tuple(parent[p] for p in pts))
    return trees


def bfs_distance(tree, x, y):
    adj = {}
    for p, a in tree.edges():
        a = a if tree.domain.contains(np.array([a]))[0] else "boundary"
        adj.setdefault(p, []).append(a)
        adj.setdefault(a, []).append(p)
    dist = {x: 0}
    todo = deque([x])
    while todo:
        u = todo.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                todo.append(v)
    return dist[y]


def test_single_vertex_parent_uniform():
    s = WilsonSampler(ExplicitSet([(0, 0, 0)]))
    dirs = Counter(s.sample(RngStream(1, i)).parent_of((0, 0, 0)) for i in range(6000))
    assert set(dirs) == {tuple(d) for d in NEIGHBORS.tolist()}
    assert stats.chisquare(list(dirs.values())).pvalue >= 1e-3


def test_matrix_tree_small_counts():
    assert matrix_tree_count(ExplicitSet([(0, 0, 0)])) == 6
    assert matrix_tree_count(TWO) == 35 == len(enumerate_trees(TWO.points))


@settings(max_examples=25)
@given(st.sets(st.tuples(st.integers(0, 2), st.integers(0, 1), st.integers(0, 1)),
               min_size=1, max_size=4))
def test_matrix_tree_matches_enumeration(pts):
    dom = ExplicitSet(sorted(pts))
    assert matrix_tree_count(dom) == len(enumerate_trees(dom.points))


def test_matrix_tree_limits():
    with pytest.raises(DomainTooLarge):
        matrix_tree_count(Box((0, 0, 0), (2, 2, 1)))
    with pytest.raises(EmptyDomain):
        WilsonSampler(ExplicitSet(np.zeros((0, 3), dtype=np.int64)))


def test_two_vertex_frequencies_and_ordering():
    trees = enumerate_trees(TWO.points)
    where = {t: i for i, t in enumerate(trees)}
    tables = []
    for ordering in ([(0, 0, 0), (1, 0, 0)], [(1, 0, 0), (0, 0, 0)]):
        s = WilsonSampler(TWO, ordering)
        counts = np.zeros(len(trees), dtype=np.int64)
        for i in range(20_000):
            counts[where[s.sample(RngStream(2, i)).key()]] += 1
        assert stats.chisquare(counts).pvalue >= 1e-3
        tables.append(counts)
    assert stats.chi2_contingency(np.array(tables)).pvalue >= 1e-3


def test_seeded_first_branch_is_the_seed():
    box = Box((-4, -4, -4), (4, 4, 4))
    for i in range(5):
        gamma = sample_lerw(box, RngStream(3, i))
        tree = wilson_sample(box, FirstWalkPath(gamma), RngStream(4, i))
        tree.check()
        assert tree_path(tree, gamma.start) == gamma


def test_tree_path_basics():
    tree = wilson_sample(ExplicitSet([(0, 0, 0)]), rng=RngStream(5))
    assert tree_path(tree, (0, 0, 0)).length == 1
    with pytest.raises(NotInDomain):
        tree_path(tree, (3, 3, 3))


@settings(max_examples=15)
@given(st.integers(0, 10 ** 6))
def test_random_trees_are_spanning_and_distances_match_bfs(seed):
    box = Box((0, 0, 0), (3, 3, 2))
    tree = wilson_sample(box, rng=RngStream(seed))
    tree.check()
    gen = np.random.default_rng(seed)
    pts = [tuple(p) for p in tree.points.tolist()]
    for _ in range(10):
        x, y = (pts[i] for i in gen.integers(0, len(pts), 2))
        assert tree_path(tree, x).is_simple()
        assert tree_distance(tree, x, y) == bfs_distance(tree, x, y)
    x = pts[0]
    assert tree_distance(tree, x, x) == 0
    p = tree.parent_of(x)
    if p in tree.domain:
        assert tree_distance(tree, x, p) == 1


@pytest.mark.slow
def test_first_branch_has_lerw_law():
    ball = Ball((0, 0, 0), 5)
    s = WilsonSampler(ball, [(0, 0, 0)])
    branch = [tree_path(s.sample(RngStream(6, i)), (0, 0, 0)) for i in range(10_000)]
    direct = [sample_lerw(ball, RngStream(7, i)) for i in range(10_000)]
    r1 = [np.linalg.norm(b.points[-1]) for b in branch]
    r2 = [np.linalg.norm(b.points[-1]) for b in direct]
    assert stats.ks_2samp(r1, r2).pvalue >= 1e-3
    l1 = [b.length for b in branch]
    l2 = [b.length for b in direct]
    assert stats.ks_2samp(l1, l2).pvalue >= 1e-3
