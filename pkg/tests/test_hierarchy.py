from collections import deque
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from utilcp import Hierarchy
from utilcp.errors import CycleDetected, DataError, OrphanLabel, UnknownLabel


def bfs_distance(parent, a, b):
    """Shortest path on the undirected edge graph."""
    adj = {}
    for c, p in parent.items():
        if c != p:
            adj.setdefault(c, []).append(p)
            adj.setdefault(p, []).append(c)
    dist = {a: 0}
    q = deque([a])
    while q:
        v = q.popleft()
        for u in adj.get(v, ()):
            if u not in dist:
                dist[u] = dist[v] + 1
                q.append(u)
    return dist[b]


@st.composite
def random_trees(draw, max_nodes=30):
    """Random rooted tree given by parent pointers to earlier nodes."""
    n = draw(st.integers(3, max_nodes))
    parent = {0: 0}
    for v in range(1, n):
        parent[v] = draw(st.integers(0, v - 1))
    internal = {p for c, p in parent.items() if c != p}
    leaves = [v for v in parent if v not in internal]
    if len(leaves) < 2:
        parent[n] = 0
        leaves.append(n)
    perm = draw(st.permutations(leaves))
    return parent, {k: leaf for k, leaf in enumerate(perm)}


class TestConstruction:
    def test_balanced(self):
        h = Hierarchy.balanced((2, 2))
        assert h.K == 4
        assert h.root == "r"

    def test_cycle(self):
        with pytest.raises(CycleDetected):
            Hierarchy({"a": "b", "b": "a", "c": "a"}, {0: "c", 1: "a"})

    def test_two_roots(self):
        with pytest.raises(DataError):
            Hierarchy({"a": "r1", "b": "r2"}, {0: "a", 1: "b"})

    def test_label_on_unknown_node(self):
        with pytest.raises(OrphanLabel):
            Hierarchy({"a": "r", "b": "r"}, {0: "a", 1: "zzz"})

    def test_label_ids_must_be_contiguous(self):
        with pytest.raises(OrphanLabel):
            Hierarchy({"a": "r", "b": "r"}, {0: "a", 2: "b"})

    def test_label_on_internal_node(self):
        with pytest.raises(DataError):
            Hierarchy({"a": "r", "b": "a"}, {0: "a", 1: "b"})

    def test_from_edges_two_parents(self):
        with pytest.raises(DataError):
            Hierarchy.from_edges([("a", "r"), ("a", "s")], {0: "a"})


class TestTreeDistance:
    def test_same_label(self):
        assert Hierarchy.balanced((2, 2)).tree_distance(1, 1) == 0

    def test_siblings(self):
        assert Hierarchy.balanced((2, 2)).tree_distance(0, 1) == 2

    def test_different_top_branches(self):
        h = Hierarchy.balanced((2, 2, 2))
        assert h.tree_distance(0, 7) == bfs_distance(h.parent, h.leaves[0], h.leaves[7]) == 6
        assert h.tree_distance(0, 2) == 4

    def test_unknown_label(self):
        with pytest.raises(UnknownLabel):
            Hierarchy.star(3).tree_distance(0, 3)

    @given(random_trees())
    def test_matches_bfs(self, tree):
        parent, labels = tree
        h = Hierarchy(parent, labels)
        for a, b in combinations(range(h.K), 2):
            assert h.distances[a, b] == bfs_distance(parent, labels[a], labels[b])

    @given(random_trees(max_nodes=25))
    def test_metric(self, tree):
        D = Hierarchy(*tree).distances
        assert np.array_equal(D, D.T)
        assert (np.diag(D) == 0).all()
        K = len(D)
        for a in range(K):
            assert (D[a][:, None] <= D[a][None, :] + D).all()


class TestDiameter:
    def test_two_labels_under_root(self):
        assert Hierarchy.star(2).diameter() == 2

    @pytest.mark.parametrize("K", [2, 5, 17])
    def test_star(self, K):
        assert Hierarchy.star(K).diameter() == 2

    def test_path_shaped(self):
        # leaf at depth 1 and leaf at depth 3 on a different branch
        h = Hierarchy({"a": "r", "b": "r", "c": "b", "d": "c"}, {0: "a", 1: "d"})
        assert h.diameter() == 4 == bfs_distance(h.parent, "a", "d")


class TestCategories:
    def test_star_is_one_category(self):
        assert Hierarchy.star(5).categories() == [frozenset(range(5))]

    def test_balanced_binary(self):
        assert Hierarchy.balanced((2, 2)).categories() == [frozenset({0, 1}), frozenset({2, 3})]

    @pytest.mark.parametrize("branching", [(3, 4), (2, 2, 3), (5, 2)])
    def test_uniform_depth_partition(self, branching):
        h = Hierarchy.balanced(branching)
        cats = h.categories()
        # one category per node at the second-to-last level
        assert len(cats) == int(np.prod(branching[:-1]))
        assert sorted(y for c in cats for y in c) == list(range(h.K))
        assert all(len(c) == branching[-1] for c in cats)

    def test_ragged_tree(self):
        # labels 0,1 at depth 2 under "a"; label 2 is a shallow leaf under root
        h = Hierarchy({"a": "r", "x": "a", "y": "a", "z": "r"}, {0: "x", 1: "y", 2: "z"})
        assert h.categories() == [frozenset({0, 1}), frozenset({2})]
