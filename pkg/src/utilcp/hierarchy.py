"""Rooted label trees: leaf-to-leaf distances and second-to-last-level categories."""

from __future__ import annotations

import threading
from collections import defaultdict
from typing import Mapping

import numpy as np

from .errors import CycleDetected, DataError, OrphanLabel, UnknownLabel


class Hierarchy:
    """A rooted tree whose leaves carry the labels ``0..K-1``.

    Parameters
    ----------
    parent : mapping node -> parent node
        The root maps to itself (or may be omitted as a key).
    leaf_of_label : mapping label id -> leaf node
        Must be total over ``range(K)`` and injective onto leaves.

    The structure is validated eagerly; queries are read-only.
    """

    def __init__(self, parent: Mapping, leaf_of_label: Mapping[int, object]):
        parent = dict(parent)
        for child, par in list(parent.items()):
            if par not in parent:
                parent[par] = par
        roots = [v for v, p in parent.items() if v == p]
        depth = {}
        for node in parent:
            path = []
            v = node
            seen = set()
            while v not in depth and parent[v] != v:
                if v in seen:
                    raise CycleDetected(f"cycle through node {v!r}")
                seen.add(v)
                path.append(v)
                v = parent[v]
            base = depth.get(v, 0)
            if v not in depth:
                depth[v] = 0
            for i, u in enumerate(reversed(path), start=1):
                depth[u] = base + i
        if len(roots) != 1:
            raise DataError(f"hierarchy must have exactly one root, found {len(roots)}: {sorted(map(str, roots))}")

        K = len(leaf_of_label)
        if sorted(int(k) for k in leaf_of_label) != list(range(K)):
            raise OrphanLabel(f"label ids must be exactly 0..{K - 1}")
        if K < 2:
            raise DataError("hierarchy must host at least 2 labels")
        leaves = [leaf_of_label[k] for k in range(K)]
        children = defaultdict(list)
        for v, p in parent.items():
            if v != p:
                children[p].append(v)
        for k, leaf in enumerate(leaves):
            if leaf not in parent:
                raise OrphanLabel(f"label {k} maps to unknown node {leaf!r}")
            if children.get(leaf):
                raise DataError(f"label {k} sits on internal node {leaf!r}")
            if depth[leaf] < 1:
                raise DataError(f"label {k} sits on the root")
        if len(set(leaves)) != K:
            raise DataError("labels must map to distinct leaves")

        self.parent = parent
        self.root = roots[0]
        self.depth = depth
        self.children = {k: tuple(v) for k, v in children.items()}
        self.leaves = tuple(leaves)
        self.K = K
        self._dist = None
        self._lock = threading.Lock()

    def __repr__(self):
        return f"Hierarchy(K={self.K}, nodes={len(self.parent)}, root={self.root!r})"

    @classmethod
    def from_edges(cls, edges, leaf_of_label) -> "Hierarchy":
        """Build from ``(child, parent)`` pairs."""
        parent = {}
        for child, par in edges:
            if child in parent and parent[child] != par:
                raise DataError(f"node {child!r} has two parents")
            parent[child] = par
        return cls(parent, leaf_of_label)

    @classmethod
    def balanced(cls, branching: tuple[int, ...]) -> "Hierarchy":
        """Uniform-depth tree; ``branching[d]`` children per node at depth d."""
        parent = {"r": "r"}
        level = ["r"]
        for b in branching:
            nxt = []
            for v in level:
                for j in range(b):
                    c = f"{v}.{j}"
                    parent[c] = v
                    nxt.append(c)
            level = nxt
        return cls(parent, {k: v for k, v in enumerate(level)})

    @classmethod
    def star(cls, K: int) -> "Hierarchy":
        return cls.balanced((K,))

    def _path_to_root(self, node):
        path = [node]
        while self.parent[path[-1]] != path[-1]:
            path.append(self.parent[path[-1]])
        return path

    def _check(self, y) -> int:
        if not isinstance(y, (int, np.integer)) or not 0 <= y < self.K:
            raise UnknownLabel(f"label {y!r} not in [0, {self.K})")
        return int(y)

    def tree_distance(self, a: int, b: int) -> int:
        """Edge count on the path between the leaves of labels ``a`` and ``b``."""
        a, b = self._check(a), self._check(b)
        if self._dist is not None:
            return int(self._dist[a, b])
        pa = self._path_to_root(self.leaves[a])
        index = {v: i for i, v in enumerate(pa)}
        for j, v in enumerate(self._path_to_root(self.leaves[b])):
            if v in index:
                return index[v] + j
        raise AssertionError("tree has a single root")

    @property
    def distances(self) -> np.ndarray:
        """All-pairs label distance table (K, K), computed once."""
        if self._dist is None:
            with self._lock:
                if self._dist is None:
                    D = np.zeros((self.K, self.K), dtype=np.int64)
                    for a in range(self.K):
                        for b in range(a + 1, self.K):
                            D[a, b] = D[b, a] = self.tree_distance(a, b)
                    D.setflags(write=False)
                    self._dist = D
        return self._dist

    def diameter(self) -> int:
        return int(self.distances.max())

    def categories(self) -> list[frozenset[int]]:
        """Label groups at the second-to-last level.

        The level is counted from the deepest leaf. Leaves shallower than the
        deepest level are grouped with their siblings under their parent.
        """
        label_of_leaf = {leaf: k for k, leaf in enumerate(self.leaves)}
        max_depth = max(self.depth[leaf] for leaf in self.leaves)
        level = max_depth - 1

        def labels_under(node):
            stack, out = [node], set()
            while stack:
                v = stack.pop()
                if v in label_of_leaf:
                    out.add(label_of_leaf[v])
                stack.extend(self.children.get(v, ()))
            return out

        cats = []
        for node in sorted(self.parent, key=str):
            if self.depth[node] == level and self.children.get(node):
                cats.append(frozenset(labels_under(node)))
        shallow = defaultdict(set)
        for k, leaf in enumerate(self.leaves):
            if self.depth[leaf] < max_depth:
                shallow[self.parent[leaf]].add(k)
        cats.extend(frozenset(v) for _, v in sorted(shallow.items(), key=lambda kv: str(kv[0])))
        cats = [c for c in cats if c]
        return sorted(cats, key=min)
