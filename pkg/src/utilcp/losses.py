"""Set cost functions and their marginal-gain linearization.

Three kinds are supported:

``separable``
    sum of per-label penalties over the set.
``max_distance``
    largest pairwise tree distance between labels in the set.
``coverage``
    number of categories the set intersects (categories may overlap).

All kinds assign zero cost to the empty set.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, DuplicateLabel, NonPositiveCost, UnknownLabel
from .hierarchy import Hierarchy

SEPARABLE = "separable"
MAX_DISTANCE = "max_distance"
COVERAGE = "coverage"
KINDS = (SEPARABLE, MAX_DISTANCE, COVERAGE)


@dataclass(frozen=True, eq=False)
class CostModel:
    kind: str
    K: int
    penalties: np.ndarray | None = None
    hierarchy: Hierarchy | None = None
    categories: tuple[frozenset[int], ...] | None = None
    bound_M: float = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown cost kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == SEPARABLE:
            pen = np.array(self.penalties, dtype=float)
            if pen.shape != (self.K,):
                raise DataError(f"need {self.K} penalties, got shape {pen.shape}")
            if not np.all(np.isfinite(pen)) or np.any(pen <= 0):
                bad = np.flatnonzero(~(pen > 0)).tolist()
                raise NonPositiveCost(f"penalties must be > 0; offending labels {bad}")
            pen.setflags(write=False)
            object.__setattr__(self, "penalties", pen)
            natural = float(pen.sum())
        elif self.kind == MAX_DISTANCE:
            if self.hierarchy is None:
                raise DataError("max_distance cost needs a hierarchy")
            natural = float(self.hierarchy.diameter())
        else:
            cats = self.categories
            if cats is None:
                if self.hierarchy is None:
                    raise DataError("coverage cost needs a hierarchy or explicit categories")
                cats = self.hierarchy.categories()
            cats = tuple(frozenset(int(y) for y in c) for c in cats)
            if not cats or any(not c for c in cats):
                raise DataError("categories must be nonempty")
            for c in cats:
                for y in c:
                    if not 0 <= y < self.K:
                        raise UnknownLabel(f"category label {y} not in [0, {self.K})")
            object.__setattr__(self, "categories", cats)
            natural = float(len(cats))
        if self.hierarchy is not None and self.hierarchy.K != self.K:
            raise DataError(f"hierarchy hosts {self.hierarchy.K} labels, cost model has K={self.K}")
        if self.bound_M is None:
            object.__setattr__(self, "bound_M", natural)
        elif float(self.bound_M) < natural:
            raise DataError(f"bound_M={self.bound_M} is below the largest attainable loss {natural}")
        else:
            object.__setattr__(self, "bound_M", float(self.bound_M))

    # constructors -------------------------------------------------------

    @classmethod
    def separable(cls, penalties, bound=None) -> "CostModel":
        penalties = np.asarray(penalties, dtype=float)
        return cls(SEPARABLE, len(penalties), penalties=penalties, bound_M=bound)

    @classmethod
    def max_distance(cls, hierarchy: Hierarchy, bound=None) -> "CostModel":
        return cls(MAX_DISTANCE, hierarchy.K, hierarchy=hierarchy, bound_M=bound)

    @classmethod
    def coverage(cls, hierarchy: Hierarchy | None = None, categories=None, K=None, bound=None) -> "CostModel":
        if K is None:
            if hierarchy is None:
                raise DataError("coverage cost without a hierarchy needs K")
            K = hierarchy.K
        cats = None if categories is None else tuple(frozenset(c) for c in categories)
        return cls(COVERAGE, K, hierarchy=hierarchy, categories=cats, bound_M=bound)

    # helpers ------------------------------------------------------------

    @property
    def membership(self) -> np.ndarray:
        """(K, C) boolean label-category incidence (coverage kind only)."""
        M = self.__dict__.get("_membership")
        if M is None:
            M = np.zeros((self.K, len(self.categories)), dtype=bool)
            for j, c in enumerate(self.categories):
                M[list(c), j] = True
            M.setflags(write=False)
            object.__setattr__(self, "_membership", M)
        return M

    @property
    def distances(self) -> np.ndarray:
        return self.hierarchy.distances

    def digest(self) -> str:
        """Short content hash identifying the cost function and its bound."""
        payload = {"kind": self.kind, "K": self.K, "M": repr(self.bound_M)}
        if self.kind == SEPARABLE:
            payload["penalties"] = [repr(float(x)) for x in self.penalties]
        elif self.kind == MAX_DISTANCE:
            payload["distances"] = self.distances.tolist()
        else:
            payload["categories"] = sorted(sorted(c) for c in self.categories)
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def _labels(self, S: Iterable[int]) -> list[int]:
        out = []
        for y in S:
            if not isinstance(y, (int, np.integer)) or not 0 <= y < self.K:
                raise UnknownLabel(f"label {y!r} not in [0, {self.K})")
            out.append(int(y))
        return out


def set_loss(m: CostModel, S: Iterable[int]) -> float:
    """Cost of the prediction set ``S``."""
    labels = sorted(set(m._labels(S)))
    if not labels:
        return 0.0
    if m.kind == SEPARABLE:
        return math.fsum(m.penalties[y] for y in labels)
    if m.kind == MAX_DISTANCE:
        D = m.distances
        return float(max(D[a, b] for a in labels for b in labels))
    hit = set(labels)
    return float(sum(1 for c in m.categories if c & hit))


def marginal_gains(m: CostModel, order: Sequence[int]) -> np.ndarray:
    """Loss increments ``L(S_i) - L(S_{i-1})`` along the prefixes of ``order``."""
    labels = m._labels(order)
    if len(set(labels)) != len(labels):
        raise DuplicateLabel(f"order repeats a label: {list(order)}")
    prefix = [0.0]
    for i in range(len(labels)):
        prefix.append(set_loss(m, labels[: i + 1]))
    return np.diff(prefix)


def prefix_losses(m: CostModel, orders: np.ndarray) -> np.ndarray:
    """Vectorized ``L(S_i)`` for every prefix of every row of ``orders``.

    ``orders`` is an (n, r) integer array of duplicate-free label sequences;
    entry ``[j, i]`` of the result is the loss of ``orders[j, :i+1]``.
    """
    orders = np.atleast_2d(np.asarray(orders, dtype=np.int64))
    n, r = orders.shape
    if m.kind == SEPARABLE:
        return np.cumsum(m.penalties[orders], axis=1)
    out = np.empty((n, r))
    rows = np.arange(n)
    if m.kind == MAX_DISTANCE:
        D = m.distances
        far = np.zeros((n, m.K))
        loss = np.zeros(n)
        for i in range(r):
            lab = orders[:, i]
            loss = np.maximum(loss, far[rows, lab])
            far = np.maximum(far, D[lab])
            out[:, i] = loss
        return out
    member = m.membership
    covered = np.zeros((n, member.shape[1]), dtype=bool)
    for i in range(r):
        covered |= member[orders[:, i]]
        out[:, i] = covered.sum(axis=1)
    return out


def batch_set_loss(m: CostModel, masks: np.ndarray) -> np.ndarray:
    """Loss of each row of an (n, K) boolean membership matrix."""
    masks = np.atleast_2d(np.asarray(masks, dtype=bool))
    if m.kind == SEPARABLE:
        return masks.astype(float) @ m.penalties
    if m.kind == COVERAGE:
        return (masks.astype(np.int64) @ m.membership.astype(np.int64) > 0).sum(axis=1).astype(float)
    D = m.distances
    out = np.zeros(len(masks))
    # max over pairs a, b in S of D[a, b]: for each a in S, max_b D[a, b] over b in S
    for a in range(m.K):
        rows = masks[:, a]
        if not rows.any():
            continue
        reach = np.where(masks[rows], D[a], 0).max(axis=1)
        out[rows] = np.maximum(out[rows], reach)
    return out


def is_separable_witness(m: CostModel, *, samples: int = 2000, seed: int = 0) -> bool:
    """Check whether ``L(S) = sum_{y in S} L({y})`` on a collection of sets.

    The check is exhaustive over all subsets when ``K <= 12`` and uses
    ``samples`` random subsets otherwise, so a ``True`` answer for large K
    is evidence rather than proof.
    """
    if m.kind == SEPARABLE:
        return True
    if m.kind == COVERAGE and any(len(c) >= 2 for c in m.categories):
        # L(C) = 1 while the singletons of C sum to |C|
        return False
    singles = np.array([set_loss(m, [y]) for y in range(m.K)])
    if m.K <= 12:
        masks = np.array(list(itertools.product([False, True], repeat=m.K)), dtype=bool)
    else:
        rng = np.random.default_rng(seed)
        masks = rng.random((samples, m.K)) < rng.random((samples, 1))
    return bool(np.allclose(batch_set_loss(m, masks), masks @ singles, rtol=0, atol=1e-12))
