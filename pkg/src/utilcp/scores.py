"""Nonconformity scores.

Every method maps a probability vector to one score per label, with small
scores meaning "conforming". The ratio method is natively a conformity score
(large = conforming); :func:`label_scores` returns it negated so that all
methods share the same thresholding rule ``s <= tau``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_prob_vector, sort_descending
from .errors import DataError, InvalidAlpha, MissingBound, UnknownLabel, ZeroPenalty
from .greedy import greedy_orders
from .losses import SEPARABLE, CostModel, marginal_gains, prefix_losses

BASE = "base"
PENALIZED = "penalized"
RATIO = "ratio"
GREEDY = "greedy"
METHOD_KINDS = (BASE, PENALIZED, RATIO, GREEDY)


@dataclass(frozen=True, eq=False)
class ScoreMethod:
    kind: str
    cost: CostModel | None = None
    lam: float = 0.0
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in METHOD_KINDS:
            raise DataError(f"unknown score method {self.kind!r}; expected one of {METHOD_KINDS}")
        if self.kind in (PENALIZED, RATIO, GREEDY) and self.cost is None:
            raise DataError(f"{self.kind} scores need a cost model")
        if self.kind == PENALIZED and not self.lam >= 0:
            raise DataError(f"lambda must be >= 0, got {self.lam}")
        if self.kind == RATIO and self.cost.kind != SEPARABLE:
            raise DataError("the ratio score needs a separable cost model")
        if self.kind == GREEDY:
            if self.cost.bound_M is None:
                raise MissingBound("greedy scores need a cost bound M")
            if self.alpha is not None and not 0 < self.alpha < 1:
                raise InvalidAlpha(f"alpha must lie in (0, 1), got {self.alpha}")
        object.__setattr__(self, "lam", float(self.lam))

    @classmethod
    def base(cls):
        return cls(BASE)

    @classmethod
    def penalized(cls, cost, lam):
        return cls(PENALIZED, cost, lam)

    @classmethod
    def ratio(cls, cost):
        return cls(RATIO, cost)

    @classmethod
    def greedy(cls, cost, alpha=None):
        return cls(GREEDY, cost, alpha=alpha)

    @property
    def name(self) -> str:
        if self.kind == PENALIZED:
            return f"penalized(lambda={self.lam:g})"
        return self.kind

    @property
    def negated(self) -> bool:
        return self.kind == RATIO


@dataclass(frozen=True)
class InstanceScores:
    """Scores of every label for one instance, plus the insertion order."""

    scores: np.ndarray
    insertion_order: tuple[int, ...]


def _label(p, y):
    if not isinstance(y, (int, np.integer)) or not 0 <= y < len(p):
        raise UnknownLabel(f"label {y!r} not in [0, {len(p)})")
    return int(y)


# single-instance definitions -------------------------------------------------


def aps_rho(p, y: int) -> float:
    """Probability mass of all labels ranked at or above ``y``."""
    p = as_prob_vector(p)
    y = _label(p, y)
    total = 0.0
    for lab in sort_descending(p):
        total += p[lab]
        if lab == y:
            return total
    raise AssertionError


def penalized_score(method: ScoreMethod, p, y: int) -> float:
    """``rho(x, y) + lam * L(y)``, with ``L`` the summed marginal cost gains
    along the probability-descending order up to and including ``y``."""
    p = as_prob_vector(p)
    y = _label(p, y)
    order = sort_descending(p).tolist()
    prefix = order[: order.index(y) + 1]
    L = float(np.sum(marginal_gains(method.cost, prefix)))
    return aps_rho(p, y) + method.lam * L


def ratio_score(method: ScoreMethod, p, y: int) -> float:
    """Conformity ratio ``p[y] / penalty[y]`` (large means conforming)."""
    p = as_prob_vector(p)
    y = _label(p, y)
    pen = method.cost.penalties[y]
    if not pen > 0:
        raise ZeroPenalty(f"label {y} has penalty {pen}")
    return float(p[y] / pen)


def greedy_order_score(method: ScoreMethod, p, y: int) -> float:
    """Probability mass accumulated along the greedy order up to ``y``."""
    p = as_prob_vector(p)
    y = _label(p, y)
    order = greedy_orders(p[None, :], method.cost)[0]
    total = 0.0
    for lab in order:
        total += p[lab]
        if lab == y:
            return total
    raise AssertionError


# batch evaluation ------------------------------------------------------------


def _scatter(order, values):
    out = np.empty_like(values)
    np.put_along_axis(out, order, values, axis=1)
    return out


def insertion_orders(method: ScoreMethod, probs) -> np.ndarray:
    """(n, K) label insertion order implied by the method."""
    P = np.atleast_2d(np.asarray(probs, dtype=float))
    if method.kind == GREEDY:
        return greedy_orders(P, method.cost)
    if method.kind == RATIO:
        return sort_descending(P / method.cost.penalties)
    return sort_descending(P)


def label_scores(method: ScoreMethod, probs) -> np.ndarray:
    """Nonconformity scores of every label, shape (n, K).

    Ratio scores come back negated (``-p/penalty``).
    """
    P = np.atleast_2d(np.asarray(probs, dtype=float))
    if method.kind == RATIO:
        return -(P / method.cost.penalties)
    order = insertion_orders(method, P)
    mass = np.cumsum(np.take_along_axis(P, order, axis=1), axis=1)
    if method.kind == PENALIZED:
        mass = mass + method.lam * prefix_losses(method.cost, order)
    return _scatter(order, mass)


def true_label_scores(method: ScoreMethod, probs, labels) -> np.ndarray:
    S = label_scores(method, probs)
    return S[np.arange(len(S)), np.asarray(labels)]


def instance_scores(method: ScoreMethod, p) -> InstanceScores:
    p = as_prob_vector(p)
    order = insertion_orders(method, p[None, :])[0]
    return InstanceScores(label_scores(method, p[None, :])[0], tuple(int(v) for v in order))
