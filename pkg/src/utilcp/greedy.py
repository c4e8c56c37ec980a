"""Greedy cost-aware construction of a label insertion order.

Starting from the empty set, each step adds the unchosen label maximizing

    (M - L(S ∪ {y})) / (1 - p[y])

where ``L`` is the set cost and ``M`` an upper bound on it. The plug-in
prediction set is the shortest prefix whose probability mass reaches
``1 - alpha``; the order is then completed with the same rule so that every
label gets a rank.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import as_prob_matrix, as_prob_vector
from .errors import InvalidAlpha, MissingBound
from .losses import COVERAGE, MAX_DISTANCE, SEPARABLE, CostModel, set_loss

log = logging.getLogger(__name__)

# slack on the mass stopping rule so that e.g. 0.6 + 0.3 counts as >= 0.9
MASS_EPS = 1e-12


@dataclass(frozen=True)
class GreedyTrace:
    order: tuple[int, ...]
    chosen_prefix_len: int
    prefix_mass: np.ndarray


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")


def _bound(m: CostModel, bound):
    M = m.bound_M if bound is None else bound
    if M is None:
        raise MissingBound("greedy construction needs an upper bound M on the set cost")
    return float(M)


def greedy_build(p, m: CostModel, alpha: float, *, bound: float | None = None, strict: bool = False) -> GreedyTrace:
    """Run the greedy construction on a single probability vector.

    Parameters
    ----------
    p : array-like of shape (K,)
    m : CostModel
    alpha : float
        Miscoverage level in (0, 1); only the stopping point depends on it.
    bound : float, optional
        Overrides ``m.bound_M``. Numerators are clamped at zero (with a
        warning) when the set cost exceeds it.
    strict : bool
        Apply the candidate filter ``p[y] <= alpha - p(S)`` literally. The
        plug-in set then ends as soon as no candidate passes the filter
        (possibly at the empty set); the remaining order is completed
        without the filter.

    Ties in the selection ratio go to the larger probability, then to the
    smaller label id.
    """
    _check_alpha(alpha)
    M = _bound(m, bound)
    p = as_prob_vector(p)
    K = len(p)
    chosen: list[int] = []
    remaining = list(range(K))
    mass = 0.0
    k_star = None
    warned = False
    while remaining:
        pool = remaining
        if strict and k_star is None:
            pool = [y for y in remaining if p[y] <= alpha - mass]
            if not pool:
                k_star = len(chosen)
                pool = remaining
        best_key, best = None, None
        for y in pool:
            if p[y] >= 1.0:
                ratio = np.inf
            else:
                loss = set_loss(m, chosen + [y])
                if loss > M and not warned:
                    log.warning("set cost %.6g exceeds the bound M=%.6g; clamping numerator at 0", loss, M)
                    warned = True
                ratio = max(M - loss, 0.0) / (1.0 - p[y])
            key = (ratio, p[y], -y)
            if best_key is None or key > best_key:
                best_key, best = key, y
        chosen.append(best)
        remaining.remove(best)
        mass += p[best]
        if not strict and k_star is None and mass >= 1.0 - alpha - MASS_EPS:
            k_star = len(chosen)
    if k_star is None:
        k_star = K
    order = tuple(chosen)
    return GreedyTrace(order, k_star, np.cumsum(p[list(order)]))


def greedy_set(p, m: CostModel, alpha: float, **kwargs) -> frozenset[int]:
    """Plug-in feasible set: the greedy prefix reaching mass ``1 - alpha``."""
    trace = greedy_build(p, m, alpha, **kwargs)
    return frozenset(trace.order[: trace.chosen_prefix_len])


def greedy_orders(probs, m: CostModel, *, bound: float | None = None) -> np.ndarray:
    """Greedy insertion orders for every row of an (n, K) probability matrix.

    Vectorized over instances; equivalent to ``greedy_build(p, m, alpha).order``
    row by row (the order itself does not depend on alpha).
    """
    P = np.asarray(probs, dtype=float)
    if P.ndim != 2:
        P = as_prob_matrix(np.atleast_2d(P))
    M = _bound(m, bound)
    n, K = P.shape
    rows = np.arange(n)
    orders = np.empty((n, K), dtype=np.int64)
    chosen = np.zeros((n, K), dtype=bool)
    loss = np.zeros(n)
    if m.kind == MAX_DISTANCE:
        D = m.distances.astype(float)
        far = np.zeros((n, K))
    elif m.kind == COVERAGE:
        member = m.membership.astype(float)
        covered = np.zeros((n, member.shape[1]), dtype=bool)
    denom = 1.0 - P
    certain = P >= 1.0
    warned = False
    for step in range(K):
        if m.kind == SEPARABLE:
            cand = loss[:, None] + m.penalties[None, :]
        elif m.kind == MAX_DISTANCE:
            cand = np.maximum(loss[:, None], far)
        else:
            cand = loss[:, None] + (~covered).astype(float) @ member.T
        num = M - cand
        if not warned and np.any((num < 0) & ~chosen):
            log.warning("set cost exceeds the bound M=%.6g; clamping numerator at 0", M)
            warned = True
        num = np.maximum(num, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = num / denom
        ratio[certain] = np.inf
        ratio[chosen] = -np.inf
        best = ratio.max(axis=1)
        tie = ratio == best[:, None]
        pk = np.where(tie, P, -np.inf)
        tie &= pk == pk.max(axis=1)[:, None]
        pick = np.argmax(tie, axis=1)
        orders[:, step] = pick
        chosen[rows, pick] = True
        loss = cand[rows, pick]
        if m.kind == MAX_DISTANCE:
            far = np.maximum(far, D[pick])
        elif m.kind == COVERAGE:
            covered |= m.membership[pick]
    return orders
