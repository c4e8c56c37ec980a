"""Label spaces, probability matrices and dataset splits."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import logging

import numpy as np

from .errors import DataError, EmptyFold, UnknownLabel

log = logging.getLogger(__name__)

# Row sums within SUM_TOL of 1 are silently renormalized; beyond REJECT_TOL
# the row is rejected. In between we renormalize with a warning.
SUM_TOL = 1e-4
REJECT_TOL = 1e-2
NORM_EPS = 1e-12


@dataclass(frozen=True)
class LabelSpace:
    size: int
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 2:
            raise DataError(f"label space needs K >= 2 labels, got {self.size}")
        if self.names is not None:
            names = tuple(str(n) for n in self.names)
            if len(names) != self.size:
                raise DataError(f"expected {self.size} label names, got {len(names)}")
            if len(set(names)) != len(names):
                raise DataError("label names must be distinct")
            object.__setattr__(self, "names", names)

    def check(self, y: int) -> int:
        if not 0 <= int(y) < self.size or int(y) != y:
            raise UnknownLabel(f"label {y!r} not in [0, {self.size})")
        return int(y)


def as_prob_vector(p, *, row=None) -> np.ndarray:
    """Validate one probability vector and return a renormalized copy."""
    return as_prob_matrix(np.atleast_2d(np.asarray(p, dtype=float)), first_row=row)[0]


def as_prob_matrix(probs, *, first_row=None) -> np.ndarray:
    """Validate an (n, K) probability matrix and renormalize rows to sum to 1.

    Raises :class:`DataError` naming the offending row when an entry lies
    outside ``[0, 1]`` or a row sum is off by more than ``REJECT_TOL``.
    The result is read-only.
    """
    P = np.array(probs, dtype=float, copy=True)
    if P.ndim != 2:
        raise DataError(f"probability matrix must be 2-D, got shape {P.shape}")
    offset = 0 if first_row is None else first_row

    def _row(i):
        return f"row {offset + i}"

    bad = ~np.isfinite(P).all(axis=1) | (P < 0).any(axis=1) | (P > 1).any(axis=1)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise DataError(f"{_row(i)}: probabilities must lie in [0, 1]")
    sums = P.sum(axis=1)
    off = np.abs(sums - 1.0) > REJECT_TOL
    if off.any():
        i = int(np.flatnonzero(off)[0])
        raise DataError(f"{_row(i)}: probabilities sum to {sums[i]:.6g}, expected 1")
    loose = np.abs(sums - 1.0) > SUM_TOL
    if loose.any():
        log.warning("%d probability rows sum to 1 only within %g; renormalizing", int(loose.sum()), REJECT_TOL)
    # rows already within NORM_EPS of 1 are left untouched, which makes
    # renormalization idempotent
    fix = np.abs(sums - 1.0) > NORM_EPS
    P[fix] /= sums[fix, None]
    P.setflags(write=False)
    return P


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """Classifier outputs for a batch of instances.

    ``probs`` has shape (n, K); row i is the predicted label distribution of
    instance ``ids[i]`` whose true label is ``labels[i]``.
    """

    ids: np.ndarray
    labels: np.ndarray
    probs: np.ndarray
    label_space: LabelSpace = field(default=None)

    def __post_init__(self):
        probs = self.probs
        if not (isinstance(probs, np.ndarray) and not probs.flags.writeable):
            probs = as_prob_matrix(probs)
        n, K = probs.shape
        space = self.label_space or LabelSpace(K)
        if space.size != K:
            raise DataError(f"probability vectors have dimension {K}, label space has {space.size}")
        ids = np.array([str(i) for i in self.ids], dtype=object)
        labels = np.asarray(self.labels, dtype=np.int64)
        if ids.shape != (n,) or labels.shape != (n,):
            raise DataError("ids, labels and probs disagree on the number of instances")
        if len(set(ids.tolist())) != n:
            raise DataError("instance ids must be unique")
        if n and (labels.min() < 0 or labels.max() >= K):
            i = int(np.flatnonzero((labels < 0) | (labels >= K))[0])
            raise UnknownLabel(f"instance {ids[i]!r}: label {labels[i]} not in [0, {K})")
        ids.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "label_space", space)

    @classmethod
    def from_arrays(cls, probs, labels, ids=None, label_space=None) -> "ScoreMatrix":
        probs = np.asarray(probs, dtype=float)
        if ids is None:
            ids = [str(i) for i in range(len(probs))]
        return cls(ids=ids, labels=labels, probs=probs, label_space=label_space)

    def __len__(self):
        return len(self.labels)

    @property
    def K(self) -> int:
        return self.label_space.size

    def take(self, index) -> "ScoreMatrix":
        index = np.asarray(index, dtype=np.int64)
        probs = self.probs[index]
        probs.setflags(write=False)
        return ScoreMatrix(self.ids[index], self.labels[index], probs, self.label_space)

    def true_label_probs(self) -> np.ndarray:
        return self.probs[np.arange(len(self)), self.labels]


@dataclass(frozen=True)
class SplitSpec:
    """Fold fractions in the order (validation, test, calibration)."""

    fractions: tuple[float, float, float] = (0.25, 0.25, 0.5)
    seed: int = 0

    def __post_init__(self):
        f = tuple(float(x) for x in self.fractions)
        if len(f) != 3 or any(x < 0 for x in f) or abs(sum(f) - 1.0) > 1e-9:
            raise DataError(f"split fractions must be 3 nonnegative numbers summing to 1, got {self.fractions}")
        object.__setattr__(self, "fractions", f)


def split(matrix: ScoreMatrix, spec: SplitSpec, required: Sequence[bool] = (True, True, True)):
    """Partition ``matrix`` into (validation, test, calibration) folds.

    Fold sizes are ``floor(f * n)`` for validation and test; the calibration
    fold takes the remainder. ``required`` flags the folds that must be
    nonempty.
    """
    n = len(matrix)
    if n < 3:
        raise EmptyFold(f"need at least 3 instances to split, got {n}")
    n_val = int(np.floor(spec.fractions[0] * n))
    n_test = int(np.floor(spec.fractions[1] * n))
    sizes = (n_val, n_test, n - n_val - n_test)
    for name, size, need in zip(("validation", "test", "calibration"), sizes, required):
        if need and size == 0:
            raise EmptyFold(f"{name} fold is empty (n={n}, fractions={spec.fractions})")
    perm = np.random.default_rng(spec.seed).permutation(n)
    cuts = np.cumsum(sizes)[:-1]
    return tuple(matrix.take(np.sort(idx)) for idx in np.split(perm, cuts))


def sort_descending(p) -> np.ndarray:
    """Labels ordered by decreasing probability, ties by ascending label id.

    Works row-wise on a 2-D array.
    """
    p = np.asarray(p, dtype=float)
    return np.argsort(-p, axis=-1, kind="stable")
