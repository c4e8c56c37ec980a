"""Split-conformal calibration and the three-fold lambda tuning pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import ScoreMatrix, as_prob_matrix
from .errors import DataError, EmptyCalibration, EmptyFold, InvalidAlpha, PredictorMismatch
from .losses import CostModel, batch_set_loss
from .scores import BASE, GREEDY, PENALIZED, RATIO, ScoreMethod, label_scores, true_label_scores

FORMAT_VERSION = 1


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")


def quantile_rank(n: int, alpha: float) -> int:
    """``ceil((n + 1) * (1 - alpha))`` in exact arithmetic.

    ``alpha`` is read through its shortest decimal representation, so that
    ``alpha=0.1`` behaves as 1/10 rather than as its binary approximation.
    """
    a = Fraction(repr(float(alpha)))
    return math.ceil((n + 1) * (1 - a))


def conformal_quantile(scores, alpha: float) -> float:
    """The ``ceil((n+1)(1-alpha))``-th smallest score, or +inf if that rank exceeds n."""
    _check_alpha(alpha)
    s = np.asarray(scores, dtype=float).ravel()
    n = s.size
    if n == 0:
        raise EmptyCalibration("cannot calibrate on an empty set of scores")
    k = quantile_rank(n, alpha)
    if k > n:
        return math.inf
    return float(np.partition(s, k - 1)[k - 1])


@dataclass(frozen=True, eq=False)
class CalibratedPredictor:
    method: ScoreMethod
    threshold: float
    alpha: float
    calibration_size: int

    @property
    def negated(self) -> bool:
        return self.method.negated

    def scores(self, probs) -> np.ndarray:
        return label_scores(self.method, probs)

    def predict_masks(self, probs) -> np.ndarray:
        """Boolean (n, K) membership of every label in each prediction set."""
        P = np.atleast_2d(np.asarray(probs, dtype=float))
        if math.isinf(self.threshold) and self.threshold > 0:
            return np.ones(P.shape, dtype=bool)
        return self.scores(P) <= self.threshold

    def predict_set(self, p) -> frozenset[int]:
        return predict_set(self, p)

    def to_record(self) -> str:
        """Flat ``key=value`` text record, one field per line."""
        m = self.method
        fields = {
            "format": f"utilcp-predictor/{FORMAT_VERSION}",
            "method": m.kind,
            "lambda": repr(m.lam),
            "alpha": repr(float(self.alpha)),
            "n": str(self.calibration_size),
            "threshold": repr(float(self.threshold)),
            "negated": str(self.negated).lower(),
            "cost_digest": m.cost.digest() if m.cost is not None else "-",
        }
        if m.alpha is not None:
            fields["method_alpha"] = repr(float(m.alpha))
        return "".join(f"{k}={v}\n" for k, v in fields.items())

    @classmethod
    def from_record(cls, text: str, cost: CostModel | None = None) -> "CalibratedPredictor":
        """Parse :meth:`to_record` output; ``cost`` must match the stored digest."""
        fields = {}
        for line_no, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError(f"predictor record line {line_no}: expected key=value")
            k, v = line.split("=", 1)
            fields[k.strip()] = v.strip()
        if fields.get("format") != f"utilcp-predictor/{FORMAT_VERSION}":
            raise DataError(f"unsupported predictor record format {fields.get('format')!r}")
        try:
            kind = fields["method"]
            digest = fields["cost_digest"]
            if kind != BASE:
                if cost is None:
                    raise DataError(f"a {kind} predictor needs its cost model")
                if cost.digest() != digest:
                    raise PredictorMismatch(
                        f"predictor was calibrated with cost model {digest}, got {cost.digest()}"
                    )
            method_alpha = float(fields["method_alpha"]) if "method_alpha" in fields else None
            method = ScoreMethod(kind, cost if kind != BASE else None, float(fields["lambda"]), method_alpha)
            return cls(method, float(fields["threshold"]), float(fields["alpha"]), int(fields["n"]))
        except KeyError as e:
            raise DataError(f"predictor record is missing field {e}") from None
        except ValueError as e:
            if isinstance(e, DataError):
                raise
            raise DataError(f"bad predictor record: {e}") from None


def calibrate(method: ScoreMethod, cal: ScoreMatrix, alpha: float) -> CalibratedPredictor:
    """Fit the conformal threshold of ``method`` on the calibration fold."""
    _check_alpha(alpha)
    if len(cal) == 0:
        raise EmptyCalibration("calibration fold is empty")
    s = true_label_scores(method, cal.probs, cal.labels)
    return CalibratedPredictor(method, conformal_quantile(s, alpha), float(alpha), len(cal))


def predict_set(pred: CalibratedPredictor, p) -> frozenset[int]:
    """Labels whose nonconformity score is at most the threshold."""
    P = as_prob_matrix(np.atleast_2d(np.asarray(p, dtype=float)))
    return frozenset(np.flatnonzero(pred.predict_masks(P)[0]).tolist())


@dataclass(frozen=True, eq=False)
class TuningResult:
    grid: tuple[float, ...]
    per_lambda_loss: dict
    chosen_lambda: float
    final_predictor: CalibratedPredictor
    validation_thresholds: dict = field(default_factory=dict)


def mean_set_loss(pred: CalibratedPredictor, data: ScoreMatrix, cost: CostModel) -> float:
    return float(np.mean(batch_set_loss(cost, pred.predict_masks(data.probs))))


def tune_lambda(
    grid: Sequence[float],
    val: ScoreMatrix,
    test: ScoreMatrix,
    cal: ScoreMatrix,
    alpha: float,
    cost: CostModel,
) -> TuningResult:
    """Pick the penalty weight with the lowest test-fold cost, then recalibrate.

    For each lambda in ``grid`` the penalized score is calibrated on ``val``
    and its mean set cost measured on ``test``. The minimizer (smallest
    lambda on ties) is recalibrated on the untouched ``cal`` fold, which keeps
    the final threshold exchangeable with future data.
    """
    _check_alpha(alpha)
    grid = tuple(sorted(float(g) for g in grid))
    if not grid:
        raise DataError("lambda grid is empty")
    if any(g < 0 for g in grid):
        raise DataError("lambda grid values must be >= 0")
    for name, fold in (("validation", val), ("test", test), ("calibration", cal)):
        if len(fold) == 0:
            raise EmptyFold(f"{name} fold is empty")
    losses, thresholds = {}, {}
    for lam in grid:
        pred = calibrate(ScoreMethod.penalized(cost, lam), val, alpha)
        thresholds[lam] = pred.threshold
        losses[lam] = mean_set_loss(pred, test, cost)
    best = min(grid, key=lambda g: (losses[g], g))
    final = calibrate(ScoreMethod.penalized(cost, best), cal, alpha)
    return TuningResult(grid, losses, best, final, thresholds)


__all__ = [
    "BASE",
    "GREEDY",
    "PENALIZED",
    "RATIO",
    "CalibratedPredictor",
    "TuningResult",
    "calibrate",
    "conformal_quantile",
    "mean_set_loss",
    "predict_set",
    "quantile_rank",
    "tune_lambda",
]
