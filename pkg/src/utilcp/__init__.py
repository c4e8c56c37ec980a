"""Conformal prediction sets that minimize a downstream set cost.

Given predicted label probabilities and a cost on prediction sets, the
package calibrates set-valued predictors with marginal coverage ``1 - alpha``
using one of four nonconformity scores: the cumulative-mass score (``base``),
its cost-penalized variant (``penalized``), the probability-to-penalty ratio
(``ratio``, separable costs) and the cost-aware greedy order (``greedy``).
"""

from .conformal import (
    CalibratedPredictor,
    TuningResult,
    calibrate,
    conformal_quantile,
    predict_set,
    tune_lambda,
)
from .core import LabelSpace, ScoreMatrix, SplitSpec, sort_descending, split
from .evaluation import EvaluationReport, compare_methods, evaluate, median_of_means
from .greedy import GreedyTrace, greedy_build, greedy_orders, greedy_set
from .hierarchy import Hierarchy
from .losses import CostModel, batch_set_loss, is_separable_witness, marginal_gains, set_loss
from .scores import (
    ScoreMethod,
    aps_rho,
    greedy_order_score,
    label_scores,
    penalized_score,
    ratio_score,
)

__version__ = "0.1.0"
