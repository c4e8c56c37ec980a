"""Coverage, cost and adaptivity metrics for calibrated predictors."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .conformal import CalibratedPredictor
from .core import ScoreMatrix
from .errors import EmptyInput, EmptyTest, IncompatibleReports, MissingBaseline
from .losses import CostModel, batch_set_loss

# (label, smallest size, largest size); a leading "0" row catches empty sets
DEFAULT_BUCKETS = (
    ("0", 0, 0),
    ("1", 1, 1),
    ("2-4", 2, 4),
    ("5-9", 5, 9),
    ("10-49", 10, 49),
    ("50-99", 50, 99),
    ("100+", 100, math.inf),
)

UNDEFINED = "–"


@dataclass
class BucketRow:
    label: str
    count: int
    coverage: float | None


@dataclass
class EvaluationReport:
    method_name: str
    alpha: float
    n_test: int
    coverage: float
    mean_loss: float
    mean_set_size: float
    bucket_rows: list[BucketRow]
    adaptivity: list[tuple[int, float, float]]
    run_seed: int = 0
    cost_digest: str = ""
    covered_count: int = field(default=0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["adaptivity"] = [list(row) for row in self.adaptivity]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        d = dict(d)
        d["bucket_rows"] = [BucketRow(**r) for r in d["bucket_rows"]]
        d["adaptivity"] = [(int(a), float(b), float(c)) for a, b, c in d["adaptivity"]]
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "EvaluationReport":
        return cls.from_dict(json.loads(text))

    def bucket_coverage(self) -> float:
        """Coverage recomputed from the size buckets."""
        covered = sum(round(r.count * r.coverage) for r in self.bucket_rows if r.count)
        return covered / self.n_test

    def to_table(self) -> str:
        """Human-readable summary with the conditional-coverage table."""
        lines = [
            f"method      {self.method_name}",
            f"alpha       {self.alpha:g}",
            f"n_test      {self.n_test}",
            f"coverage    {self.coverage:.4f}",
            f"mean_loss   {self.mean_loss:.4f}",
            f"mean_size   {self.mean_set_size:.4f}",
            "",
            f"{'size':<8}{'count':>8}{'coverage':>10}",
        ]
        for r in self.bucket_rows:
            cov = UNDEFINED if r.coverage is None else f"{r.coverage:.2f}"
            lines.append(f"{r.label:<8}{r.count:>8}{cov:>10}")
        lines += ["", f"{'size':<8}{'mean_p_true':>12}{'std':>10}"]
        for size, mean, std in self.adaptivity:
            lines.append(f"{size:<8}{mean:>12.4f}{std:>10.4f}")
        return "\n".join(lines) + "\n"


def _bucket_rows(sizes, covered, buckets):
    rows = []
    for label, lo, hi in buckets:
        inside = (sizes >= lo) & (sizes <= hi)
        count = int(inside.sum())
        cov = float(covered[inside].mean()) if count else None
        rows.append(BucketRow(label, count, cov))
    return rows


def adaptivity_curve(sizes, p_true) -> list[tuple[int, float, float]]:
    """Mean and std of the true-label probability for each observed set size."""
    sizes = np.asarray(sizes)
    p_true = np.asarray(p_true, dtype=float)
    out = []
    for s in np.unique(sizes):
        v = p_true[sizes == s]
        out.append((int(s), float(v.mean()), float(v.std())))
    return out


def evaluate(
    pred: CalibratedPredictor,
    test: ScoreMatrix,
    cost: CostModel,
    *,
    method_name: str | None = None,
    run_seed: int = 0,
    buckets=DEFAULT_BUCKETS,
) -> EvaluationReport:
    """Apply ``pred`` to every test instance and aggregate the metrics."""
    n = len(test)
    if n == 0:
        raise EmptyTest("test fold is empty")
    masks = pred.predict_masks(test.probs)
    sizes = masks.sum(axis=1)
    covered = masks[np.arange(n), test.labels]
    losses = batch_set_loss(cost, masks)
    # bucket rows must cover every size
    edges = sorted((lo, hi) for _, lo, hi in buckets)
    if edges[0][0] > 0 or any(b[0] != a[1] + 1 for a, b in zip(edges, edges[1:])) or edges[-1][1] < test.K:
        raise ValueError("size buckets must tile 0..K without gaps")
    return EvaluationReport(
        method_name=method_name or pred.method.name,
        alpha=float(pred.alpha),
        n_test=n,
        coverage=float(covered.mean()),
        mean_loss=float(math.fsum(losses) / n),
        mean_set_size=float(sizes.mean()),
        bucket_rows=_bucket_rows(sizes, covered, buckets),
        adaptivity=adaptivity_curve(sizes, test.true_label_probs()),
        run_seed=int(run_seed),
        cost_digest=cost.digest(),
        covered_count=int(covered.sum()),
    )


def median_of_means(per_run_means: Sequence[float]) -> float:
    v = np.asarray(per_run_means, dtype=float)
    if v.size == 0:
        raise EmptyInput("median of an empty list")
    return float(np.median(v))


@dataclass
class ComparisonRow:
    method: str
    median_loss: float
    std_loss: float
    runs: int
    reduction: float
    median_coverage: float


def compare_methods(reports: Sequence[EvaluationReport], baseline_name: str) -> list[ComparisonRow]:
    """Aggregate per-run reports into one row per method.

    ``reduction`` is ``1 - median / baseline_median``. Rows follow the order
    in which methods first appear.
    """
    if not reports:
        raise EmptyInput("no reports to compare")
    alphas = {r.alpha for r in reports}
    digests = {r.cost_digest for r in reports}
    if len(alphas) > 1 or len(digests) > 1:
        raise IncompatibleReports(f"reports disagree on alpha {sorted(alphas)} or cost model {sorted(digests)}")
    by_method: dict[str, list[EvaluationReport]] = {}
    for r in reports:
        by_method.setdefault(r.method_name, []).append(r)
    if baseline_name not in by_method:
        raise MissingBaseline(f"baseline {baseline_name!r} not among {sorted(by_method)}")
    base = median_of_means([r.mean_loss for r in by_method[baseline_name]])
    rows = []
    for name, rs in by_method.items():
        losses = np.array([r.mean_loss for r in rs])
        med = median_of_means(losses)
        std = float(losses.std(ddof=1)) if len(losses) > 1 else 0.0
        red = 1.0 - med / base if base != 0 else 0.0
        rows.append(ComparisonRow(name, med, std, len(rs), red, median_of_means([r.coverage for r in rs])))
    return rows


def comparison_table(rows: Sequence[ComparisonRow]) -> str:
    """Columnar text: method, median loss, std, runs, reduction, coverage."""
    width = max(len("method"), *(len(r.method) for r in rows))
    out = [f"{'method':<{width}}  {'median_loss':>12}  {'std':>10}  {'runs':>4}  {'reduction':>9}  {'coverage':>8}"]
    for r in rows:
        out.append(
            f"{r.method:<{width}}  {r.median_loss:>12.4f}  {r.std_loss:>10.4f}  {r.runs:>4d}  "
            f"{r.reduction:>9.4f}  {r.median_coverage:>8.4f}"
        )
    return "\n".join(out) + "\n"
