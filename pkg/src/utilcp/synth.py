"""Synthetic classification tasks with a known conditional distribution.

Contexts are discrete, so exchangeability is exact and the optimal
set-valued rule can be found by enumeration on small tasks. The classifier is
simulated by perturbing the true conditional in logit space; temperature 0
gives the oracle classifier.

All task parameters here (context counts, Dirichlet concentrations, default
penalties) are choices of this package, not values taken from any published
benchmark.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .conformal import calibrate, tune_lambda
from .core import ScoreMatrix, as_prob_matrix
from .errors import InvalidTask, TooLarge
from .hierarchy import Hierarchy
from .losses import SEPARABLE, CostModel, batch_set_loss
from .scores import ScoreMethod

# exhaustive-regime caps for the brute-force oracle
SEPARABLE_MAX_K = 12
GENERAL_MAX_K = 5
MAX_CONTEXTS = 4

FEASIBILITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SyntheticTask:
    true_conditional: np.ndarray
    context_marginal: np.ndarray
    noise_temperature: float = 0.0
    hierarchy: Hierarchy | None = None
    seed: int = 0

    def __post_init__(self):
        try:
            cond = as_prob_matrix(self.true_conditional)
            marg = as_prob_matrix(np.asarray(self.context_marginal, dtype=float)[None, :])[0]
        except ValueError as e:
            raise InvalidTask(str(e)) from None
        if cond.shape[0] != marg.shape[0]:
            raise InvalidTask("one marginal weight per context is required")
        if cond.shape[1] < 2:
            raise InvalidTask("need K >= 2")
        if not self.noise_temperature >= 0:
            raise InvalidTask("noise temperature must be >= 0")
        if self.hierarchy is not None and self.hierarchy.K != cond.shape[1]:
            raise InvalidTask("hierarchy and conditional disagree on K")
        object.__setattr__(self, "true_conditional", cond)
        object.__setattr__(self, "context_marginal", marg)

    @property
    def K(self) -> int:
        return self.true_conditional.shape[1]

    @property
    def context_count(self) -> int:
        return self.true_conditional.shape[0]

    def with_temperature(self, temperature: float) -> "SyntheticTask":
        return SyntheticTask(self.true_conditional, self.context_marginal, temperature, self.hierarchy, self.seed)


def make_task(
    K: int = 20,
    context_count: int = 5000,
    *,
    concentration: float = 0.5,
    temperature: float = 0.0,
    hierarchy: Hierarchy | None = None,
    category_concentration: float = 0.3,
    seed: int = 0,
) -> SyntheticTask:
    """Draw a random task.

    Each context's label distribution is Dirichlet(``concentration``). With a
    ``hierarchy``, mass is first split across its categories with
    Dirichlet(``category_concentration``) and then within each category, so
    that probable labels cluster inside few categories.
    """
    if context_count < 1:
        raise InvalidTask("context_count must be >= 1")
    rng = np.random.default_rng([seed, 0])
    if hierarchy is None:
        cond = rng.dirichlet(np.full(K, concentration), size=context_count)
    else:
        if hierarchy.K != K:
            raise InvalidTask("hierarchy and K disagree")
        cats = hierarchy.categories()
        cond = np.zeros((context_count, K))
        cat_w = rng.dirichlet(np.full(len(cats), category_concentration), size=context_count)
        for j, c in enumerate(cats):
            idx = sorted(c)
            cond[:, idx] += cat_w[:, [j]] * rng.dirichlet(np.full(len(idx), concentration), size=context_count)
        cond /= cond.sum(axis=1, keepdims=True)
    # keep every label possible so logits stay finite under noise
    cond = np.maximum(cond, 1e-12)
    cond /= cond.sum(axis=1, keepdims=True)
    marg = np.full(context_count, 1.0 / context_count)
    return SyntheticTask(cond, marg, temperature, hierarchy, seed)


def generate(task: SyntheticTask, n: int, *, stream: int = 0) -> ScoreMatrix:
    """Sample ``n`` labelled instances with noisy classifier outputs.

    Deterministic in ``(task.seed, stream)``.
    """
    if n < 1:
        raise InvalidTask("n must be >= 1")
    rng = np.random.default_rng([task.seed, 1, stream])
    ctx = rng.choice(task.context_count, size=n, p=task.context_marginal)
    rows = task.true_conditional[ctx]
    cum = np.cumsum(rows, axis=1)
    u = rng.random(n) * cum[:, -1]
    labels = np.minimum((cum <= u[:, None]).sum(axis=1), task.K - 1)
    if task.noise_temperature == 0:
        probs = rows
    else:
        noise = rng.standard_normal(rows.shape)
        logits = np.log(rows) + task.noise_temperature * noise
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        probs /= probs.sum(axis=1, keepdims=True)
    probs = as_prob_matrix(probs)
    return ScoreMatrix.from_arrays(probs, labels, ids=[f"s{stream}-{i}" for i in range(n)])


def default_penalties(K: int, seed: int = 0) -> np.ndarray:
    """Per-label penalties drawn uniformly from {1/4, 2/4, 3/4, 1}."""
    rng = np.random.default_rng([seed, 2])
    return rng.integers(1, 5, size=K) / 4.0


def default_hierarchy(K: int = 20, branching: int = 4) -> Hierarchy:
    """Two-level tree: ``K // branching`` categories of ``branching`` leaves."""
    if K % branching:
        raise InvalidTask(f"K={K} is not a multiple of branching={branching}")
    return Hierarchy.balanced((K // branching, branching))


# brute-force oracle ----------------------------------------------------------


@dataclass(frozen=True)
class OracleResult:
    optimal_loss: float
    optimal_coverage: float
    np_loss: float
    np_coverage: float
    np_threshold: float


def _pareto(points: np.ndarray) -> np.ndarray:
    """Keep (weight, cost) points not dominated by a heavier, cheaper one."""
    order = np.lexsort((points[:, 1], -points[:, 0]))
    pts = points[order]
    keep = []
    best = np.inf
    for i, (w, c) in enumerate(pts):
        if c < best:
            keep.append(i)
            best = c
    return pts[keep]


def _min_cost(option_lists, target):
    frontier = np.zeros((1, 2))
    for opts in option_lists:
        merged = (frontier[:, None, :] + opts[None, :, :]).reshape(-1, 2)
        frontier = _pareto(merged)
    ok = frontier[:, 0] >= target - FEASIBILITY_TOL
    i = np.flatnonzero(ok)[np.argmin(frontier[ok, 1])]
    return float(frontier[i, 1]), float(frontier[i, 0])


def brute_force_optimal(task: SyntheticTask, cost: CostModel, alpha: float) -> tuple[float, float]:
    """Minimum expected set cost over all deterministic rules context -> set
    with coverage at least ``1 - alpha``; returns (loss, coverage).

    Separable costs decompose over (context, label) items and are solved as
    an exact 0/1 knapsack over Pareto frontiers. Other costs enumerate all
    2^K sets per context.
    """
    C, K = task.true_conditional.shape
    if C > MAX_CONTEXTS:
        raise TooLarge(f"oracle handles at most {MAX_CONTEXTS} contexts, got {C}")
    w = task.context_marginal[:, None] * task.true_conditional
    if cost.kind == SEPARABLE:
        if K > SEPARABLE_MAX_K:
            raise TooLarge(f"separable oracle handles K <= {SEPARABLE_MAX_K}, got {K}")
        c = task.context_marginal[:, None] * cost.penalties[None, :]
        options = [np.array([[0.0, 0.0], [w[i, y], c[i, y]]]) for i in range(C) for y in range(K)]
    else:
        if K > GENERAL_MAX_K:
            raise TooLarge(f"general oracle handles K <= {GENERAL_MAX_K}, got {K}")
        masks = np.array(list(itertools.product([False, True], repeat=K)), dtype=bool)
        set_costs = batch_set_loss(cost, masks)
        options = [
            np.column_stack([masks @ w[i], task.context_marginal[i] * set_costs]) for i in range(C)
        ]
    return _min_cost(options, 1.0 - alpha)


def neyman_pearson_rule(task: SyntheticTask, cost: CostModel, alpha: float):
    """Threshold rule on ``p(y|x) / penalty(y)``.

    Returns ``(loss, coverage, threshold, mask)`` where ``mask[x, y]`` marks
    the included (context, label) pairs: every pair whose ratio reaches the
    largest threshold that still gives coverage ``1 - alpha``.
    """
    w = task.context_marginal[:, None] * task.true_conditional
    c = task.context_marginal[:, None] * cost.penalties[None, :]
    ratio = task.true_conditional / cost.penalties[None, :]
    flat = ratio.ravel()
    order = np.argsort(-flat, kind="stable")
    cum = np.cumsum(w.ravel()[order])
    hit = np.flatnonzero(cum >= 1.0 - alpha - FEASIBILITY_TOL)
    idx = hit[0] if hit.size else len(order) - 1
    t = float(flat[order[idx]])
    mask = ratio >= t
    return float(c[mask].sum()), float(w[mask].sum()), t, mask


def oracle_optimal_loss(task: SyntheticTask, cost: CostModel, alpha: float) -> OracleResult:
    """Brute-force optimum alongside the ratio-threshold rule's loss.

    ``alpha`` may be 1, where the empty rule is feasible and both losses are 0.
    """
    if not 0 < alpha <= 1:
        raise InvalidTask(f"alpha must lie in (0, 1], got {alpha}")
    if cost.kind != SEPARABLE:
        raise InvalidTask("the ratio rule needs a separable cost")
    opt, opt_cov = brute_force_optimal(task, cost, alpha)
    if alpha == 1:
        return OracleResult(opt, opt_cov, 0.0, 0.0, np.inf)
    np_loss, np_cov, t, _ = neyman_pearson_rule(task, cost, alpha)
    return OracleResult(opt, opt_cov, np_loss, np_cov, t)


# coverage experiments --------------------------------------------------------


@dataclass(frozen=True)
class CoverageTrials:
    mean: float
    coverages: np.ndarray
    thresholds: np.ndarray
    mean_losses: np.ndarray


def coverage_trial(
    task: SyntheticTask,
    method: ScoreMethod,
    n_cal: int,
    n_test: int,
    trials: int,
    alpha: float,
    *,
    cost: CostModel | None = None,
    first_stream: int = 0,
) -> CoverageTrials:
    """Repeat draw -> calibrate -> measure coverage with fresh samples.

    Trial ``t`` uses data stream ``first_stream + t`` of the task.
    """
    if trials < 1:
        raise InvalidTask("trials must be >= 1")
    cost = cost or method.cost
    covs, taus, losses = [], [], []
    for t in range(trials):
        data = generate(task, n_cal + n_test, stream=first_stream + t)
        cal = data.take(np.arange(n_cal))
        test = data.take(np.arange(n_cal, n_cal + n_test))
        pred = calibrate(method, cal, alpha)
        masks = pred.predict_masks(test.probs)
        covs.append(masks[np.arange(n_test), test.labels].mean())
        taus.append(pred.threshold)
        losses.append(batch_set_loss(cost, masks).mean() if cost is not None else np.nan)
    covs = np.array(covs)
    return CoverageTrials(float(covs.mean()), covs, np.array(taus), np.array(losses))


def tuned_coverage_trial(
    task: SyntheticTask,
    cost: CostModel,
    grid,
    n_val: int,
    n_tune: int,
    n_cal: int,
    n_test: int,
    trials: int,
    alpha: float,
    *,
    first_stream: int = 0,
) -> CoverageTrials:
    """Coverage of the full tune-then-recalibrate penalized pipeline."""
    covs, taus, losses = [], [], []
    sizes = np.cumsum([0, n_val, n_tune, n_cal, n_test])
    for t in range(trials):
        data = generate(task, int(sizes[-1]), stream=first_stream + t)
        val, tune, cal, test = (data.take(np.arange(a, b)) for a, b in zip(sizes[:-1], sizes[1:]))
        res = tune_lambda(grid, val, tune, cal, alpha, cost)
        masks = res.final_predictor.predict_masks(test.probs)
        covs.append(masks[np.arange(n_test), test.labels].mean())
        taus.append(res.final_predictor.threshold)
        losses.append(batch_set_loss(cost, masks).mean())
    covs = np.array(covs)
    return CoverageTrials(float(covs.mean()), covs, np.array(taus), np.array(losses))
