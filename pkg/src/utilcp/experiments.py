"""Multi-run benchmarks and the verification suites.

The defaults here describe two synthetic tasks used throughout the tests and
the command line:

* ``separable``: 20 labels, sharp Dirichlet(0.02) conditionals (an accurate
  classifier), penalties drawn from {1/4, 1/2, 3/4, 1}, logit noise 0.5.
* ``hierarchical``: 20 labels under 5 categories of 4, mass concentrated in
  few categories, coverage cost over the categories, logit noise 0.5.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .conformal import calibrate, tune_lambda
from .core import ScoreMatrix, SplitSpec, split
from .evaluation import EvaluationReport, evaluate
from .losses import COVERAGE, MAX_DISTANCE, SEPARABLE, CostModel, batch_set_loss
from .scores import ScoreMethod, label_scores
from .synth import (
    SyntheticTask,
    brute_force_optimal,
    coverage_trial,
    default_hierarchy,
    default_penalties,
    generate,
    make_task,
    neyman_pearson_rule,
    tuned_coverage_trial,
)

ALPHA = 0.1
LAMBDA_GRID = (0.001, 0.01, 0.1, 1.0, 10.0)
# (validation, test, calibration): calibration takes half the data
FRACTIONS = (0.25, 0.25, 0.5)
RUNS = 10


@dataclass(frozen=True)
class TaskSpec:
    kind: str = "separable"
    K: int = 20
    contexts: int = 5000
    concentration: float | None = None
    category_concentration: float = 0.3
    branching: int = 4
    temperature: float = 0.5
    cost: str | None = None
    seed: int = 1

    def build(self) -> tuple[SyntheticTask, CostModel]:
        if self.kind == "separable":
            conc = 0.02 if self.concentration is None else self.concentration
            task = make_task(self.K, self.contexts, concentration=conc, temperature=self.temperature, seed=self.seed)
            cost_kind = self.cost or SEPARABLE
            h = None
        elif self.kind == "hierarchical":
            h = default_hierarchy(self.K, self.branching)
            conc = 0.5 if self.concentration is None else self.concentration
            task = make_task(
                self.K,
                self.contexts,
                concentration=conc,
                category_concentration=self.category_concentration,
                hierarchy=h,
                temperature=self.temperature,
                seed=self.seed,
            )
            cost_kind = self.cost or COVERAGE
        else:
            raise ValueError(f"unknown task kind {self.kind!r}")
        if cost_kind == SEPARABLE:
            cost = CostModel.separable(default_penalties(self.K, self.seed))
        elif cost_kind == COVERAGE:
            cost = CostModel.coverage(h or default_hierarchy(self.K, self.branching))
        elif cost_kind == MAX_DISTANCE:
            cost = CostModel.max_distance(h or default_hierarchy(self.K, self.branching))
        else:
            raise ValueError(f"unknown cost kind {cost_kind!r}")
        return task, cost


def methods_for(cost: CostModel, alpha: float = ALPHA) -> list[str]:
    """Benchmark line-up: the ratio rule for separable costs, the greedy order otherwise.

    The greedy order ignores probability when costs are additive (it simply
    adds cheap labels first), so it is only benchmarked on set-level costs.
    """
    if cost.kind == SEPARABLE:
        return ["base", "penalized", "ratio"]
    return ["base", "penalized", "greedy"]


def coverage_methods(cost: CostModel) -> list[str]:
    """Every method applicable to ``cost``; coverage holds for all of them."""
    names = ["base", "penalized"]
    if cost.kind == SEPARABLE:
        names.append("ratio")
    return names + ["greedy"]


def fixed_method(name: str, cost: CostModel, alpha: float = ALPHA, lam: float = 1.0) -> ScoreMethod:
    if name == "base":
        return ScoreMethod.base()
    if name == "penalized":
        return ScoreMethod.penalized(cost, lam)
    if name == "ratio":
        return ScoreMethod.ratio(cost)
    if name == "greedy":
        return ScoreMethod.greedy(cost, alpha)
    raise ValueError(f"unknown method {name!r}")


# benchmark -------------------------------------------------------------------


@dataclass
class BenchResult:
    reports: list[EvaluationReport]
    chosen_lambdas: list[float]
    per_lambda_loss: list[dict] = field(default_factory=list)


def run_benchmark(
    cost: CostModel,
    *,
    task: SyntheticTask | None = None,
    data: ScoreMatrix | None = None,
    methods: Sequence[str] | None = None,
    runs: int = RUNS,
    alpha: float = ALPHA,
    grid: Sequence[float] = LAMBDA_GRID,
    fractions=FRACTIONS,
    n: int = 4000,
    n_eval: int = 4000,
    seed: int = 0,
) -> BenchResult:
    """Run every method ``runs`` times on fresh folds.

    With a synthetic ``task`` each run draws ``n`` instances (split into
    validation/test/calibration) plus an independent evaluation sample of
    ``n_eval``. With a fixed ``data`` matrix each run reshuffles the folds
    and evaluates on the test fold, which the penalized method has also used
    to pick lambda.
    """
    if (task is None) == (data is None):
        raise ValueError("pass exactly one of task or data")
    methods = list(methods or methods_for(cost, alpha))
    reports, lambdas, lam_losses = [], [], []
    for r in range(runs):
        if task is not None:
            pool = generate(task, n, stream=seed * 100_003 + r)
            val, test, cal = split(pool, SplitSpec(fractions, seed + r))
            held_out = generate(task, n_eval, stream=seed * 100_003 + 50_000 + r)
        else:
            val, test, cal = split(data, SplitSpec(fractions, seed + r))
            held_out = test
        for name in methods:
            if name == "penalized":
                res = tune_lambda(grid, val, test, cal, alpha, cost)
                pred = res.final_predictor
                lambdas.append(res.chosen_lambda)
                lam_losses.append(res.per_lambda_loss)
            else:
                pred = calibrate(fixed_method(name, cost, alpha), cal, alpha)
            reports.append(evaluate(pred, held_out, cost, method_name=name, run_seed=seed + r))
    return BenchResult(reports, lambdas, lam_losses)


def adaptivity_spearman(report: EvaluationReport) -> float:
    """Spearman correlation between set size and mean true-label probability."""
    if len(report.adaptivity) < 2:
        return math.nan
    sizes = [a for a, _, _ in report.adaptivity]
    means = [b for _, b, _ in report.adaptivity]
    return float(stats.spearmanr(sizes, means).statistic)


# verification suites -----------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(fn: Callable[[], tuple[bool, str]], name: str) -> Check:
    t0 = time.perf_counter()
    ok, detail = fn()
    return Check(name, bool(ok), detail, time.perf_counter() - t0)


def sandwich_window(n_cal: int, alpha: float, slack: float) -> tuple[float, float]:
    """Coverage window ``[1 - alpha, 1 - alpha + 1/(n+1)]`` widened by ``slack``."""
    return 1 - alpha - slack, 1 - alpha + 1 / (n_cal + 1) + slack


def coverage_sandwich_checks(
    *,
    temperatures: Sequence[float] = (0.5,),
    n_cal: int = 1000,
    n_test: int = 2000,
    trials: int = 200,
    alpha: float = ALPHA,
    slack: float = 0.003,
    include_tuned: bool = True,
    seed: int = 1,
) -> list[Check]:
    """Mean coverage over repeated trials for every method on both default tasks."""
    lo, hi = sandwich_window(n_cal, alpha, slack)
    checks = []
    for temp in temperatures:
        for kind in ("separable", "hierarchical"):
            task, cost = TaskSpec(kind, temperature=temp, seed=seed).build()
            for name in coverage_methods(cost):
                def run(name=name, task=task, cost=cost):
                    m = fixed_method(name, cost, alpha)
                    res = coverage_trial(task, m, n_cal, n_test, trials, alpha, cost=cost)
                    return lo <= res.mean <= hi, f"mean coverage {res.mean:.5f} in [{lo:.4f}, {hi:.4f}]"

                label = "penalized(lambda=1)" if name == "penalized" else name
                checks.append(_timed(run, f"coverage {kind}/{label} T={temp:g}"))
            if include_tuned:
                def run_tuned(task=task, cost=cost):
                    # tuning folds are independent of calibration/test folds
                    res = tuned_coverage_trial(task, cost, LAMBDA_GRID, 500, 500, n_cal, n_test, trials, alpha)
                    return lo <= res.mean <= hi, f"mean coverage {res.mean:.5f} in [{lo:.4f}, {hi:.4f}]"

                checks.append(_timed(run_tuned, f"coverage {kind}/penalized(tuned) T={temp:g}"))
    return checks


def random_exhaustive_task(rng: np.random.Generator) -> tuple[SyntheticTask, CostModel, float]:
    """Small task plus an alpha at which the ratio rule's coverage is attained exactly.

    The alpha is placed at a gap between distinct ratio values, so no
    (context, label) pair sits exactly on the threshold.
    """
    while True:
        K = int(rng.integers(2, 6))
        C = int(rng.integers(1, 4))
        cond = rng.dirichlet(np.full(K, 1.0), size=C)
        marg = rng.dirichlet(np.full(C, 2.0))
        pen = rng.uniform(0.25, 1.0, size=K)
        task = SyntheticTask(cond, marg)
        cost = CostModel.separable(pen)
        ratio = (task.true_conditional / cost.penalties).ravel()
        weight = (task.context_marginal[:, None] * task.true_conditional).ravel()
        order = np.argsort(-ratio, kind="stable")
        gaps = np.flatnonzero(np.diff(ratio[order]) < -1e-9) + 1
        cum = np.cumsum(weight[order])
        cuts = [j for j in gaps if 0.05 < cum[j - 1] < 0.999]
        if not cuts:
            continue
        j = int(rng.choice(cuts))
        alpha = 1.0 - float(cum[j - 1])
        return task, cost, alpha


def neyman_pearson_check(tasks: int = 50, seed: int = 7, tol: float = 1e-9) -> Check:
    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(tasks):
            task, cost, alpha = random_exhaustive_task(rng)
            opt, _ = brute_force_optimal(task, cost, alpha)
            np_loss, *_ = neyman_pearson_rule(task, cost, alpha)
            worst = max(worst, abs(np_loss - opt))
        return worst <= tol, f"max |ratio rule - brute force| = {worst:.3g} over {tasks} tasks (tol {tol:g})"

    return _timed(run, "ratio rule optimality")


@dataclass
class TuningBoundResult:
    excess: np.ndarray
    bound: float
    fraction_within: float


def tuning_bound_experiment(
    *,
    runs: int = 500,
    n_val: int = 500,
    n_test: int = 500,
    n_population: int = 20000,
    delta: float = 0.1,
    alpha: float = ALPHA,
    grid: Sequence[float] = LAMBDA_GRID,
    spec: TaskSpec = TaskSpec("separable"),
) -> TuningBoundResult:
    """Excess population risk of the empirically chosen lambda.

    Each run calibrates every lambda on a fresh validation fold, picks the
    minimizer of the mean test-fold cost, and compares its population cost
    (estimated on one large held-out sample) with the best lambda's.
    """
    task, cost = spec.build()
    B = cost.bound_M
    grid = tuple(sorted(grid))
    population = generate(task, n_population, stream=900_001)
    pop_scores = {lam: label_scores(ScoreMethod.penalized(cost, lam), population.probs) for lam in grid}

    def population_loss(lam, tau):
        return float(batch_set_loss(cost, pop_scores[lam] <= tau).mean())

    excess = np.empty(runs)
    for r in range(runs):
        data = generate(task, n_val + n_test, stream=700_000 + r)
        val = data.take(np.arange(n_val))
        test = data.take(np.arange(n_val, n_val + n_test))
        emp, pop = {}, {}
        for lam in grid:
            m = ScoreMethod.penalized(cost, lam)
            tau = calibrate(m, val, alpha).threshold
            emp[lam] = float(batch_set_loss(cost, label_scores(m, test.probs) <= tau).mean())
            pop[lam] = population_loss(lam, tau)
        chosen = min(grid, key=lambda g: (emp[g], g))
        excess[r] = abs(pop[chosen] - min(pop.values()))
    bound = 2 * B * math.sqrt(math.log(2 * len(grid) / delta) / (2 * n_test))
    return TuningBoundResult(excess, bound, float(np.mean(excess <= bound)))


def tuning_bound_check(runs: int = 500, min_fraction: float = 0.9) -> Check:
    def run():
        res = tuning_bound_experiment(runs=runs)
        ok = res.fraction_within >= min_fraction
        return ok, (
            f"bound {res.bound:.4f} holds in {res.fraction_within:.1%} of {runs} runs "
            f"(max excess {res.excess.max():.4f})"
        )

    return _timed(run, "tuning generalization bound")


def verify_all(*, quick: bool = False) -> list[Check]:
    """Coverage sandwich, ratio-rule optimality and the tuning bound."""
    trials = 40 if quick else 200
    slack = 0.0075 if quick else 0.003
    checks = coverage_sandwich_checks(trials=trials, slack=slack)
    checks.append(neyman_pearson_check(tasks=10 if quick else 50))
    checks.append(tuning_bound_check(runs=100 if quick else 500))
    return checks


__all__ = [
    "ALPHA",
    "FRACTIONS",
    "LAMBDA_GRID",
    "RUNS",
    "BenchResult",
    "Check",
    "TaskSpec",
    "adaptivity_spearman",
    "coverage_methods",
    "coverage_sandwich_checks",
    "fixed_method",
    "methods_for",
    "neyman_pearson_check",
    "random_exhaustive_task",
    "run_benchmark",
    "sandwich_window",
    "tuning_bound_check",
    "tuning_bound_experiment",
    "verify_all",
]
