"""Run configuration: an INI file with ``[run]``, ``[cost]`` and ``[task]`` sections.

Command-line flags override file values, which override the defaults below.
Relative paths in ``[cost]`` resolve against the config file's directory.

Example::

    [run]
    alpha = 0.1
    method = ratio
    grid = 0.001, 0.01, 0.1, 1, 10
    ; validation, test, calibration
    fractions = 0.25, 0.25, 0.5
    runs = 10
    seed = 0

    [cost]
    kind = separable
    costs = costs.csv

    [task]
    kind = separable
    temperature = 0.5
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from .core import SplitSpec
from .errors import DataError
from .experiments import ALPHA, FRACTIONS, LAMBDA_GRID, RUNS, TaskSpec
from .hierarchy import Hierarchy
from .io import load_categories, load_costs, load_hierarchy
from .losses import COVERAGE, KINDS, MAX_DISTANCE, SEPARABLE, CostModel
from .scores import METHOD_KINDS


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


@dataclass
class CostSpec:
    kind: str | None = None
    costs: Path | None = None
    hierarchy: Path | None = None
    categories: Path | None = None
    bound: float | None = None

    def build(self, K: int | None = None) -> CostModel | None:
        """Cost model from files, or None when nothing is configured."""
        if self.kind is None and not (self.costs or self.hierarchy or self.categories):
            return None
        kind = self.kind or (SEPARABLE if self.costs else COVERAGE if self.categories else MAX_DISTANCE)
        if kind not in KINDS:
            raise DataError(f"unknown cost kind {kind!r}")
        if kind == SEPARABLE:
            if not self.costs:
                raise DataError("separable cost needs a costs file")
            return CostModel.separable(load_costs(self.costs, K), bound=self.bound)
        h: Hierarchy | None = load_hierarchy(self.hierarchy) if self.hierarchy else None
        if kind == MAX_DISTANCE:
            if h is None:
                raise DataError("max_distance cost needs a hierarchy file")
            return CostModel.max_distance(h, bound=self.bound)
        if self.categories:
            size = K if K is not None else (h.K if h is not None else None)
            cats = load_categories(self.categories, size)
            if size is None:
                size = max(max(c) for c in cats) + 1
            return CostModel.coverage(h, categories=cats, K=size, bound=self.bound)
        if h is None:
            raise DataError("coverage cost needs a hierarchy or categories file")
        return CostModel.coverage(h, bound=self.bound)


@dataclass
class RunConfig:
    alpha: float = ALPHA
    method: str = "base"
    lam: float = 1.0
    grid: tuple[float, ...] = LAMBDA_GRID
    fractions: tuple[float, float, float] = FRACTIONS
    runs: int = RUNS
    seed: int = 0
    cost: CostSpec = field(default_factory=CostSpec)
    task: TaskSpec = field(default_factory=TaskSpec)
    n: int = 4000
    n_eval: int = 4000

    def validate(self) -> "RunConfig":
        if not 0 < self.alpha < 1:
            raise DataError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.method not in METHOD_KINDS:
            raise DataError(f"method must be one of {METHOD_KINDS}, got {self.method!r}")
        if not self.grid or any(g < 0 for g in self.grid):
            raise DataError("lambda grid must be nonempty with values >= 0")
        if self.lam < 0:
            raise DataError("lambda must be >= 0")
        SplitSpec(self.fractions, self.seed)
        if self.runs < 1:
            raise DataError("runs must be >= 1")
        return self

    def cost_model(self, K: int | None = None) -> CostModel:
        """Configured cost model, falling back to the synthetic task's."""
        m = self.cost.build(K)
        if m is None:
            m = self.task.build()[1]
        if K is not None and m.K != K:
            raise DataError(f"cost model covers {m.K} labels, data has {K}")
        return m


def load_config(path=None) -> RunConfig:
    cfg = RunConfig()
    if path is None:
        return cfg
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as e:
        raise DataError(f"cannot parse config {path}: {e}") from None
    base = path.parent
    try:
        if parser.has_section("run"):
            s = parser["run"]
            cfg.alpha = s.getfloat("alpha", cfg.alpha)
            cfg.method = s.get("method", cfg.method).strip()
            cfg.lam = s.getfloat("lambda", cfg.lam)
            if "grid" in s:
                cfg.grid = _floats(s["grid"])
            if "fractions" in s:
                cfg.fractions = _floats(s["fractions"])
            cfg.runs = s.getint("runs", cfg.runs)
            cfg.seed = s.getint("seed", cfg.seed)
            cfg.n = s.getint("n", cfg.n)
            cfg.n_eval = s.getint("n_eval", cfg.n_eval)
        if parser.has_section("cost"):
            s = parser["cost"]

            def p(key):
                v = s.get(key, "").strip()
                return (base / v) if v else None

            bound = s.get("bound", "").strip()
            cfg.cost = CostSpec(
                kind=s.get("kind", "").strip() or None,
                costs=p("costs"),
                hierarchy=p("hierarchy"),
                categories=p("categories"),
                bound=float(bound) if bound else None,
            )
        if parser.has_section("task"):
            s = parser["task"]
            t = cfg.task
            conc = s.get("concentration", "").strip()
            cfg.task = replace(
                t,
                kind=s.get("kind", t.kind).strip(),
                K=s.getint("K", t.K),
                contexts=s.getint("contexts", t.contexts),
                concentration=float(conc) if conc else t.concentration,
                category_concentration=s.getfloat("category_concentration", t.category_concentration),
                branching=s.getint("branching", t.branching),
                temperature=s.getfloat("temperature", t.temperature),
                cost=s.get("cost", "").strip() or t.cost,
                seed=s.getint("seed", t.seed),
            )
    except ValueError as e:
        if isinstance(e, DataError):
            raise
        raise DataError(f"bad value in config {path}: {e}") from None
    return cfg
