"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .conformal import CalibratedPredictor, calibrate, tune_lambda
from .config import CostSpec, RunConfig, load_config
from .core import SplitSpec, split
from .errors import UtilcpError
from .evaluation import compare_methods, comparison_table, evaluate
from .experiments import adaptivity_spearman, run_benchmark, verify_all
from .io import atomic_write, format_categories, format_costs, format_hierarchy, format_scores, load_scores
from .losses import COVERAGE, MAX_DISTANCE, SEPARABLE, batch_set_loss
from .scores import ScoreMethod
from .synth import generate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _common(p):
    p.add_argument("--config", type=Path, help="INI run configuration")
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    g = p.add_argument_group("cost model")
    g.add_argument("--cost-kind", choices=[SEPARABLE, MAX_DISTANCE, COVERAGE])
    g.add_argument("--costs", type=Path, help="label_id,cost CSV")
    g.add_argument("--hierarchy", type=Path, help="hierarchy CSV")
    g.add_argument("--categories", type=Path, help="category_name,label_id CSV")
    g.add_argument("--bound", type=float, help="upper bound M on the set cost")


def _method_args(p):
    p.add_argument("--method", choices=["base", "penalized", "ratio", "greedy"])
    p.add_argument("--lambda", dest="lam", type=float)


def _task_args(p):
    g = p.add_argument_group("synthetic task")
    g.add_argument("--task", choices=("separable", "hierarchical"), help="built-in task (default: from the config)")
    g.add_argument("--temperature", type=float, help="logit noise of the simulated classifier")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="utilcp", description="Cost-aware conformal prediction sets.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic score CSV")
    _common(p)
    _task_args(p)
    p.add_argument("--n", type=int, default=None, help="number of instances")
    p.add_argument("--stream", type=int, default=0, help="sample stream of the task")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--costs-out", type=Path, help="also write the task's cost file here")
    p.add_argument("--hierarchy-out", type=Path)
    p.add_argument("--categories-out", type=Path)

    p = sub.add_parser("calibrate", help="fit a predictor on a calibration score file")
    _common(p)
    _method_args(p)
    p.add_argument("--scores", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("predict", help="list prediction sets")
    _common(p)
    p.add_argument("--predictor", type=Path, required=True)
    p.add_argument("--scores", type=Path, required=True)
    p.add_argument("--out", type=Path, help="default: stdout")

    p = sub.add_parser("tune", help="choose lambda on validation/test folds and recalibrate")
    _common(p)
    p.add_argument("--grid", type=_float_list)
    p.add_argument("--val", type=Path)
    p.add_argument("--test", type=Path)
    p.add_argument("--cal", type=Path)
    p.add_argument("--scores", type=Path, help="single file split by the configured fractions")
    p.add_argument("--fractions", type=_float_list)
    p.add_argument("--out-dir", type=Path, required=True)

    p = sub.add_parser("evaluate", help="coverage, cost and conditional coverage report")
    _common(p)
    p.add_argument("--predictor", type=Path, required=True)
    p.add_argument("--scores", type=Path, required=True)
    p.add_argument("--out-prefix", type=Path, help="write PREFIX.json and PREFIX.txt")

    p = sub.add_parser("bench", help="multi-run comparison of all methods")
    _common(p)
    _task_args(p)
    p.add_argument("--scores", type=Path, help="score file (default: synthetic task from the config)")
    p.add_argument("--runs", type=int)
    p.add_argument("--grid", type=_float_list)
    p.add_argument("--fractions", type=_float_list)
    p.add_argument("--methods", help="comma-separated subset of base,penalized,ratio,greedy")
    p.add_argument("--out-prefix", type=Path, help="write PREFIX.txt (table) and PREFIX.csv (per run)")

    p = sub.add_parser("verify", help="run the coverage and optimality suites")
    p.add_argument("--config", type=Path)
    p.add_argument("--quick", action="store_true", help="fewer trials, wider tolerance")
    return parser


def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    for key in ("alpha", "seed", "runs", "grid", "fractions"):
        v = getattr(args, key, None)
        if v is not None:
            setattr(cfg, key, v)
    if getattr(args, "method", None):
        cfg.method = args.method
    if getattr(args, "lam", None) is not None:
        cfg.lam = args.lam
    if getattr(args, "task", None):
        cfg.task = replace(cfg.task, kind=args.task)
    if getattr(args, "temperature", None) is not None:
        cfg.task = replace(cfg.task, temperature=args.temperature)
    over = {
        "kind": getattr(args, "cost_kind", None),
        "costs": getattr(args, "costs", None),
        "hierarchy": getattr(args, "hierarchy", None),
        "categories": getattr(args, "categories", None),
        "bound": getattr(args, "bound", None),
    }
    if any(v is not None for v in over.values()):
        # a file flag replaces the configured cost files rather than mixing with them
        files = over["costs"] or over["hierarchy"] or over["categories"]
        merged = {k: None for k in over} if files else asdict(cfg.cost)
        merged.update({k: v for k, v in over.items() if v is not None})
        cfg.cost = CostSpec(**merged)
    return cfg.validate()


def _method(cfg: RunConfig, cost) -> ScoreMethod:
    if cfg.method == "base":
        return ScoreMethod.base()
    if cfg.method == "penalized":
        return ScoreMethod.penalized(cost, cfg.lam)
    if cfg.method == "ratio":
        return ScoreMethod.ratio(cost)
    return ScoreMethod.greedy(cost, cfg.alpha)


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        atomic_write(out, text)


def cmd_synth(args):
    cfg = _config(args)
    task, cost = cfg.task.build()
    n = args.n or cfg.n
    data = generate(task, n, stream=args.stream)
    atomic_write(args.out, format_scores(data))
    if args.costs_out:
        if cost.kind != SEPARABLE:
            raise UsageError("--costs-out needs a separable task")
        atomic_write(args.costs_out, format_costs(cost.penalties))
    if args.hierarchy_out:
        if task.hierarchy is None:
            raise UsageError("--hierarchy-out needs a hierarchical task")
        atomic_write(args.hierarchy_out, format_hierarchy(task.hierarchy))
    if args.categories_out:
        if cost.kind != COVERAGE:
            raise UsageError("--categories-out needs a coverage cost")
        atomic_write(args.categories_out, format_categories(cost.categories))
    print(f"wrote {n} instances with K={task.K} to {args.out}")


def cmd_calibrate(args):
    cfg = _config(args)
    data = load_scores(args.scores)
    cost = cfg.cost_model(data.K) if cfg.method != "base" else None
    pred = calibrate(_method(cfg, cost), data, cfg.alpha)
    atomic_write(args.out, pred.to_record())
    print(f"{pred.method.name}: threshold {pred.threshold!r} from n={pred.calibration_size}")


def _load_predictor(path, cfg, K):
    text = Path(path).read_text(encoding="utf-8")
    kind = next((l.split("=", 1)[1].strip() for l in text.splitlines() if l.startswith("method=")), None)
    cost = cfg.cost_model(K)
    return CalibratedPredictor.from_record(text, cost if kind != "base" else None), cost


def cmd_predict(args):
    cfg = _config(args)
    data = load_scores(args.scores)
    pred, cost = _load_predictor(args.predictor, cfg, data.K)
    masks = pred.predict_masks(data.probs)
    losses = batch_set_loss(cost, masks)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "set", "loss"])
    for i in range(len(data)):
        w.writerow([data.ids[i], " ".join(str(y) for y in np.flatnonzero(masks[i])), repr(float(losses[i]))])
    _emit(buf.getvalue(), args.out)


def cmd_tune(args):
    cfg = _config(args)
    if args.scores:
        val, test, cal = split(load_scores(args.scores), SplitSpec(cfg.fractions, cfg.seed))
    elif args.val and args.test and args.cal:
        val, test, cal = (load_scores(p) for p in (args.val, args.test, args.cal))
    else:
        raise UsageError("tune needs --val, --test and --cal, or a single --scores file")
    cost = cfg.cost_model(val.K)
    res = tune_lambda(cfg.grid, val, test, cal, cfg.alpha, cost)
    dump = {
        "alpha": cfg.alpha,
        "grid": list(res.grid),
        "per_lambda_loss": {repr(k): v for k, v in res.per_lambda_loss.items()},
        "validation_thresholds": {repr(k): v for k, v in res.validation_thresholds.items()},
        "chosen_lambda": res.chosen_lambda,
        "final_threshold": res.final_predictor.threshold,
        "calibration_size": res.final_predictor.calibration_size,
        "cost_digest": cost.digest(),
    }
    args.out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write(args.out_dir / "tuning.json", json.dumps(dump, indent=2) + "\n")
    atomic_write(args.out_dir / "predictor.txt", res.final_predictor.to_record())
    for lam in res.grid:
        print(f"lambda={lam:<8g} test loss {res.per_lambda_loss[lam]:.4f}")
    print(f"chosen lambda {res.chosen_lambda:g}; threshold {res.final_predictor.threshold!r}")


def cmd_evaluate(args):
    cfg = _config(args)
    data = load_scores(args.scores)
    pred, cost = _load_predictor(args.predictor, cfg, data.K)
    report = evaluate(pred, data, cost, run_seed=cfg.seed)
    if args.out_prefix:
        atomic_write(str(args.out_prefix) + ".json", report.to_json())
        atomic_write(str(args.out_prefix) + ".txt", report.to_table())
    sys.stdout.write(report.to_table())


def cmd_bench(args):
    cfg = _config(args)
    if args.scores:
        data = load_scores(args.scores)
        cost = cfg.cost_model(data.K)
        kw = {"data": data}
    else:
        task, task_cost = cfg.task.build()
        cost = cfg.cost.build(task.K) or task_cost
        kw = {"task": task, "n": cfg.n, "n_eval": cfg.n_eval}
    methods = None
    if args.methods:
        methods = [m.strip() for m in args.methods.split(",") if m.strip()]
        unknown = sorted(set(methods) - {"base", "penalized", "ratio", "greedy"})
        if unknown or "base" not in methods:
            raise UsageError(f"--methods must include base and only known methods, got {args.methods!r}")
    res = run_benchmark(
        cost, methods=methods, runs=cfg.runs, alpha=cfg.alpha, grid=cfg.grid, fractions=cfg.fractions, seed=cfg.seed, **kw
    )
    table = comparison_table(compare_methods(res.reports, "base"))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run", "method", "mean_loss", "coverage", "mean_set_size", "lambda", "adaptivity_spearman"])
    lam_iter = iter(res.chosen_lambdas)
    for r in res.reports:
        lam = next(lam_iter) if r.method_name == "penalized" else ""
        w.writerow(
            [r.run_seed, r.method_name, f"{r.mean_loss:.6f}", f"{r.coverage:.6f}", f"{r.mean_set_size:.6f}", lam,
             f"{adaptivity_spearman(r):.4f}"]
        )
    if args.out_prefix:
        atomic_write(str(args.out_prefix) + ".txt", table)
        atomic_write(str(args.out_prefix) + ".csv", buf.getvalue())
    sys.stdout.write(table)


def cmd_verify(args):
    checks = verify_all(quick=args.quick)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "calibrate": cmd_calibrate,
    "predict": cmd_predict,
    "tune": cmd_tune,
    "evaluate": cmd_evaluate,
    "bench": cmd_bench,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        return COMMANDS[args.command](args) or EXIT_OK
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (UtilcpError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
