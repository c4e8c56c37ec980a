# %% [markdown]
# # Reports and multi-run benchmarks
#
# An evaluation report holds marginal coverage, the mean set cost, coverage
# broken down by set size, and the mean true-label probability for each set
# size. A benchmark repeats calibration on fresh folds and summarizes each
# method by the median of its per-run mean costs.

# %%
from utilcp import ScoreMethod, calibrate, compare_methods, evaluate
from utilcp.evaluation import comparison_table
from utilcp.experiments import TaskSpec, adaptivity_spearman, run_benchmark
from utilcp.synth import generate

# %%
task, cost = TaskSpec("separable").build()
cal = generate(task, 1000, stream=1)
test = generate(task, 5000, stream=2)
report = evaluate(calibrate(ScoreMethod.base(), cal, 0.1), test, cost)
print(report.to_table())

# %% [markdown]
# Larger sets go to harder instances, so the mean true-label probability
# falls as set size grows.

# %%
print(f"Spearman(size, mean p_true) = {adaptivity_spearman(report):.3f}")

# %% [markdown]
# ## Ten runs on both tasks

# %%
for kind in ("separable", "hierarchical"):
    task, cost = TaskSpec(kind).build()
    bench = run_benchmark(cost, task=task, runs=10)
    print(kind)
    print(comparison_table(compare_methods(bench.reports, "base")))
