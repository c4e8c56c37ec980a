# %% [markdown]
# # Checking against exact answers
#
# On tiny discrete tasks the cheapest rule with coverage ``1 - alpha`` can be
# found exactly. With separable costs, keeping labels whose probability per
# unit penalty clears a cut-off attains that minimum. The second half repeats
# calibration many times and checks that mean coverage sits between
# ``1 - alpha`` and ``1 - alpha + 1/(n + 1)``.

# %%
import numpy as np

from utilcp import ScoreMethod
from utilcp.experiments import TaskSpec, random_exhaustive_task, sandwich_window
from utilcp.synth import coverage_trial, oracle_optimal_loss

# %%
rng = np.random.default_rng(7)
for _ in range(5):
    task, cost, alpha = random_exhaustive_task(rng)
    res = oracle_optimal_loss(task, cost, alpha)
    print(f"alpha={alpha:.3f} optimum={res.optimal_loss:.6f} ratio rule={res.np_loss:.6f}")

# %%
task, cost = TaskSpec("separable").build()
lo, hi = sandwich_window(1000, 0.1, 0.0)
trials = coverage_trial(task, ScoreMethod.ratio(cost), 1000, 2000, 50, 0.1)
print(f"mean coverage {trials.mean:.4f}, window [{lo:.4f}, {hi:.4f}]")
