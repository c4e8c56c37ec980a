# %% [markdown]
# # Set costs and label hierarchies
#
# Three costs are supported. A separable cost sums per-label penalties. The
# max-distance cost is the largest tree distance between two predicted
# labels. The coverage cost counts the categories a set touches.

# %%
import numpy as np

from utilcp import CostModel, Hierarchy, is_separable_witness, marginal_gains, set_loss

# %% [markdown]
# ## A small tree
#
# ``Hierarchy.balanced((2, 2))`` has two categories with two leaves each.
# Leaf-to-leaf distance counts edges through the lowest common ancestor.

# %%
h = Hierarchy.balanced((2, 2))
print(h.distances)
print("diameter", h.diameter())
print("categories", h.categories())

# %% [markdown]
# ## Costs of a few sets

# %%
models = {
    "separable": CostModel.separable([1.0, 0.5, 0.25, 0.75]),
    "max_distance": CostModel.max_distance(h),
    "coverage": CostModel.coverage(h),
}
for name, m in models.items():
    print(f"{name:13s} bound={m.bound_M:g}", [set_loss(m, S) for S in ({0}, {0, 1}, {0, 2}, {0, 1, 2, 3})])

# %% [markdown]
# ## The coverage cost is not a sum over labels
#
# A category with two labels costs 1 as a whole but 2 label by label.

# %%
pair = CostModel.coverage(categories=[{0, 1}], K=2)
print(set_loss(pair, {0, 1}), set_loss(pair, {0}) + set_loss(pair, {1}))
print({name: is_separable_witness(m) for name, m in models.items()})

# %% [markdown]
# Marginal gains along an insertion order telescope to the cost of the full
# set.

# %%
gains = marginal_gains(models["coverage"], [0, 2, 1, 3])
print(gains, gains.sum())
