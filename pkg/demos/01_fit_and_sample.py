"""
Fitting a position mixture and sampling from it
================================================

Substation positions are modelled as a 2-D Gaussian mixture. Here we build
a toy landscape with three towns, fit mixtures with 1..6 components and
let BIC choose, then draw fresh positions from the winner.
"""

# %%
import numpy as np

from synthgrid.mixture import sample, select_model

rng = np.random.default_rng(0)
towns = np.array([[0.0, 0.0], [120.0, 30.0], [40.0, 140.0]])
spread = np.array([15.0, 25.0, 10.0])
labels = rng.choice(3, size=1500, p=[0.5, 0.3, 0.2])
points = towns[labels] + rng.normal(size=(1500, 2)) * spread[labels, None]

# %%
# Every candidate count is fitted with several EM restarts; the table shows
# log-likelihood and BIC (higher is better).
model, table = select_model(points, (1, 6), seed=0, return_table=True)
for c, loglik, bic in table:
    print(f"c={c}  loglik={loglik:10.1f}  bic={bic:10.1f}")
print("selected c =", model.c)

# %%
# The fitted weights and means should sit close to the towns above.
for w, mu in sorted(zip(model.weights, model.means.tolist()), reverse=True):
    print(f"weight {w:.3f}  mean ({mu[0]:7.2f}, {mu[1]:7.2f})")

# %%
# New positions with the same spatial density.
fresh = sample(model, 1500, seed=1)
print("original mean", points.mean(axis=0).round(2), " sampled mean", fresh.mean(axis=0).round(2))
