"""
How kappa shapes the spanning tree
==================================

Nodes are placed in a random order biased towards the centre of the point
cloud (strength ``kappa``) and each one attaches to its nearest earlier
node. Small kappa gives long, shallow trees; large kappa grows the tree
outward from the middle, which shortens it and deepens its paths. The
minimum spanning tree is the extreme case of a perfectly local order.
"""

# %%
import numpy as np

from synthgrid.generator import euclidean_mst, spanning_tree
from synthgrid.graph import SpatialGraph
from synthgrid.metrics import avg_path_length
from synthgrid.mixture import GmmModel, sample

rng = np.random.default_rng(7)
model = GmmModel(
    weights=rng.dirichlet(np.full(6, 3.0)),
    means=rng.uniform(-300, 300, (6, 2)),
    covariances=[np.diag(rng.uniform(20, 70, 2) ** 2) for _ in range(6)],
)
points = sample(model, 2000, seed=1)

# %%
mst_edges, mst_weight = euclidean_mst(points)
mst_apl = avg_path_length(SpatialGraph(pos=points, edges=mst_edges))
print(f"MST: weight {mst_weight:8.0f} km, average path length {mst_apl:6.1f}")

# %%
for kappa in (0.0, 1.0, 2.5, 5.0, 10.0):
    trees = [spanning_tree(points, kappa, seed) for seed in range(5)]
    weight = np.mean([t.straight_lengths().sum() for t in trees])
    apl = np.mean([avg_path_length(t) for t in trees])
    print(f"kappa {kappa:5.1f}: weight {weight:8.0f} km ({weight / mst_weight:.2f} x MST), "
          f"average path length {apl:5.1f}")
