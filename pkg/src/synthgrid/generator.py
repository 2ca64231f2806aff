"""Connect synthetic substations into a grid-like graph.

The pipeline is: sample node positions from a fitted mixture, grow a
spanning tree by attaching nodes to their nearest already-placed neighbour
in a centre-biased random order, then add reinforcement lines that favour
low-degree nodes in dense areas connecting to nearby high-degree nodes.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .graph import SpatialGraph
from .mixture import GmmModel, sample

log = logging.getLogger(__name__)

LARGE_MODE_MIN_NODES = 5000
DEFAULT_ETA = 2.0

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One round of the SplitMix64 mixer on a 64-bit integer."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def stage_seed(seed: int, stage: int) -> int:
    """Seed for one pipeline stage: ``splitmix64(seed ^ splitmix64(stage))``."""
    return splitmix64((seed & _MASK64) ^ splitmix64(stage))


STAGES = ("positions", "order", "reinforce")


def stage_seeds(seed: int) -> dict[str, int]:
    return {name: stage_seed(seed, k) for k, name in enumerate(STAGES)}


@dataclass(frozen=True)
class GenParams:
    """Tunable generation parameters.

    ``mode`` is ``"large"`` (source nodes drawn among degree-1/2 nodes) or
    ``"small"`` (all nodes, penalised by degree**eta); None picks large for
    ``n_target >= 5000``.
    """

    n_target: int
    m_target: int
    kappa: float = 2.5
    alpha: float = 1.0
    beta: float = 3.2
    gamma: float = 2.5
    eta: float = DEFAULT_ETA
    nn: int = 10
    mode: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        if self.mode is None:
            object.__setattr__(
                self, "mode", "large" if self.n_target >= LARGE_MODE_MIN_NODES else "small"
            )
        problems = []
        if self.n_target < 1:
            problems.append("n_target must be >= 1")
        if self.m_target < self.n_target - 1:
            problems.append("m_target must be >= n_target - 1")
        if self.m_target > self.n_target * (self.n_target - 1) // 2:
            problems.append("m_target exceeds n(n-1)/2")
        if self.kappa < 0:
            problems.append("kappa must be >= 0")
        if not self.alpha > 0:
            problems.append("alpha must be > 0")
        if not self.beta > 0:
            problems.append("beta must be > 0")
        if self.gamma < 0 or self.eta < 0:
            problems.append("gamma and eta must be >= 0")
        if self.nn < 1 or (self.n_target > 1 and self.nn >= self.n_target):
            problems.append("nn must satisfy 1 <= nn < n_target")
        if self.mode not in ("large", "small"):
            problems.append(f"unknown mode {self.mode!r}")
        if problems:
            raise ValueError("; ".join(problems))

    def to_dict(self) -> dict:
        return asdict(self)

    def with_seed(self, seed: int) -> "GenParams":
        return replace(self, seed=seed)


# Published parameter sets for the three reference grids.
PRESETS = {
    "wi": dict(kappa=2.5, alpha=1.0, beta=3.2, gamma=2.5, nn=10,
               n_target=14302, m_target=18769, mode="large", c=55, min_degree=2),
    "serc": dict(kappa=3.0, alpha=0.5, beta=3.2, gamma=2.5, nn=5,
                 n_target=12946, m_target=16658, mode="large", c=50, min_degree=2),
    "frcc": dict(kappa=1.8, alpha=0.5, beta=2.5, gamma=2.8, nn=5, eta=2.0,
                 n_target=1312, m_target=1780, mode="small", c=15, min_degree=1),
}


def preset_params(name: str, **overrides) -> GenParams:
    """GenParams for a named preset; ``c`` and ``min_degree`` are not generation fields."""
    base = {k: v for k, v in PRESETS[name].items() if k not in ("c", "min_degree")}
    base.update({k: v for k, v in overrides.items() if v is not None})
    return GenParams(**base)


# ---------------------------------------------------------------------------
# spanning tree


def distance_floor(points: np.ndarray) -> float:
    """1e-9 of the bounding-box diagonal; 1.0 when all points coincide."""
    if len(points) == 0:
        return 1.0
    diag = float(np.hypot(*(points.max(axis=0) - points.min(axis=0))))
    return 1e-9 * diag if diag > 0 else 1.0


def twst_order(points, kappa: float, seed: int = 0) -> np.ndarray:
    """Centre-biased random permutation of node ids.

    Nodes are drawn one at a time without replacement, each remaining node
    with probability proportional to its distance from the mean position
    raised to ``-kappa``. The draw is done in one pass with exponential
    race keys ``log E_j + kappa log d_j`` (smallest key first), which has
    exactly the sequential-draw distribution and stays finite for any kappa.
    """
    x = np.asarray(points, dtype=float).reshape(-1, 2)
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    rng = np.random.default_rng(seed)
    d = np.hypot(*(x - x.mean(axis=0)).T) if len(x) else np.zeros(0)
    d = np.maximum(d, distance_floor(x))
    keys = np.log(rng.standard_exponential(len(x))) + kappa * np.log(d)
    return np.argsort(keys, kind="stable")


def twst_connect(points, order) -> tuple[np.ndarray, float]:
    """Attach each node, in ``order``, to its nearest previously placed node.

    Distance ties go to the node placed earliest. Returns the ``(n-1, 2)``
    tree edges (in placement order) and the total tree length.
    """
    x = np.asarray(points, dtype=float).reshape(-1, 2)
    order = np.asarray(order, dtype=np.int64)
    n = len(x)
    if sorted(order.tolist()) != list(range(n)):
        raise ValueError("order is not a permutation of the point ids")
    xs, ys = x[:, 0].copy(), x[:, 1].copy()
    best = np.full(n, np.inf)  # squared distance to nearest placed node
    best_round = np.zeros(n, dtype=np.int64)
    edges = np.empty((max(n - 1, 0), 2), dtype=np.int64)
    for i, v in enumerate(order):
        if i:
            edges[i - 1] = (order[best_round[v]], v)
        dx = xs - xs[v]
        dy = ys - ys[v]
        d2 = dx * dx + dy * dy
        closer = d2 < best
        best[closer] = d2[closer]
        best_round[closer] = i
    diff = x[edges[:, 0]] - x[edges[:, 1]]
    return edges, float(np.hypot(diff[:, 0], diff[:, 1]).sum())


def prim_order(points, start: int = 0) -> np.ndarray:
    """Order in which Prim's algorithm adds nodes to a Euclidean MST."""
    x = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(x)
    key = np.full(n, np.inf)
    done = np.zeros(n, dtype=bool)
    order = np.empty(n, dtype=np.int64)
    xs, ys = x[:, 0].copy(), x[:, 1].copy()
    key[start] = 0.0
    for i in range(n):
        v = int(np.argmin(key))
        order[i] = v
        done[v] = True
        dx = xs - xs[v]
        dy = ys - ys[v]
        np.minimum(key, dx * dx + dy * dy, out=key)
        key[done] = np.inf
    return order


def euclidean_mst(points) -> tuple[np.ndarray, float]:
    """Minimum spanning tree edges and weight of a planar point set."""
    return twst_connect(points, prim_order(points))


# ---------------------------------------------------------------------------
# reinforcement


@dataclass(frozen=True)
class RhoTable:
    rho: np.ndarray
    nn: int


def compute_rho(points, nn: int) -> RhoTable:
    """Mean distance from every node to its ``nn`` nearest other nodes."""
    x = np.asarray(points, dtype=float).reshape(-1, 2)
    if nn < 1 or nn >= len(x):
        raise ValueError(f"need 1 <= nn < n, got nn={nn}, n={len(x)}")
    dist, _ = cKDTree(x).query(x, k=nn + 1)
    # column 0 is the node itself (or a coincident twin; both are at distance 0)
    return RhoTable(rho=dist[:, 1:].mean(axis=1), nn=nn)


def _draw(log_w: np.ndarray, rng: np.random.Generator) -> int:
    """Index drawn with probability proportional to exp(log_w); -inf entries excluded."""
    w = np.exp(log_w - log_w.max())
    cdf = np.cumsum(w)
    return int(min(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"), len(w) - 1))


def reinforce(
    tree: SpatialGraph, rho: RhoTable, params: GenParams, seed: Optional[int] = None
) -> SpatialGraph:
    """Add ``m_target - n_target + 1`` edges to a spanning tree.

    Each step draws a source node ``i`` (``large`` mode: among nodes of
    degree < 3, weight ``rho_i**-alpha``; ``small`` mode: all nodes, weight
    ``deg_i**-eta * rho_i**-alpha``) and then a target ``j`` among the nodes
    not yet adjacent to ``i`` with weight ``dist_ij**-beta * deg_j**gamma``.
    Degrees are the current ones and change after every added edge. When
    no node has degree < 3 in large mode the small-mode rule is used for that
    step; a source already adjacent to every node is skipped.
    """
    n = tree.n
    if n != params.n_target:
        raise ValueError(f"tree has {n} nodes, params expect {params.n_target}")
    if tree.m != n - 1 or not tree.is_connected():
        raise ValueError("reinforce needs a spanning tree")
    if params.m_target > n * (n - 1) // 2:
        raise ValueError("m_target exceeds n(n-1)/2")
    if len(rho.rho) != n:
        raise ValueError("rho table does not match the tree")
    extra = params.m_target - (n - 1)
    if extra == 0:
        return tree

    rng = np.random.default_rng(params.seed if seed is None else seed)
    x = tree.pos
    eps = distance_floor(x)
    log_rho = np.log(np.maximum(rho.rho, eps))
    deg = tree.degrees().astype(float)
    nbrs = [set() for _ in range(n)]
    for u, v in tree.edges.tolist():
        nbrs[u].add(v)
        nbrs[v].add(u)
    saturated = np.zeros(n, dtype=bool)
    new_edges = []

    while len(new_edges) < extra:
        open_nodes = ~saturated
        pool = open_nodes & (deg < 3) if params.mode == "large" else open_nodes
        if params.mode == "large" and pool.any():
            log_src = -params.alpha * log_rho
        else:
            pool = open_nodes
            log_src = -params.eta * np.log(deg) - params.alpha * log_rho
        i = _draw(np.where(pool, log_src, -np.inf), rng)

        admissible = np.ones(n, dtype=bool)
        admissible[i] = False
        admissible[list(nbrs[i])] = False
        if not admissible.any():
            saturated[i] = True
            continue
        d = np.maximum(np.hypot(x[:, 0] - x[i, 0], x[:, 1] - x[i, 1]), eps)
        log_tgt = -params.beta * np.log(d) + params.gamma * np.log(deg)
        j = _draw(np.where(admissible, log_tgt, -np.inf), rng)

        nbrs[i].add(j)
        nbrs[j].add(i)
        deg[i] += 1
        deg[j] += 1
        new_edges.append((i, j))

    return SpatialGraph(
        pos=x,
        edges=np.vstack([tree.edges, np.array(new_edges, dtype=np.int64)]),
        projection_center=tree.projection_center,
    )


# ---------------------------------------------------------------------------
# full pipeline


def spanning_tree(points, kappa: float, seed: int = 0) -> SpatialGraph:
    """Centre-biased nearest-earlier-node tree over ``points`` as a synthetic graph."""
    edges, _ = twst_connect(points, twst_order(points, kappa, seed))
    return SpatialGraph(pos=points, edges=edges)


def gnlg(model: GmmModel, params: GenParams) -> SpatialGraph:
    """Generate a synthetic grid with ``n_target`` nodes and ``m_target`` edges.

    Each stage draws from its own seed derived from ``params.seed``
    (see :func:`stage_seeds`), so the output is a pure function of
    ``(model, params)``.
    """
    seeds = stage_seeds(params.seed)
    log.debug("stage seeds %s", seeds)
    pos = sample(model, params.n_target, seed=seeds["positions"])
    tree = spanning_tree(pos, params.kappa, seed=seeds["order"])
    if params.m_target == params.n_target - 1:
        return tree
    rho = compute_rho(pos, params.nn)
    return reinforce(tree, rho, params, seed=seeds["reinforce"])
