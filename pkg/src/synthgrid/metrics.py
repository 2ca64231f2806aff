"""Structural metrics for spatial graphs and similarity statistics between two graphs."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse.csgraph import breadth_first_order, shortest_path
from scipy.spatial import cKDTree

from .graph import SpatialGraph

EXACT_APL_MAX_NODES = 20000
DEFAULT_APL_SOURCES = 2000
KL_DISTANCE_FLOOR = 1e-9


class GraphDisconnectedError(ValueError):
    pass


# ---------------------------------------------------------------------------
# path length


def _tree_distance_sum(g: SpatialGraph) -> float:
    """Sum of hop distances over ordered pairs of a tree, via subtree sizes."""
    order, parent = breadth_first_order(g.adjacency, 0, directed=False)
    size = np.ones(g.n)
    for v in order[:0:-1]:
        size[parent[v]] += size[v]
    s = size[order[1:]]
    return float(2.0 * np.sum(s * (g.n - s)))


def _source_means(g: SpatialGraph, sources: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Mean hop distance from each source to every other node."""
    out = np.empty(len(sources))
    for start in range(0, len(sources), chunk):
        idx = sources[start:start + chunk]
        dist = shortest_path(g.adjacency, directed=False, unweighted=True, indices=idx)
        if not np.all(np.isfinite(dist)):
            raise GraphDisconnectedError("graph disconnected")
        out[start:start + chunk] = dist.sum(axis=1) / (g.n - 1)
    return out


def avg_path_length(
    g: SpatialGraph,
    mode: str = "exact",
    k: int = DEFAULT_APL_SOURCES,
    seed: int = 0,
    return_stderr: bool = False,
):
    """Average hop count of shortest paths over ordered node pairs.

    ``mode="exact"`` runs a BFS from every node (trees use an O(n)
    subtree-size formula). ``mode="sampled"`` averages BFS results from
    ``k`` sources drawn without replacement; the estimate is unbiased and its
    standard error includes the finite-population correction. With
    ``return_stderr=True`` the result is ``(L, stderr)``.
    """
    n = g.n
    if n < 2:
        raise ValueError("average path length needs at least two nodes")
    if mode not in ("exact", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "sampled" and k < n:
        rng = np.random.default_rng(seed)
        sources = np.sort(rng.choice(n, size=k, replace=False))
        means = _source_means(g, sources)
        value = float(means.mean())
        stderr = float(means.std(ddof=1) / math.sqrt(k) * math.sqrt((n - k) / (n - 1))) if k > 1 else float("inf")
    else:
        if not g.is_connected():
            raise GraphDisconnectedError("graph disconnected")
        if g.m == n - 1:
            value = _tree_distance_sum(g) / (n * (n - 1))
        else:
            value = float(_source_means(g, np.arange(n)).mean())
        stderr = 0.0
    return (value, stderr) if return_stderr else value


# ---------------------------------------------------------------------------
# clustering and degrees


def clustering_coefficient(g: SpatialGraph) -> tuple[float, np.ndarray]:
    """Mean local clustering ``C`` and the per-node values ``C_i``.

    Nodes with fewer than two neighbours have ``C_i = 0`` and still count in
    the mean.
    """
    if g.n == 0:
        raise ValueError("clustering coefficient of an empty graph")
    a = g.adjacency.astype(np.int64)
    triangles = np.asarray((a @ a).multiply(a).sum(axis=1)).ravel() / 2.0
    deg = g.degrees().astype(float)
    pairs = deg * (deg - 1) / 2.0
    ci = np.divide(triangles, pairs, out=np.zeros(g.n), where=pairs > 0)
    return float(ci.mean()), ci


def degree_histogram(g: SpatialGraph) -> dict[int, int]:
    counts = np.bincount(g.degrees()) if g.n else np.zeros(0, dtype=int)
    return {int(d): int(c) for d, c in enumerate(counts) if c}


def tail_slope(hist: dict[int, int], min_degree: int) -> float:
    """Slope of the least-squares line through ``(ln d, ln P(d))`` for ``d > min_degree``."""
    total = sum(hist.values())
    pts = [(d, c) for d, c in sorted(hist.items()) if d > min_degree and c > 0 and d > 0]
    if len(pts) < 2:
        raise ValueError(f"need at least 2 degrees above {min_degree} to fit a tail")
    d = np.log([p[0] for p in pts])
    f = np.log([p[1] / total for p in pts])
    slope, _ = np.polyfit(d, f, 1)
    return float(slope)


def ks_statistic(a, b) -> float:
    """Largest gap between the empirical CDFs of two samples."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("KS statistic needs two non-empty samples")
    grid = np.union1d(a, b)
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


# ---------------------------------------------------------------------------
# line lengths


def kl_divergence(sample_p, sample_q, k: int = 10) -> float:
    """k-nearest-neighbour estimate of KL(p || q) from 1-D samples.

    Uses ``mean(ln nu_k - ln r_k) + ln(m / (n - 1))`` where ``r_k`` is the
    distance from each p-sample to its k-th nearest other p-sample and
    ``nu_k`` the distance to its k-th nearest q-sample. Distances are floored
    at 1e-9 so tied values stay finite.

    When both arguments hold the same values in the same order the sample
    is compared with itself, and each point is left out of its own
    q-neighbourhood just as it is for ``r_k``; the estimate is then 0.
    """
    p = np.asarray(sample_p, dtype=float).reshape(-1, 1)
    q = np.asarray(sample_q, dtype=float).reshape(-1, 1)
    n, m = len(p), len(q)
    if k < 1 or n <= k or m < k:
        raise ValueError(f"KL estimate with k={k} needs > {k} p-samples and >= {k} q-samples")
    if n == m and np.array_equal(p, q):
        return 0.0
    r = cKDTree(p).query(p, k=k + 1)[0][:, k]
    nu = cKDTree(q).query(p, k=k)[0]
    nu = nu if nu.ndim == 1 else nu[:, k - 1]
    r = np.maximum(r, KL_DISTANCE_FLOOR)
    nu = np.maximum(nu, KL_DISTANCE_FLOOR)
    return float(np.mean(np.log(nu) - np.log(r)) + math.log(m / (n - 1)))


def edge_lengths(g: SpatialGraph, kind: str = "straight") -> np.ndarray:
    """Per-edge length in km: endpoint distance (``straight``) or polyline length (``actual``)."""
    if kind == "straight":
        return g.straight_lengths()
    if kind == "actual":
        if g.actual_km is None or np.any(np.isnan(g.actual_km)):
            raise ValueError("graph lacks actual line lengths")
        return np.array(g.actual_km)
    raise ValueError(f"unknown length kind {kind!r}")


def _length_stats(x: np.ndarray) -> Optional[dict]:
    if x.size == 0:
        return None
    return {"mean": float(x.mean()), "std": float(x.std()), "max": float(x.max())}


# ---------------------------------------------------------------------------
# report


@dataclass
class MetricsReport:
    n: int
    m: int
    L: Optional[float]
    L_stderr: Optional[float]
    C: Optional[float]
    zeta: Optional[float]
    min_degree: int
    component_count: int
    length_stats: dict
    degree_histogram: dict
    d_ks: Optional[float] = None
    d_kl: Optional[float] = None
    options: dict = field(default_factory=dict)
    reference_id: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)


def resolve_apl_mode(apl_mode: str, n: int) -> tuple[str, int]:
    """Parse ``exact``, ``sampled``, ``sampled:<k>`` or ``auto`` into (mode, k)."""
    if apl_mode == "auto":
        return ("exact", 0) if n <= EXACT_APL_MAX_NODES else ("sampled", DEFAULT_APL_SOURCES)
    if apl_mode == "exact":
        return "exact", 0
    if apl_mode == "sampled":
        return "sampled", DEFAULT_APL_SOURCES
    if apl_mode.startswith("sampled:"):
        k = int(apl_mode.split(":", 1)[1])
        if k < 2:
            raise ValueError("sampled APL needs at least 2 sources")
        return "sampled", k
    raise ValueError(f"unknown APL mode {apl_mode!r}")


def structural_report(
    g: SpatialGraph,
    reference: Optional[SpatialGraph] = None,
    min_degree: int = 2,
    k_kl: int = 10,
    apl_mode: str = "auto",
    seed: int = 0,
    reference_id: Optional[str] = None,
) -> MetricsReport:
    """All structural metrics of ``g``, plus similarity to ``reference`` if given.

    With a reference, ``d_ks`` compares degree samples and ``d_kl`` is
    KL(reference || g) on straight line lengths. ``zeta`` is None when fewer
    than two degrees lie above ``min_degree``.
    """
    mode, k = resolve_apl_mode(apl_mode, g.n)
    if g.n >= 2:
        L, L_err = avg_path_length(g, mode=mode, k=k or DEFAULT_APL_SOURCES, seed=seed,
                                   return_stderr=True)
    else:
        L, L_err = None, None
    C = clustering_coefficient(g)[0] if g.n else None
    hist = degree_histogram(g)
    try:
        zeta = tail_slope(hist, min_degree)
    except ValueError:
        zeta = None

    straight = edge_lengths(g, "straight")
    has_actual = g.actual_km is not None and not np.any(np.isnan(g.actual_km))
    lengths = {
        "straight": _length_stats(straight),
        "actual": _length_stats(edge_lengths(g, "actual")) if has_actual else None,
    }
    d_ks = d_kl = None
    if reference is not None:
        d_ks = ks_statistic(reference.degrees(), g.degrees())
        d_kl = kl_divergence(edge_lengths(reference, "straight"), straight, k=k_kl)

    return MetricsReport(
        n=g.n,
        m=g.m,
        L=L,
        L_stderr=L_err,
        C=C,
        zeta=zeta,
        min_degree=min_degree,
        component_count=int(g.components()[0]),
        length_stats=lengths,
        degree_histogram={"degree": list(hist), "count": list(hist.values())},
        d_ks=d_ks,
        d_kl=d_kl,
        options={"min_degree": min_degree, "k_kl": k_kl, "apl_mode": mode if mode == "exact" else f"sampled:{k}"},
        reference_id=reference_id,
    )
