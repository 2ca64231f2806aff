"""Undirected simple graphs with planar node positions, and their CSV form."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .geo import GeoPoint, infer_center


def _canonical_edges(edges) -> np.ndarray:
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return np.sort(e, axis=1)


@dataclass(frozen=True, eq=False)
class SpatialGraph:
    """Spatially embedded simple graph.

    Parameters
    ----------
    pos : (n, 2) array
        Planar node positions in km.
    edges : (m, 2) int array
        Unordered node pairs; stored with ``u < v``.
    geo : (n, 2) array, optional
        (lon, lat) of each node, when the graph comes from geographic data.
    actual_km : (m,) array, optional
        Polyline length of each edge; NaN where unknown.
    multiplicity : (m,) int array, optional
        Number of parallel lines collapsed into each edge (default 1).
    projection_center : GeoPoint or None
        Centre of the planar projection; None marks a synthetic graph.
    """

    pos: np.ndarray
    edges: np.ndarray
    geo: Optional[np.ndarray] = None
    actual_km: Optional[np.ndarray] = None
    multiplicity: Optional[np.ndarray] = None
    projection_center: Optional[GeoPoint] = None

    def __post_init__(self):
        pos = np.asarray(self.pos, dtype=float).reshape(-1, 2)
        edges = _canonical_edges(self.edges)
        m = len(edges)
        mult = (
            np.ones(m, dtype=np.int64)
            if self.multiplicity is None
            else np.asarray(self.multiplicity, dtype=np.int64).reshape(m)
        )
        actual = None if self.actual_km is None else np.asarray(self.actual_km, float).reshape(m)
        geo = None if self.geo is None else np.asarray(self.geo, float).reshape(-1, 2)
        for name, value in [("pos", pos), ("edges", edges), ("geo", geo),
                            ("actual_km", actual), ("multiplicity", mult)]:
            if value is not None:
                value.setflags(write=False)
            object.__setattr__(self, name, value)
        self._check()

    def _check(self):
        n = self.n
        if not np.all(np.isfinite(self.pos)):
            raise ValueError("node positions must be finite")
        if self.geo is not None and len(self.geo) != n:
            raise ValueError("geo must have one row per node")
        if self.m:
            if self.edges.min() < 0 or self.edges.max() >= n:
                raise ValueError("edge endpoint is not a node id")
            if np.any(self.edges[:, 0] == self.edges[:, 1]):
                raise ValueError("self-loops are not allowed")
            key = self.edges[:, 0] * n + self.edges[:, 1]
            if np.unique(key).size != self.m:
                raise ValueError("duplicate edges; record parallel lines via multiplicity")
        if np.any(self.multiplicity < 1):
            raise ValueError("multiplicity must be >= 1")

    @property
    def n(self) -> int:
        return len(self.pos)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def is_synthetic(self) -> bool:
        return self.projection_center is None

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric 0/1 adjacency matrix in CSR form."""
        n, e = self.n, self.edges
        data = np.ones(2 * self.m, dtype=np.int8)
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n)

    def straight_lengths(self) -> np.ndarray:
        d = self.pos[self.edges[:, 0]] - self.pos[self.edges[:, 1]]
        return np.hypot(d[:, 0], d[:, 1])

    def components(self) -> tuple[int, np.ndarray]:
        """Number of connected components and the label of each node."""
        if self.n == 0:
            return 0, np.zeros(0, dtype=np.int64)
        return csgraph.connected_components(self.adjacency, directed=False)

    def is_connected(self) -> bool:
        return self.components()[0] <= 1

    def subgraph(self, keep) -> "SpatialGraph":
        """Induced subgraph on the nodes where ``keep`` is true, ids re-compacted."""
        keep = np.asarray(keep, dtype=bool).reshape(self.n)
        new_id = np.full(self.n, -1, dtype=np.int64)
        new_id[keep] = np.arange(int(keep.sum()))
        emask = keep[self.edges[:, 0]] & keep[self.edges[:, 1]] if self.m else np.zeros(0, bool)
        return SpatialGraph(
            pos=self.pos[keep],
            edges=new_id[self.edges[emask]],
            geo=None if self.geo is None else self.geo[keep],
            actual_km=None if self.actual_km is None else self.actual_km[emask],
            multiplicity=self.multiplicity[emask],
            projection_center=self.projection_center,
        )


# ---------------------------------------------------------------------------
# CSV persistence

NODE_HEADER = ["id", "x_km", "y_km", "lon", "lat"]
EDGE_HEADER = ["u", "v", "straight_km", "actual_km", "multiplicity"]


def _fmt(x) -> str:
    return "" if x is None or (isinstance(x, float) and np.isnan(x)) else repr(float(x))


def graph_paths(prefix: str) -> tuple[str, str]:
    """``nodes.csv``/``edges.csv`` paths for an output prefix.

    An existing directory (or a prefix ending in a path separator) holds the
    two files directly; otherwise the prefix is prepended to the file names.
    """
    prefix = os.fspath(prefix)
    if os.path.isdir(prefix) and not prefix.endswith(os.sep):
        prefix += os.sep
    return prefix + "nodes.csv", prefix + "edges.csv"


def write_graph_csv(g: SpatialGraph, prefix: str) -> tuple[str, str]:
    nodes_path, edges_path = graph_paths(prefix)
    parent = os.path.dirname(nodes_path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(nodes_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(NODE_HEADER)
        for i in range(g.n):
            lon, lat = (None, None) if g.geo is None else g.geo[i]
            w.writerow([i, _fmt(g.pos[i, 0]), _fmt(g.pos[i, 1]), _fmt(lon), _fmt(lat)])
    straight = g.straight_lengths()
    with open(edges_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EDGE_HEADER)
        for k, (u, v) in enumerate(g.edges.tolist()):
            actual = None if g.actual_km is None else g.actual_km[k]
            w.writerow([u, v, _fmt(straight[k]), _fmt(actual), int(g.multiplicity[k])])
    return nodes_path, edges_path


def read_graph_csv(prefix: str, projection_center: Optional[GeoPoint] = None) -> SpatialGraph:
    """Load a graph written by :func:`write_graph_csv`.

    If the nodes carry lon/lat and no ``projection_center`` is given, the
    centre is recovered from the stored positions.
    """
    nodes_path, edges_path = graph_paths(prefix)
    with open(nodes_path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if rows and set(NODE_HEADER) - set(rows[0]):
        raise ValueError(f"{nodes_path}: expected header {','.join(NODE_HEADER)}")
    ids = [int(r["id"]) for r in rows]
    if ids != list(range(len(ids))):
        raise ValueError(f"{nodes_path}: node ids must be 0..n-1 in order")
    pos = np.array([[float(r["x_km"]), float(r["y_km"])] for r in rows]).reshape(-1, 2)
    has_geo = bool(rows) and all(r["lon"] != "" and r["lat"] != "" for r in rows)
    geo = np.array([[float(r["lon"]), float(r["lat"])] for r in rows]) if has_geo else None

    with open(edges_path, newline="", encoding="utf-8") as fh:
        erows = list(csv.DictReader(fh))
    edges = np.array([[int(r["u"]), int(r["v"])] for r in erows], dtype=np.int64).reshape(-1, 2)
    actual = np.array([float(r["actual_km"]) if r["actual_km"] else np.nan for r in erows])
    mult = np.array([int(r["multiplicity"] or 1) for r in erows], dtype=np.int64)
    if projection_center is None and geo is not None:
        projection_center = infer_center(pos, geo[:, 0], geo[:, 1])
    return SpatialGraph(
        pos=pos,
        edges=edges,
        geo=geo,
        actual_km=actual if np.any(~np.isnan(actual)) else None,
        multiplicity=mult,
        projection_center=projection_center,
    )
