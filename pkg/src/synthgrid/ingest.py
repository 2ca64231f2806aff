"""Build spatial graphs from transmission-line geometries.

Substations are not taken from a separate file: line endpoints that fall
within a snap tolerance of each other are merged into one node.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .geo import (
    EARTH_RADIUS_KM,
    GeoPoint,
    geographic_centroid,
    haversine_km,
    polyline_length_km,
    project_lonlat,
    to_cartesian_km,
)
from .graph import SpatialGraph

DEFAULT_SNAP_KM = 0.01


@dataclass(frozen=True)
class LineRecord:
    id: str
    geometry: tuple[GeoPoint, ...]
    voltage_class: Optional[str] = None

    def __post_init__(self):
        if len(self.geometry) < 2:
            raise ValueError(f"line {self.id!r} needs at least two points")
        object.__setattr__(self, "geometry", tuple(self.geometry))

    @property
    def start(self) -> GeoPoint:
        return self.geometry[0]

    @property
    def end(self) -> GeoPoint:
        return self.geometry[-1]


@dataclass(frozen=True)
class RegionPolygon:
    """Outer ring followed by optional holes; each ring is closed."""

    rings: tuple[tuple[GeoPoint, ...], ...]

    def __post_init__(self):
        if not self.rings:
            raise ValueError("polygon has no rings")
        rings = []
        for ring in self.rings:
            ring = tuple(ring)
            if ring and ring[0] != ring[-1]:
                ring = ring + (ring[0],)
            if len(set(ring)) < 3:
                raise ValueError("polygon ring needs at least 3 distinct vertices")
            rings.append(ring)
        object.__setattr__(self, "rings", tuple(rings))

    def contains(self, lon, lat) -> np.ndarray:
        """Even-odd point-in-polygon over all rings; boundary points count as inside."""
        lon = np.atleast_1d(np.asarray(lon, dtype=float))
        lat = np.atleast_1d(np.asarray(lat, dtype=float))
        inside = np.zeros(lon.shape, dtype=bool)
        on_edge = np.zeros(lon.shape, dtype=bool)
        for ring in self.rings:
            v = np.array([(p.lon, p.lat) for p in ring])
            for (x1, y1), (x2, y2) in zip(v[:-1], v[1:]):
                # boundary test: collinear and within the segment's bounding box
                cross = (x2 - x1) * (lat - y1) - (y2 - y1) * (lon - x1)
                scale = max(abs(x2 - x1), abs(y2 - y1), 1.0)
                on_edge |= (
                    (np.abs(cross) <= 1e-12 * scale)
                    & (lon >= min(x1, x2) - 1e-12) & (lon <= max(x1, x2) + 1e-12)
                    & (lat >= min(y1, y2) - 1e-12) & (lat <= max(y1, y2) + 1e-12)
                )
                if y1 == y2:
                    continue
                straddles = (y1 > lat) != (y2 > lat)
                x_cross = x1 + (lat - y1) * (x2 - x1) / (y2 - y1)
                inside ^= straddles & (lon < x_cross)
        return inside | on_edge


# ---------------------------------------------------------------------------
# text formats

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_PAIR = re.compile(rf"\s*({_NUM})\s+({_NUM})\s*")


def _parse_coords(body: str) -> list[GeoPoint]:
    points = []
    for chunk in body.split(","):
        match = _PAIR.fullmatch(chunk)
        if match is None:
            raise ValueError(f"bad coordinate pair {chunk.strip()!r}")
        points.append(GeoPoint(float(match.group(1)), float(match.group(2))))
    return points


def parse_linestring(wkt: str) -> list[GeoPoint]:
    match = re.fullmatch(r"\s*LINESTRING\s*\((.*)\)\s*", wkt, flags=re.IGNORECASE | re.DOTALL)
    if match is None:
        raise ValueError(f"not a LINESTRING: {wkt[:40]!r}")
    return _parse_coords(match.group(1))


def parse_polygon(wkt: str) -> list[list[GeoPoint]]:
    match = re.fullmatch(r"\s*POLYGON\s*\((.*)\)\s*", wkt, flags=re.IGNORECASE | re.DOTALL)
    if match is None:
        raise ValueError(f"not a POLYGON: {wkt[:40]!r}")
    rings = re.findall(r"\(([^()]*)\)", match.group(1))
    if not rings:
        raise ValueError("POLYGON without rings")
    return [_parse_coords(r) for r in rings]


def read_lines_csv(path: str) -> list[LineRecord]:
    """Read a ``id,voltage_class,wkt`` lines file."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or {"id", "wkt"} - set(reader.fieldnames):
            raise ValueError(f"{path}: expected header id,voltage_class,wkt")
        records = []
        for lineno, row in enumerate(reader, start=2):
            try:
                geometry = parse_linestring(row["wkt"] or "")
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            records.append(
                LineRecord(row["id"], tuple(geometry), row.get("voltage_class") or None)
            )
    return records


def write_lines_csv(lines: Sequence[LineRecord], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "voltage_class", "wkt"])
        for rec in lines:
            coords = ", ".join(f"{p.lon!r} {p.lat!r}" for p in rec.geometry)
            w.writerow([rec.id, rec.voltage_class or "", f"LINESTRING({coords})"])


def read_region(path: str) -> RegionPolygon:
    """Read polygon rings, one ``POLYGON((...))`` per line; first is the outer ring."""
    rings = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rings.extend(parse_polygon(line))
    return RegionPolygon(tuple(tuple(r) for r in rings))


# ---------------------------------------------------------------------------
# graph construction


def endpoint_center(lines: Sequence[LineRecord]) -> GeoPoint:
    """Default projection centre: spherical centroid of all line endpoints."""
    pts = [p for rec in lines for p in (rec.start, rec.end)]
    return geographic_centroid([p.lon for p in pts], [p.lat for p in pts])


def _snap_groups(lon: np.ndarray, lat: np.ndarray, tol_km: float) -> np.ndarray:
    """Group labels for endpoints, merging pairs within ``tol_km`` great-circle."""
    n = lon.size
    xyz = to_cartesian_km(lon, lat)
    # chord length is a lower bound on arc length, so this radius finds every candidate
    chord = 2.0 * EARTH_RADIUS_KM * np.sin(min(tol_km / (2.0 * EARTH_RADIUS_KM), np.pi / 2))
    pairs = cKDTree(xyz).query_pairs(chord * (1 + 1e-12), output_type="ndarray")
    if len(pairs):
        d = haversine_km(lon[pairs[:, 0]], lat[pairs[:, 0]], lon[pairs[:, 1]], lat[pairs[:, 1]])
        pairs = pairs[d <= tol_km]
    link = coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])) if len(pairs) else ([], ([], [])),
        shape=(n, n),
    )
    _, labels = connected_components(link, directed=False)
    # relabel by first appearance so ids follow input order
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    remap = np.empty_like(order)
    remap[order] = np.arange(order.size)
    return remap[labels]


def build_graph(
    lines: Sequence[LineRecord],
    snap_tolerance_km: float = DEFAULT_SNAP_KM,
    center: Optional[GeoPoint] = None,
) -> SpatialGraph:
    """Turn line records into a simple spatial graph.

    Every line endpoint is snapped to a node; endpoints within
    ``snap_tolerance_km`` of each other (transitively) share a node whose
    position is the centroid of the group. Lines that collapse onto one node
    are dropped, and parallel lines are merged into a single edge carrying
    a multiplicity and the shortest polyline length.
    """
    if not lines:
        raise ValueError("no input lines")
    if not snap_tolerance_km > 0:
        raise ValueError("snap_tolerance_km must be positive")
    if center is None:
        center = endpoint_center(lines)

    ends = np.array(
        [[(r.start.lon, r.start.lat), (r.end.lon, r.end.lat)] for r in lines], dtype=float
    ).reshape(-1, 2)
    labels = _snap_groups(ends[:, 0], ends[:, 1], snap_tolerance_km)
    n = int(labels.max()) + 1

    groups = [[] for _ in range(n)]
    for k, lab in enumerate(labels):
        groups[lab].append(k)
    geo = np.empty((n, 2))
    for lab, members in enumerate(groups):
        if len(members) == 1:
            geo[lab] = ends[members[0]]
        else:
            c = geographic_centroid(ends[members, 0], ends[members, 1])
            geo[lab] = (c.lon, c.lat)
    pos = project_lonlat(geo[:, 0], geo[:, 1], center)

    edge_index: dict[tuple[int, int], int] = {}
    edges, actual, mult = [], [], []
    for i, rec in enumerate(lines):
        u, v = int(labels[2 * i]), int(labels[2 * i + 1])
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        length = polyline_length_km(rec.geometry)
        k = edge_index.get(key)
        if k is None:
            edge_index[key] = len(edges)
            edges.append(key)
            actual.append(length)
            mult.append(1)
        else:
            actual[k] = min(actual[k], length)
            mult[k] += 1

    return SpatialGraph(
        pos=pos,
        edges=np.array(edges, dtype=np.int64).reshape(-1, 2),
        geo=geo,
        actual_km=np.array(actual, dtype=float),
        multiplicity=np.array(mult, dtype=np.int64),
        projection_center=center,
    )


def clip_region(g: SpatialGraph, poly: RegionPolygon) -> SpatialGraph:
    """Keep the nodes inside ``poly`` and the edges between them."""
    if g.geo is None:
        raise ValueError("graph has no geographic coordinates to clip against")
    keep = poly.contains(g.geo[:, 0], g.geo[:, 1])
    return g.subgraph(keep)


def largest_component(g: SpatialGraph) -> SpatialGraph:
    """Subgraph induced by the largest connected component.

    Ties go to the component holding the smallest node id.
    """
    if g.n == 0:
        return g
    _, labels = g.components()
    sizes = np.bincount(labels)
    # first node (smallest id) lying in a component of maximal size
    winner = labels[np.flatnonzero(sizes[labels] == sizes.max())[0]]
    return g.subgraph(labels == winner)
