"""Spherical-earth distances and the azimuthal equidistant projection.

All distances are kilometres on a sphere of radius :data:`EARTH_RADIUS_KM`.
Planar coordinates use +x east and +y north of the projection centre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import least_squares

EARTH_RADIUS_KM = 6371.0088
DEG = math.pi / 180.0

# points closer than this to the antipode of the centre cannot be projected
ANTIPODE_GUARD_KM = 1.0


@dataclass(frozen=True)
class GeoPoint:
    """Longitude/latitude pair in decimal degrees."""

    lon: float
    lat: float

    def __post_init__(self):
        object.__setattr__(self, "lon", float(self.lon))
        object.__setattr__(self, "lat", float(self.lat))
        if not (math.isfinite(self.lon) and math.isfinite(self.lat)):
            raise ValueError(f"non-finite coordinate ({self.lon}, {self.lat})")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")


def _lonlat(points) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(points, GeoPoint):
        return np.array([points.lon]), np.array([points.lat])
    arr = np.asarray(
        [(p.lon, p.lat) if isinstance(p, GeoPoint) else p for p in points],
        dtype=float,
    ).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def haversine_km(lon1, lat1, lon2, lat2):
    """Vectorised haversine distance in km between (lon1, lat1) and (lon2, lat2)."""
    phi1 = np.asarray(lat1, dtype=float) * DEG
    phi2 = np.asarray(lat2, dtype=float) * DEG
    dphi = phi2 - phi1
    dlam = (np.asarray(lon2, dtype=float) - np.asarray(lon1, dtype=float)) * DEG
    h = np.sin(0.5 * dphi) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(0.5 * dlam) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def great_circle_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance between two points in km."""
    return float(haversine_km(a.lon, a.lat, b.lon, b.lat))


def polyline_length_km(points: Sequence[GeoPoint]) -> float:
    """Sum of great-circle segment lengths along a polyline."""
    if len(points) == 0:
        raise ValueError("polyline needs at least one point")
    lon, lat = _lonlat(points)
    if lon.size < 2:
        return 0.0
    return float(haversine_km(lon[:-1], lat[:-1], lon[1:], lat[1:]).sum())


def project_lonlat(lon, lat, center: GeoPoint) -> np.ndarray:
    """Azimuthal equidistant projection of coordinate arrays, shape (n, 2) km."""
    lon = np.atleast_1d(np.asarray(lon, dtype=float))
    lat = np.atleast_1d(np.asarray(lat, dtype=float))
    phi0 = center.lat * DEG
    phi = lat * DEG
    dlam = (lon - center.lon) * DEG

    dist = haversine_km(center.lon, center.lat, lon, lat)
    if np.any(dist > math.pi * EARTH_RADIUS_KM - ANTIPODE_GUARD_KM):
        raise ValueError("point (near-)antipodal to the projection centre")
    # initial bearing from the centre, clockwise from north
    azimuth = np.arctan2(
        np.sin(dlam) * np.cos(phi),
        math.cos(phi0) * np.sin(phi) - math.sin(phi0) * np.cos(phi) * np.cos(dlam),
    )
    return np.column_stack([dist * np.sin(azimuth), dist * np.cos(azimuth)])


def project(points: Iterable[GeoPoint], center: GeoPoint) -> np.ndarray:
    """Project geographic points to planar km coordinates around ``center``.

    The planar radius of every projected point equals its great-circle
    distance from ``center`` and its planar azimuth equals the initial
    bearing from ``center``.

    Returns
    -------
    ndarray of shape (n, 2)
    """
    lon, lat = _lonlat(list(points))
    if lon.size == 0:
        raise ValueError("nothing to project")
    return project_lonlat(lon, lat, center)


def unproject(xy, center: GeoPoint) -> np.ndarray:
    """Inverse of :func:`project`; returns an (n, 2) array of (lon, lat) degrees."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    c = np.hypot(xy[:, 0], xy[:, 1]) / EARTH_RADIUS_KM
    azimuth = np.arctan2(xy[:, 0], xy[:, 1])
    phi0 = center.lat * DEG
    sin_phi = math.sin(phi0) * np.cos(c) + math.cos(phi0) * np.sin(c) * np.cos(azimuth)
    phi = np.arcsin(np.clip(sin_phi, -1.0, 1.0))
    dlam = np.arctan2(
        np.sin(azimuth) * np.sin(c) * math.cos(phi0),
        np.cos(c) - math.sin(phi0) * sin_phi,
    )
    lon = (center.lon * DEG + dlam + math.pi) % (2 * math.pi) - math.pi
    return np.column_stack([lon / DEG, phi / DEG])


def geographic_centroid(lon, lat) -> GeoPoint:
    """Centroid of points on the sphere (normalised mean of unit vectors)."""
    lam = np.asarray(lon, dtype=float) * DEG
    phi = np.asarray(lat, dtype=float) * DEG
    v = np.column_stack(
        [np.cos(phi) * np.cos(lam), np.cos(phi) * np.sin(lam), np.sin(phi)]
    ).mean(axis=0)
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        raise ValueError("centroid undefined for points spread over the whole sphere")
    v /= norm
    return GeoPoint(
        float(math.atan2(v[1], v[0]) / DEG), float(math.asin(np.clip(v[2], -1, 1)) / DEG)
    )


def to_cartesian_km(lon, lat) -> np.ndarray:
    """Earth-centred Cartesian coordinates in km, shape (n, 3)."""
    lam = np.asarray(lon, dtype=float) * DEG
    phi = np.asarray(lat, dtype=float) * DEG
    return EARTH_RADIUS_KM * np.column_stack(
        [np.cos(phi) * np.cos(lam), np.cos(phi) * np.sin(lam), np.sin(phi)]
    )


def infer_center(xy, lon, lat) -> GeoPoint:
    """Projection centre that maps the given lon/lat to the given planar km positions.

    Solved by least squares from the spherical centroid; used to recover the
    centre of a graph stored without it.
    """
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    start = geographic_centroid(lon, lat)

    def resid(c):
        return (project_lonlat(lon, lat, GeoPoint(c[0], c[1])) - xy).ravel()

    fit = least_squares(resid, [start.lon, start.lat], xtol=1e-15, ftol=1e-15, gtol=1e-15,
                        bounds=([-180.0, -90.0], [180.0, 90.0]))
    return GeoPoint(*fit.x)

