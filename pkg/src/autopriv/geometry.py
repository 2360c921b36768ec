"""Planar geometry helpers: local projection, convex polygons, Minkowski gauge.

All distance computations in this package happen in meters on a local
equirectangular projection. That approximation is fine at city scale (the
demo operates on trajectories a few kilometers across) and keeps every
downstream computation in plain 2-D euclidean space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParam

EARTH_RADIUS_M = 6_371_000.0
_DEG = math.pi / 180.0

# meters per degree of latitude (and of longitude at the reference parallel)
M_PER_DEG = EARTH_RADIUS_M * _DEG


@dataclass(frozen=True)
class LocalProjection:
    """Equirectangular projection anchored at a reference point.

    x grows east, y grows north, both in meters. The longitude scale is
    fixed at the reference latitude, so the projection is only meant for
    use within a few tens of kilometers of the anchor.
    """

    ref_lat: float
    ref_lon: float

    @property
    def _lon_scale(self) -> float:
        return M_PER_DEG * math.cos(self.ref_lat * _DEG)

    def to_xy(self, lat: float, lon: float) -> tuple[float, float]:
        return ((lon - self.ref_lon) * self._lon_scale,
                (lat - self.ref_lat) * M_PER_DEG)

    def to_geo(self, x: float, y: float) -> tuple[float, float]:
        return (self.ref_lat + y / M_PER_DEG,
                self.ref_lon + x / self._lon_scale)

    def distance_m(self, lat1: float, lon1: float, lat2: float, lon2: float) -> float:
        x1, y1 = self.to_xy(lat1, lon1)
        x2, y2 = self.to_xy(lat2, lon2)
        return math.hypot(x2 - x1, y2 - y1)


class ConvexPolygon:
    """Convex polygon with counterclockwise vertices strictly containing the origin.

    Used as the noise-shaping body of the hull-based location mechanism:
    provides the Minkowski gauge (the "how many copies of the hull until I
    reach z" norm) and uniform sampling from the interior.
    """

    def __init__(self, vertices) -> None:
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise InvalidParam("hull needs at least 3 planar vertices")
        nxt = np.roll(v, -1, axis=0)
        edges = nxt - v
        cross = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - \
            edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]
        scale = float(np.abs(v).max())
        if np.any(cross <= 1e-12 * max(scale, 1.0) ** 2):
            raise InvalidParam("hull must be strictly convex with counterclockwise vertices")
        # outward edge normals; offsets positive iff origin strictly inside
        normals = np.stack([edges[:, 1], -edges[:, 0]], axis=1)
        offsets = np.einsum("ij,ij->i", normals, v)
        if np.any(offsets <= 1e-12 * max(scale, 1.0) ** 2):
            raise InvalidParam("hull must strictly contain the origin")
        self.vertices = v
        self._normals = normals
        self._offsets = offsets
        # fan triangulation rooted at vertex 0, for uniform sampling
        a, b, c = v[0], v[1:-1], v[2:]
        tri_areas = 0.5 * np.abs((b[:, 0] - a[0]) * (c[:, 1] - a[1]) -
                                 (c[:, 0] - a[0]) * (b[:, 1] - a[1]))
        self._tri_cdf = np.cumsum(tri_areas)
        self.area = float(self._tri_cdf[-1])

    def scaled(self, factor: float) -> "ConvexPolygon":
        if factor <= 0:
            raise InvalidParam("scale factor must be positive")
        return ConvexPolygon(self.vertices * factor)

    def gauge(self, points) -> np.ndarray:
        """Minkowski gauge of each point: min t >= 0 with point in t * hull.

        For a convex body containing the origin this is
        max_i (n_i . z) / (n_i . v_i) over the edge normals n_i.
        """
        z = np.atleast_2d(np.asarray(points, dtype=float))
        ratios = (z @ self._normals.T) / self._offsets
        return ratios.max(axis=1)

    def contains(self, points) -> np.ndarray:
        return self.gauge(points) <= 1.0

    def sample_uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw n points uniformly from the polygon interior (shape (n, 2))."""
        picks = self._tri_cdf.searchsorted(rng.random(n) * self.area)
        a = self.vertices[0]
        b = self.vertices[1 + picks]
        c = self.vertices[2 + picks]
        s = np.sqrt(rng.random(n))[:, None]
        t = rng.random(n)[:, None]
        return (1.0 - s) * a + s * (1.0 - t) * b + s * t * c

    def to_list(self) -> list[list[float]]:
        return [[float(x), float(y)] for x, y in self.vertices]


def regular_polygon(n: int, radius: float = 1.0) -> ConvexPolygon:
    """Regular n-gon inscribed in the circle of the given radius."""
    if n < 3 or radius <= 0:
        raise InvalidParam("need n >= 3 and radius > 0")
    ang = 2.0 * math.pi * np.arange(n) / n
    return ConvexPolygon(np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1))
