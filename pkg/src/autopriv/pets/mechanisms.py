"""Location and scalar obfuscation mechanisms.

Two geo mechanisms are provided, both private in the geo-indistinguishability
sense (output densities for inputs at distance d differ by at most e^(eps*d)
in the relevant metric):

* ``planar_laplace`` - radially symmetric noise with density proportional to
  exp(-eps * |z|). The radius is drawn by inverting the radial CDF
  C(r) = 1 - (1 + eps*r) * exp(-eps*r) via the secondary real branch of the
  Lambert W function; the angle is uniform. Mean displacement is 2/eps.

* ``planar_isotropic`` - hull-shaped noise with density proportional to
  exp(-eps * ||z||_K) where ||.||_K is the Minkowski gauge of a convex hull
  K containing the origin. Sampled as z = r * u with u uniform in K and
  r ~ Gamma(shape 3, scale 1/eps), the standard planar recipe for
  gauge-shaped densities.

Scalar readings get one-dimensional Laplace noise, locations can instead be
generalized by snapping to a grid, and identifiers are pseudonymized with a
keyed hash. Every randomized function takes an explicit numpy Generator and
is a deterministic function of (inputs, generator state).
"""

from __future__ import annotations

import hashlib
import hmac
import math
import struct

import numpy as np
from scipy.special import lambertw

from ..datamodel import GeoPoint
from ..errors import InvalidParam, WeakSecret
from ..geometry import ConvexPolygon, LocalProjection, M_PER_DEG

_INV_E = math.exp(-1.0)


# ------------------------------------------------------------- planar laplace

def planar_laplace_offsets(epsilon: float, size: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Sample ``size`` planar Laplace noise vectors in meters, shape (size, 2).

    Draw order is fixed (angles, then radial quantiles) so seeded generators
    reproduce byte-identical outputs.
    """
    if epsilon <= 0:
        raise InvalidParam("epsilon must be positive")
    theta = rng.random(size) * 2.0 * math.pi
    p = rng.random(size)
    r = -(np.real(lambertw((p - 1.0) * _INV_E, k=-1)) + 1.0) / epsilon
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)


def planar_laplace(loc: GeoPoint, epsilon: float,
                   rng: np.random.Generator) -> GeoPoint:
    """Geo-indistinguishable obfuscation of a single location (eps in 1/m)."""
    dx, dy = planar_laplace_offsets(epsilon, 1, rng)[0]
    return _offset_geo(loc, float(dx), float(dy))


def planar_laplace_pdf(offsets, epsilon: float) -> np.ndarray:
    """Density of the planar Laplace noise at the given (n, 2) offsets."""
    z = np.atleast_2d(np.asarray(offsets, dtype=float))
    r = np.hypot(z[:, 0], z[:, 1])
    return (epsilon ** 2) / (2.0 * math.pi) * np.exp(-epsilon * r)


# ----------------------------------------------------------- planar isotropic

def planar_isotropic_offsets(epsilon: float, hull: ConvexPolygon, size: int,
                             rng: np.random.Generator) -> np.ndarray:
    """Sample hull-shaped noise vectors: r * u, r ~ Gamma(3, 1/eps), u ~ U(hull)."""
    if epsilon <= 0:
        raise InvalidParam("epsilon must be positive")
    r = rng.gamma(3.0, 1.0 / epsilon, size)
    u = hull.sample_uniform(size, rng)
    return r[:, None] * u


def planar_isotropic(loc: GeoPoint, epsilon: float, hull: ConvexPolygon,
                     rng: np.random.Generator) -> GeoPoint:
    """Hull-shaped geo-indistinguishable obfuscation of a single location."""
    dx, dy = planar_isotropic_offsets(epsilon, hull, 1, rng)[0]
    return _offset_geo(loc, float(dx), float(dy))


def planar_isotropic_pdf(offsets, epsilon: float, hull: ConvexPolygon) -> np.ndarray:
    """Density eps^2 / (2 area(K)) * exp(-eps * ||z||_K) at (n, 2) offsets."""
    g = hull.gauge(offsets)
    return (epsilon ** 2) / (2.0 * hull.area) * np.exp(-epsilon * g)


# -------------------------------------------------------------------- scalar

def laplace_scalar(value: float, sensitivity: float, epsilon: float,
                   rng: np.random.Generator) -> float:
    """Classic one-dimensional Laplace mechanism, scale = sensitivity/epsilon."""
    if sensitivity < 0:
        raise InvalidParam("sensitivity must be non-negative")
    if epsilon <= 0:
        raise InvalidParam("epsilon must be positive")
    if sensitivity == 0:
        return float(value)
    return float(value + rng.laplace(0.0, sensitivity / epsilon))


# -------------------------------------------------------------- generalization

def round_xy(x: float, y: float, grid_m: float) -> tuple[float, float]:
    if grid_m <= 0:
        raise InvalidParam("grid size must be positive")
    return ((math.floor(x / grid_m) + 0.5) * grid_m,
            (math.floor(y / grid_m) + 0.5) * grid_m)


def round_location(loc: GeoPoint, grid_m: float) -> GeoPoint:
    """Snap a location to the center of its grid cell (idempotent).

    The grid is anchored at (0, 0) in degrees; latitude snaps first and the
    longitude cell width is computed at the snapped latitude so repeated
    application is a fixed point.
    """
    if grid_m <= 0:
        raise InvalidParam("grid size must be positive")
    lat_step = grid_m / M_PER_DEG
    lat = (math.floor(loc.lat / lat_step) + 0.5) * lat_step
    lon_step = grid_m / (M_PER_DEG * math.cos(math.radians(lat)))
    lon = (math.floor(loc.lon / lon_step) + 0.5) * lon_step
    return GeoPoint(lat, lon)


# ------------------------------------------------------------ pseudonymization

def pseudonymize(entity_id: str, purpose: str, secret: bytes) -> str:
    """Keyed, purpose-separating pseudonym: hex HMAC of (entity, purpose)."""
    if len(secret) < 32:
        raise WeakSecret("pseudonymization secret must be at least 32 bytes")
    ent = entity_id.encode()
    pur = purpose.encode()
    msg = struct.pack(">H", len(ent)) + ent + struct.pack(">H", len(pur)) + pur
    return hmac.new(secret, msg, hashlib.sha256).hexdigest()


# ---------------------------------------------------------------- geo helpers

def _offset_geo(loc: GeoPoint, dx_m: float, dy_m: float) -> GeoPoint:
    proj = LocalProjection(loc.lat, loc.lon)
    lat, lon = proj.to_geo(dx_m, dy_m)
    return GeoPoint(lat, lon)
