"""Location-based service provider and trajectory-privacy quantifier.

The POI store answers nearest-neighbor queries over *disclosed* (obfuscated)
locations through a uniform grid bucket index. The adversary maintains a
cell-grid posterior over the user's true position and performs an exact
Bayes update per disclosure using the noise mechanism's density, yielding
the expected-inference-error series shown in the demo alongside the
cumulative epsilon from the ledger.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datamodel import GeoPoint
from .errors import DegeneratePosterior, InvalidParam, UnknownCategory
from .geometry import ConvexPolygon, LocalProjection
from .pets.mechanisms import planar_isotropic_pdf, planar_laplace_pdf


@dataclass(frozen=True)
class Poi:
    id: str
    category: str
    location: GeoPoint
    name: str

    def __post_init__(self):
        if self.category != self.category.lower():
            raise InvalidParam(f"POI category must be lowercase: {self.category!r}")


class PoiStore:
    """Immutable POI collection with a uniform grid bucket index."""

    def __init__(self, pois: list[Poi], projection: LocalProjection | None = None,
                 cell_m: float = 500.0):
        if not pois:
            raise InvalidParam("POI store cannot be empty")
        self.pois = list(pois)
        ref = projection or LocalProjection(pois[0].location.lat,
                                            pois[0].location.lon)
        self.projection = ref
        self.cell_m = cell_m
        self._xy = np.array([ref.to_xy(p.location.lat, p.location.lon)
                             for p in pois])
        self.categories = sorted({p.category for p in pois})
        self._buckets: dict[tuple[str, int, int], list[int]] = {}
        for idx, p in enumerate(pois):
            cx = math.floor(self._xy[idx, 0] / cell_m)
            cy = math.floor(self._xy[idx, 1] / cell_m)
            self._buckets.setdefault((p.category, cx, cy), []).append(idx)

    @classmethod
    def from_csv(cls, path: str | Path, **kwargs) -> "PoiStore":
        pois = []
        with Path(path).open(newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                pois.append(Poi(row["id"], row["category"],
                                GeoPoint(float(row["lat"]), float(row["lon"])),
                                row["name"]))
        return cls(pois, **kwargs)

    def nearest(self, loc: GeoPoint, category: str, k: int,
                radius_m: float | None = None) -> list[Poi]:
        """Up to k POIs of the category within the radius, nearest first,
        distance ties broken by id."""
        if k < 1:
            raise InvalidParam("k must be >= 1")
        if category not in self.categories:
            raise UnknownCategory(category)
        x, y = self.projection.to_xy(loc.lat, loc.lon)
        found: list[tuple[float, str, int]] = []
        ring = 0
        cx = math.floor(x / self.cell_m)
        cy = math.floor(y / self.cell_m)
        max_ring = self._max_ring(x, y, radius_m)
        while ring <= max_ring:
            for idx in self._ring_indices(category, cx, cy, ring):
                d = math.hypot(self._xy[idx, 0] - x, self._xy[idx, 1] - y)
                if radius_m is None or d <= radius_m:
                    found.append((d, self.pois[idx].id, idx))
            # unexplored cells lie at Chebyshev ring >= ring+1, hence at least
            # ring * cell_m away; strict inequality keeps id tie-breaks exact
            if len(found) >= k:
                found.sort()
                kth = found[k - 1][0]
                if kth < ring * self.cell_m:
                    break
            ring += 1
        found.sort()
        return [self.pois[idx] for _, _, idx in found[:k]]

    def nearest_linear(self, loc: GeoPoint, category: str, k: int,
                       radius_m: float | None = None) -> list[Poi]:
        """Brute-force reference scan (used by tests as the oracle)."""
        if k < 1:
            raise InvalidParam("k must be >= 1")
        if category not in self.categories:
            raise UnknownCategory(category)
        x, y = self.projection.to_xy(loc.lat, loc.lon)
        scored = []
        for idx, p in enumerate(self.pois):
            if p.category != category:
                continue
            d = math.hypot(self._xy[idx, 0] - x, self._xy[idx, 1] - y)
            if radius_m is None or d <= radius_m:
                scored.append((d, p.id, idx))
        scored.sort()
        return [self.pois[idx] for _, _, idx in scored[:k]]

    def _max_ring(self, x: float, y: float, radius_m: float | None) -> int:
        if radius_m is not None:
            return int(radius_m / self.cell_m) + 1
        xs = self._xy[:, 0]
        ys = self._xy[:, 1]
        span = max(abs(xs - x).max(), abs(ys - y).max())
        return int(span / self.cell_m) + 1

    def _ring_indices(self, category: str, cx: int, cy: int, ring: int):
        if ring == 0:
            yield from self._buckets.get((category, cx, cy), ())
            return
        for dx in range(-ring, ring + 1):
            for dy in (-ring, ring):
                yield from self._buckets.get((category, cx + dx, cy + dy), ())
        for dy in range(-ring + 1, ring):
            for dx in (-ring, ring):
                yield from self._buckets.get((category, cx + dx, cy + dy), ())


def recall_at_k(store: PoiStore, true_loc: GeoPoint, disclosed_loc: GeoPoint,
                category: str, k: int) -> float:
    """Fraction of the true top-k preserved when querying at the disclosed
    location; computed over the available set when fewer than k POIs exist."""
    top_true = store.nearest(true_loc, category, k)
    if not top_true:
        return 1.0
    top_disclosed = store.nearest(disclosed_loc, category, k)
    true_ids = {p.id for p in top_true}
    hit = sum(1 for p in top_disclosed if p.id in true_ids)
    return hit / len(top_true)


# ---------------------------------------------------------------- adversary

class AdversaryGrid:
    """Cell-lattice Bayesian tracker of the user's true location."""

    def __init__(self, min_lat: float, min_lon: float, max_lat: float,
                 max_lon: float, projection: LocalProjection, cell_m: float = 100.0):
        if cell_m <= 0:
            raise InvalidParam("cell size must be positive")
        x0, y0 = projection.to_xy(min_lat, min_lon)
        x1, y1 = projection.to_xy(max_lat, max_lon)
        self.projection = projection
        self.cell_m = cell_m
        # the 1e-6 guard stops projection round-off from adding a phantom cell
        self.nx = max(1, int(math.ceil((x1 - x0) / cell_m - 1e-6)))
        self.ny = max(1, int(math.ceil((y1 - y0) / cell_m - 1e-6)))
        xs = x0 + (np.arange(self.nx) + 0.5) * cell_m
        ys = y0 + (np.arange(self.ny) + 0.5) * cell_m
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        self.centers = np.stack([gx.ravel(), gy.ravel()], axis=1)
        self.posterior = np.full(len(self.centers), 1.0 / len(self.centers))
        self.history: list[GeoPoint] = []

    def likelihood(self, disclosed: GeoPoint, pet_id: str, params: dict) -> np.ndarray:
        """Mechanism density of the disclosed point given each cell center."""
        zx, zy = self.projection.to_xy(disclosed.lat, disclosed.lon)
        offsets = np.array([zx, zy]) - self.centers
        if pet_id == "planar_laplace":
            return planar_laplace_pdf(offsets, params["epsilon"])
        if pet_id == "planar_isotropic":
            hull = ConvexPolygon(params["hull"])
            return planar_isotropic_pdf(offsets, params["epsilon"], hull)
        raise InvalidParam(f"no known density for mechanism {pet_id!r}")

    def update(self, disclosed: GeoPoint, pet_id: str, params: dict) -> None:
        """Exact Bayes step: posterior ∝ prior × likelihood, renormalized."""
        lik = self.likelihood(disclosed, pet_id, params)
        unnormalized = self.posterior * lik
        total = unnormalized.sum()
        if total <= 0.0 or not np.isfinite(total):
            raise DegeneratePosterior("all-zero likelihood over the grid")
        self.posterior = unnormalized / total
        self.history.append(disclosed)

    def expected_inference_error(self, true_loc: GeoPoint) -> float:
        """Posterior-weighted mean distance from cell centers to the truth."""
        tx, ty = self.projection.to_xy(true_loc.lat, true_loc.lon)
        d = np.hypot(self.centers[:, 0] - tx, self.centers[:, 1] - ty)
        return float(np.dot(self.posterior, d))

    def map_estimate(self) -> GeoPoint:
        idx = int(np.argmax(self.posterior))
        lat, lon = self.projection.to_geo(self.centers[idx, 0],
                                          self.centers[idx, 1])
        return GeoPoint(lat, lon)


def create_poi_app(store: PoiStore):
    """Standalone LBS provider surface:
    GET /v1/pois/nearby?lat=&lon=&cat=&k=[&radius_m=]"""
    from fastapi import FastAPI, Response
    import json as _json

    app = FastAPI(title="autopriv-lbs", docs_url=None, redoc_url=None)

    @app.get("/v1/pois/nearby")
    async def nearby(lat: float, lon: float, cat: str, k: int = 5,
                     radius_m: float | None = None):
        try:
            pois = store.nearest(GeoPoint(lat, lon), cat, k, radius_m)
        except UnknownCategory:
            return Response(status_code=404, media_type="application/json",
                            content='{"error": "unknown_category"}')
        except InvalidParam as exc:
            return Response(status_code=422, media_type="application/json",
                            content=_json.dumps({"error": "invalid",
                                                 "message": str(exc)}))
        body = _json.dumps([{"id": p.id, "category": p.category,
                             "lat": p.location.lat, "lon": p.location.lon,
                             "name": p.name} for p in pois])
        return Response(content=body, media_type="application/json")

    return app
