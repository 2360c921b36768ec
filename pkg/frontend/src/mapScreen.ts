/**
 * Offline map: no tile server, just a canvas with the scenario's bounding
 * box fitted to the viewport. Marker colors follow the demo convention:
 * disclosed location green, real location gray, points of interest red.
 *
 * The scene is computed as data first (marker kind, source coordinates,
 * projected position) and drawn second, so tests can assert on the scene
 * without a DOM. Every coordinate in the scene comes from an API response.
 */

import { LatLon, QueryResponse, StateSnapshot } from "./types.js";

export const MARKER_COLORS = {
  disclosed: "green",
  real: "gray",
  poi: "red",
} as const;

export type MarkerKind = keyof typeof MARKER_COLORS;

export interface Marker {
  kind: MarkerKind;
  color: string;
  /** source coordinates, verbatim from the API */
  lat: number;
  lon: number;
  /** projected canvas position */
  x: number;
  y: number;
  label?: string;
}

export interface MapScene {
  width: number;
  height: number;
  markers: Marker[];
  bounds: { minLat: number; maxLat: number; minLon: number; maxLon: number };
}

interface ScenePoint {
  kind: MarkerKind;
  point: LatLon;
  label?: string;
}

function collectPoints(
  snapshot: StateSnapshot | null,
  lastQuery: QueryResponse | null,
): ScenePoint[] {
  const points: ScenePoint[] = [];
  if (lastQuery) {
    for (const poi of lastQuery.pois) {
      points.push({
        kind: "poi",
        point: { lat: poi.lat, lon: poi.lon },
        label: poi.name,
      });
    }
    points.push({ kind: "disclosed", point: lastQuery.disclosed });
  } else if (snapshot?.last_disclosed) {
    points.push({ kind: "disclosed", point: snapshot.last_disclosed });
  }
  if (snapshot) {
    // the true location is the demo's trusted visualization channel
    points.push({ kind: "real", point: snapshot.true_location });
  }
  return points;
}

export function computeMapScene(
  snapshot: StateSnapshot | null,
  lastQuery: QueryResponse | null,
  width = 640,
  height = 480,
): MapScene {
  const points = collectPoints(snapshot, lastQuery);
  if (points.length === 0) {
    return {
      width,
      height,
      markers: [],
      bounds: { minLat: 0, maxLat: 0, minLon: 0, maxLon: 0 },
    };
  }
  let minLat = Math.min(...points.map((p) => p.point.lat));
  let maxLat = Math.max(...points.map((p) => p.point.lat));
  let minLon = Math.min(...points.map((p) => p.point.lon));
  let maxLon = Math.max(...points.map((p) => p.point.lon));
  // pad so single points and thin boxes stay visible (display only)
  const padLat = Math.max((maxLat - minLat) * 0.1, 1e-3);
  const padLon = Math.max((maxLon - minLon) * 0.1, 1e-3);
  minLat -= padLat;
  maxLat += padLat;
  minLon -= padLon;
  maxLon += padLon;

  const project = (p: LatLon): { x: number; y: number } => ({
    x: ((p.lon - minLon) / (maxLon - minLon)) * width,
    y: height - ((p.lat - minLat) / (maxLat - minLat)) * height,
  });

  const markers = points.map((sp) => {
    const { x, y } = project(sp.point);
    return {
      kind: sp.kind,
      color: MARKER_COLORS[sp.kind],
      lat: sp.point.lat,
      lon: sp.point.lon,
      x,
      y,
      label: sp.label,
    };
  });
  return { width, height, markers, bounds: { minLat, maxLat, minLon, maxLon } };
}

export function countByKind(scene: MapScene): Record<MarkerKind, number> {
  const counts: Record<MarkerKind, number> = { disclosed: 0, real: 0, poi: 0 };
  for (const marker of scene.markers) {
    counts[marker.kind] += 1;
  }
  return counts;
}

/** The subset of CanvasRenderingContext2D the map actually uses. */
export interface Canvas2DLike {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
}

export function drawScene(scene: MapScene, ctx: Canvas2DLike): void {
  ctx.fillStyle = "#f6f4ef";
  ctx.fillRect(0, 0, scene.width, scene.height);
  ctx.strokeStyle = "#b9b2a4";
  ctx.strokeRect(0.5, 0.5, scene.width - 1, scene.height - 1);
  // POIs under the location markers, real on top of disclosed
  const order: MarkerKind[] = ["poi", "disclosed", "real"];
  for (const kind of order) {
    for (const marker of scene.markers.filter((m) => m.kind === kind)) {
      ctx.fillStyle = marker.color;
      ctx.beginPath();
      ctx.arc(marker.x, marker.y, kind === "poi" ? 4 : 7, 0, 2 * Math.PI);
      ctx.fill();
    }
  }
}
