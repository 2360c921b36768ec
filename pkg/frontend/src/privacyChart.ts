/**
 * Trajectory-privacy chart: cumulative epsilon and expected inference error
 * against disclosure index, both series exactly as served by /api/state.
 * Geometry is computed as data so tests can check lengths and monotonicity
 * without a canvas.
 */

import { StateSnapshot } from "./types.js";

export interface ChartPoint {
  index: number;
  value: number;
  x: number;
  y: number;
}

export interface ChartSeries {
  name: string;
  color: string;
  points: ChartPoint[];
}

export interface PrivacyChart {
  width: number;
  height: number;
  series: ChartSeries[];
  empty: boolean;
}

function scaleSeries(
  name: string,
  color: string,
  values: { index: number; value: number }[],
  width: number,
  height: number,
  maxIndex: number,
): ChartSeries {
  const maxValue = Math.max(...values.map((v) => v.value), 1e-12);
  const points = values.map((v) => ({
    index: v.index,
    value: v.value,
    x: maxIndex > 0 ? (v.index / maxIndex) * (width - 40) + 30 : 30,
    y: height - 20 - (v.value / maxValue) * (height - 40),
  }));
  return { name, color, points };
}

export function computePrivacyChart(
  snapshot: StateSnapshot | null,
  width = 640,
  height = 240,
): PrivacyChart {
  if (!snapshot || snapshot.epsilon_series.length === 0) {
    return { width, height, series: [], empty: true };
  }
  const maxIndex = Math.max(
    ...snapshot.epsilon_series.map((p) => p.index),
    0,
  );
  const epsilon = scaleSeries(
    "cumulative epsilon",
    "#1565c0",
    snapshot.epsilon_series.map((p) => ({
      index: p.index,
      value: p.cumulative_epsilon,
    })),
    width,
    height,
    maxIndex,
  );
  const inference = scaleSeries(
    "expected inference error (m)",
    "#ef6c00",
    snapshot.inference_error_series.map((p) => ({
      index: p.index,
      value: p.inference_error_m,
    })),
    width,
    height,
    maxIndex,
  );
  return { width, height, series: [epsilon, inference], empty: false };
}

export function isNonDecreasing(values: number[]): boolean {
  return values.every((v, i) => i === 0 || v >= values[i - 1] - 1e-12);
}

export function chartPointCount(chart: PrivacyChart): number {
  return chart.empty ? 0 : chart.series[0].points.length;
}

export interface ChartCanvas {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
}

export function drawPrivacyChart(chart: PrivacyChart, ctx: ChartCanvas): void {
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, chart.width, chart.height);
  if (chart.empty) {
    ctx.fillStyle = "#888888";
    ctx.fillText("no disclosures yet", 30, chart.height / 2);
    return;
  }
  for (const series of chart.series) {
    ctx.strokeStyle = series.color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    series.points.forEach((p, i) => {
      if (i === 0) ctx.moveTo(p.x, p.y);
      else ctx.lineTo(p.x, p.y);
    });
    ctx.stroke();
    ctx.fillStyle = series.color;
    for (const p of series.points) {
      ctx.beginPath();
      ctx.arc(p.x, p.y, 3, 0, 2 * Math.PI);
      ctx.fill();
    }
  }
  ctx.fillStyle = chart.series[0].color;
  ctx.fillText(chart.series[0].name, 30, 14);
  ctx.fillStyle = chart.series[1].color;
  ctx.fillText(chart.series[1].name, 220, 14);
}
