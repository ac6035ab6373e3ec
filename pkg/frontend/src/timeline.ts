/**
 * Metric timeline: mean-alpha / psnr / residual series plus steering markers.
 *
 * Drawing goes through a minimal context interface so the geometry is
 * testable without a DOM canvas.
 */

import { SteeringEntry } from "./api.js";
import { SeriesPoint } from "./session.js";

export interface ChartContext {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
}

export interface MarkerPosition {
  x: number;
  step: number;
  lambda: number;
}

export function stepToX(step: number, totalSteps: number, width: number): number {
  const total = Math.max(totalSteps, 1);
  return (Math.min(step, total) / total) * width;
}

/** One marker per applied steering entry, in trace order. */
export function markerPositions(
  trace: SteeringEntry[],
  totalSteps: number,
  width: number,
): MarkerPosition[] {
  return trace.map((entry) => ({
    x: stepToX(entry.step, totalSteps, width),
    step: entry.step,
    lambda: entry.lambda,
  }));
}

function pathFor(
  ctx: ChartContext,
  points: Array<{ x: number; y: number }>,
  color: string,
): void {
  if (points.length === 0) return;
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  ctx.moveTo(points[0].x, points[0].y);
  for (let i = 1; i < points.length; i++) ctx.lineTo(points[i].x, points[i].y);
  ctx.stroke();
}

function normalize(values: number[]): (v: number) => number {
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo;
  if (span <= 0) return () => 0.5;
  return (v) => (v - lo) / span;
}

export function drawTimeline(
  ctx: ChartContext,
  series: SeriesPoint[],
  trace: SteeringEntry[],
  totalSteps: number,
  width: number,
  height: number,
): MarkerPosition[] {
  ctx.clearRect(0, 0, width, height);
  const pad = 4;
  const innerH = height - 2 * pad;
  const toY = (unit: number) => pad + (1 - unit) * innerH;

  // mean alpha lives in [0, 1]: fixed scale
  pathFor(
    ctx,
    series.map((p) => ({ x: stepToX(p.step, totalSteps, width), y: toY(p.meanAlpha) })),
    "#58a6ff",
  );
  const psnrPoints = series.filter((p) => p.psnr !== null && Number.isFinite(p.psnr));
  if (psnrPoints.length > 0) {
    const scale = normalize(psnrPoints.map((p) => p.psnr as number));
    pathFor(
      ctx,
      psnrPoints.map((p) => ({
        x: stepToX(p.step, totalSteps, width),
        y: toY(scale(p.psnr as number)),
      })),
      "#3fb950",
    );
  }
  if (series.length > 0) {
    const scale = normalize(series.map((p) => p.residual));
    pathFor(
      ctx,
      series.map((p) => ({ x: stepToX(p.step, totalSteps, width), y: toY(scale(p.residual)) })),
      "#d29922",
    );
  }

  const markers = markerPositions(trace, totalSteps, width);
  ctx.fillStyle = "#f85149";
  for (const marker of markers) {
    ctx.fillRect(marker.x - 0.5, 0, 1, height);
    ctx.font = "9px sans-serif";
    ctx.fillText(marker.lambda.toFixed(2), marker.x + 2, 9);
  }
  return markers;
}
