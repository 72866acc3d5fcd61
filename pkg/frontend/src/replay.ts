// Replay helpers for archived episode records. Metrics always score the raw
// trajectory; simplification here is display-only.

import { EpisodeRecordDict, MetricsDict } from "./protocol.js";

export type Point = [number, number];

export function polylineLength(points: readonly Point[]): number {
  let total = 0;
  for (let i = 1; i < points.length; i++) {
    const [x0, y0] = points[i - 1]!;
    const [x1, y1] = points[i]!;
    total += Math.hypot(x1 - x0, y1 - y0);
  }
  return total;
}

function perpendicularDistance(p: Point, a: Point, b: Point): number {
  const [px, py] = p;
  const [ax, ay] = a;
  const [bx, by] = b;
  const dx = bx - ax;
  const dy = by - ay;
  const lenSq = dx * dx + dy * dy;
  if (lenSq === 0) {
    return Math.hypot(px - ax, py - ay);
  }
  return Math.abs(dx * (ay - py) - dy * (ax - px)) / Math.sqrt(lenSq);
}

// Ramer-Douglas-Peucker; keeps both endpoints, tolerance in meters.
export function rdpSimplify(points: readonly Point[], epsilon: number): Point[] {
  if (points.length < 3) {
    return points.slice();
  }
  const first = points[0]!;
  const last = points[points.length - 1]!;
  let worst = 0;
  let worstIndex = 0;
  for (let i = 1; i < points.length - 1; i++) {
    const d = perpendicularDistance(points[i]!, first, last);
    if (d > worst) {
      worst = d;
      worstIndex = i;
    }
  }
  if (worst <= epsilon) {
    return [first, last];
  }
  const left = rdpSimplify(points.slice(0, worstIndex + 1), epsilon);
  const right = rdpSimplify(points.slice(worstIndex), epsilon);
  return left.slice(0, -1).concat(right);
}

export interface ReplaySummary {
  episodeId: string;
  sceneId: string;
  seed: number;
  steps: number;
  termination: string;
  ndi: number;
  travelled: number;
  points: Point[];
  askTicks: number[];
}

// One record -> everything the replay view needs. displayEpsilon trades
// polyline fidelity for draw calls; 0 keeps every point.
export function summarizeRecord(record: EpisodeRecordDict,
                                displayEpsilon = 0): ReplaySummary {
  const raw = record.trajectory as Point[];
  return {
    episodeId: record.episode_id,
    sceneId: record.scene_id,
    seed: record.seed,
    steps: record.steps,
    termination: record.termination,
    ndi: record.ndi_events.length,
    travelled: polylineLength(raw),
    points: displayEpsilon > 0 ? rdpSimplify(raw, displayEpsilon) : raw.slice(),
    askTicks: record.ndi_events.map((e) => e.tick),
  };
}

export function formatMetrics(metrics: MetricsDict): string[] {
  return [
    `TL ${metrics.tl.toFixed(2)} m`,
    `SR ${metrics.sr.toFixed(0)}`,
    `SPL ${metrics.spl.toFixed(3)}`,
    `NE ${metrics.ne.toFixed(2)} m`,
    `ONE ${metrics.one.toFixed(2)} m`,
    `OSR ${metrics.osr.toFixed(0)}`,
    `NDI ${metrics.ndi.toFixed(0)}`,
  ];
}
