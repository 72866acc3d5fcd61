// Canvas renderer for the live teleop view. Pure functions over a minimal
// 2D-context interface so tests can record draw calls without a DOM.

import { ObservationFrame, SceneDict } from "./protocol.js";
import { Point } from "./replay.js";

// The subset of CanvasRenderingContext2D the renderer touches.
export interface Ctx2D {
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  font: string;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  closePath(): void;
  fill(rule?: CanvasFillRule): void;
  stroke(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
}

export interface Viewport {
  width: number;
  height: number;
  worldMin: Point;
  worldMax: Point;
}

const MARGIN_PX = 12;

export function viewScale(vp: Viewport): number {
  const sw = vp.worldMax[0] - vp.worldMin[0];
  const sh = vp.worldMax[1] - vp.worldMin[1];
  return Math.min((vp.width - 2 * MARGIN_PX) / sw, (vp.height - 2 * MARGIN_PX) / sh);
}

// World y grows up, canvas y grows down.
export function worldToScreen(vp: Viewport, x: number, y: number): Point {
  const s = viewScale(vp);
  return [
    MARGIN_PX + (x - vp.worldMin[0]) * s,
    vp.height - MARGIN_PX - (y - vp.worldMin[1]) * s,
  ];
}

export function viewportFor(scene: SceneDict, width: number, height: number): Viewport {
  return {
    width,
    height,
    worldMin: [scene.bounds.min[0], scene.bounds.min[1]],
    worldMax: [scene.bounds.max[0], scene.bounds.max[1]],
  };
}

function tracePolygon(ctx: Ctx2D, vp: Viewport, points: readonly Point[]): void {
  points.forEach(([wx, wy], i) => {
    const [sx, sy] = worldToScreen(vp, wx, wy);
    if (i === 0) {
      ctx.moveTo(sx, sy);
    } else {
      ctx.lineTo(sx, sy);
    }
  });
  ctx.closePath();
}

export function drawScene(ctx: Ctx2D, vp: Viewport, scene: SceneDict): void {
  ctx.fillStyle = "#10141c";
  ctx.fillRect(0, 0, vp.width, vp.height);
  ctx.fillStyle = "#2a3040";
  ctx.strokeStyle = "#3c4458";
  ctx.lineWidth = 1;
  for (const obstacle of scene.obstacles) {
    ctx.beginPath();
    tracePolygon(ctx, vp, obstacle.footprint);
    ctx.fill();
    ctx.stroke();
  }
  ctx.font = "11px system-ui, sans-serif";
  for (const poi of scene.pois) {
    const [sx, sy] = worldToScreen(vp, poi.position[0], poi.position[1]);
    ctx.fillStyle = "#8892a8";
    ctx.beginPath();
    ctx.arc(sx, sy, 3, 0, Math.PI * 2);
    ctx.fill();
    ctx.fillText(poi.name, sx + 5, sy - 5);
  }
}

export function drawTrail(ctx: Ctx2D, vp: Viewport, trail: readonly Point[]): void {
  if (trail.length < 2) {
    return;
  }
  ctx.strokeStyle = "#4f8cff";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  trail.forEach(([wx, wy], i) => {
    const [sx, sy] = worldToScreen(vp, wx, wy);
    if (i === 0) {
      ctx.moveTo(sx, sy);
    } else {
      ctx.lineTo(sx, sy);
    }
  });
  ctx.stroke();
}

export function drawObservation(ctx: Ctx2D, vp: Viewport, obs: ObservationFrame): void {
  const [ax, ay] = obs.position;
  const [sx, sy] = worldToScreen(vp, ax, ay);
  const s = viewScale(vp);

  // rays fan out CCW starting at the agent heading
  ctx.strokeStyle = "rgba(120, 200, 255, 0.35)";
  ctx.lineWidth = 1;
  obs.rays.forEach((depth, i) => {
    const angle = obs.heading + (i * 2 * Math.PI) / obs.rays.length;
    const [ex, ey] = worldToScreen(vp, ax + depth * Math.cos(angle),
                                   ay + depth * Math.sin(angle));
    ctx.beginPath();
    ctx.moveTo(sx, sy);
    ctx.lineTo(ex, ey);
    ctx.stroke();
  });

  for (const ped of obs.pedestrians) {
    const [px, py] = worldToScreen(vp, ped.position[0], ped.position[1]);
    ctx.fillStyle = ped.answering ? "#ffd75e" : "#c06df2";
    ctx.beginPath();
    ctx.arc(px, py, Math.max(2.5, 0.25 * s), 0, Math.PI * 2);
    ctx.fill();
  }

  for (const vehicle of obs.vehicles) {
    const [vx, vy] = worldToScreen(vp, vehicle.position[0], vehicle.position[1]);
    ctx.fillStyle = "#e2574f";
    ctx.fillRect(vx - 0.9 * s, vy - 0.45 * s, 1.8 * s, 0.9 * s);
  }

  // agent: triangle pointing along heading (canvas y is flipped)
  ctx.fillStyle = "#62d98b";
  ctx.beginPath();
  const nose = 0.6 * s;
  const wing = 0.35 * s;
  ctx.moveTo(sx + nose * Math.cos(obs.heading), sy - nose * Math.sin(obs.heading));
  ctx.lineTo(sx + wing * Math.cos(obs.heading + 2.5), sy - wing * Math.sin(obs.heading + 2.5));
  ctx.lineTo(sx + wing * Math.cos(obs.heading - 2.5), sy - wing * Math.sin(obs.heading - 2.5));
  ctx.closePath();
  ctx.fill();
}

// Fog of war: translucent dark sheet everywhere except the visibility
// circle, drawn as one even-odd path so no clipping state is needed.
export function drawFog(ctx: Ctx2D, vp: Viewport, center: Point,
                        visibilityM: number): void {
  const [cx, cy] = worldToScreen(vp, center[0], center[1]);
  ctx.fillStyle = "rgba(6, 8, 12, 0.78)";
  ctx.beginPath();
  ctx.rect(0, 0, vp.width, vp.height);
  ctx.arc(cx, cy, visibilityM * viewScale(vp), 0, Math.PI * 2);
  ctx.fill("evenodd");
}

export function render(ctx: Ctx2D, vp: Viewport, scene: SceneDict,
                       obs: ObservationFrame, trail: readonly Point[]): void {
  drawScene(ctx, vp, scene);
  drawTrail(ctx, vp, trail);
  drawObservation(ctx, vp, obs);
  drawFog(ctx, vp, obs.position, scene.condition.visibility_m);
}
