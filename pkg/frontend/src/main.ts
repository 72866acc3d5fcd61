// Browser entry point: wires the teleop session, canvas, keyboard, and the
// replay file loader together. Everything testable lives in the other
// modules; this file is DOM glue.

import { TeleopSession, TeleopSocket } from "./client.js";
import { hudLines } from "./hud.js";
import { actionForKey } from "./keys.js";
import { EpisodeEndFrame, HelloFrame, ObservationFrame } from "./protocol.js";
import { summarizeRecord } from "./replay.js";
import { Ctx2D, Viewport, drawScene, drawTrail, render, viewportFor, worldToScreen } from "./view.js";

function browserSocket(url: string): TeleopSocket {
  const ws = new WebSocket(url);
  return {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    onMessage: (handler) => {
      ws.onmessage = (ev) => handler(String(ev.data));
    },
    onClose: (handler) => {
      ws.onclose = () => handler();
    },
  };
}

function element<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) {
    throw new Error(`missing #${id}`);
  }
  return el as T;
}

const canvas = element<HTMLCanvasElement>("view");
const hud = element<HTMLDivElement>("hud");
const urlInput = element<HTMLInputElement>("server-url");
const connectButton = element<HTMLButtonElement>("connect");
const replayInput = element<HTMLInputElement>("replay-file");

const ctx = canvas.getContext("2d") as unknown as Ctx2D;

let session: TeleopSession | null = null;
let hello: HelloFrame | null = null;
let lastObs: ObservationFrame | null = null;
let lastEnd: EpisodeEndFrame | null = null;
let viewport: Viewport | null = null;

function refresh(): void {
  hud.textContent = hudLines(hello, lastObs, lastEnd).join("\n");
  if (viewport !== null && hello !== null && lastObs !== null && session !== null) {
    render(ctx, viewport, hello.scene, lastObs, session.trajectory);
  }
}

connectButton.addEventListener("click", () => {
  hello = null;
  lastObs = null;
  lastEnd = null;
  session = new TeleopSession(browserSocket(urlInput.value), {
    onHello: (frame) => {
      hello = frame;
      viewport = viewportFor(frame.scene, canvas.width, canvas.height);
      refresh();
    },
    onObservation: (obs) => {
      lastObs = obs;
      refresh();
    },
    onEnd: (end) => {
      lastEnd = end;
      refresh();
    },
    onError: (err) => {
      hud.textContent = `error: ${err.message}`;
    },
  });
});

document.addEventListener("keydown", (ev) => {
  if (session === null || ev.repeat) {
    return;
  }
  const action = actionForKey(ev.key);
  if (action !== null && session.submit(action)) {
    ev.preventDefault();
  }
});

// Replay: load an archived episode.json and draw its full path over the
// scene from the most recent hello (same scene id expected but not enforced;
// the polyline alone is still meaningful).
replayInput.addEventListener("change", async () => {
  const file = replayInput.files?.[0];
  if (file === undefined) {
    return;
  }
  const parsed = JSON.parse(await file.text());
  const summary = summarizeRecord(parsed.record ?? parsed, 0.05);
  if (viewport !== null && hello !== null) {
    drawScene(ctx, viewport, hello.scene);
    drawTrail(ctx, viewport, summary.points);
    const [gx, gy] = (parsed.record ?? parsed).goal;
    const [sx, sy] = worldToScreen(viewport, gx, gy);
    ctx.strokeStyle = "#62d98b";
    ctx.beginPath();
    ctx.arc(sx, sy, 6, 0, Math.PI * 2);
    ctx.stroke();
  }
  hud.textContent = [
    `replay ${summary.episodeId} (${summary.sceneId}, seed ${summary.seed})`,
    `${summary.steps} steps, ${summary.travelled.toFixed(1)} m, ` +
    `ended: ${summary.termination}, inquiries: ${summary.ndi}`,
  ].join("\n");
});
