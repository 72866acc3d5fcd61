// HUD text beside the canvas: everything a teleoperator needs at a glance.

import { EpisodeEndFrame, HelloFrame, ObservationFrame } from "./protocol.js";
import { formatMetrics } from "./replay.js";

export function hudLines(hello: HelloFrame | null, obs: ObservationFrame | null,
                         end: EpisodeEndFrame | null): string[] {
  const lines: string[] = [];
  if (hello !== null) {
    lines.push(`scene ${hello.scene.id}  seed ${hello.episode.seed}`);
    lines.push(`goal: ${hello.episode.goal_name} (within ${hello.episode.delta} m)`);
  }
  if (obs !== null) {
    lines.push(`tick ${obs.tick}  t=${obs.sim_time.toFixed(0)}s  ` +
               `speed ${obs.speed.toFixed(2)} m/s`);
    lines.push(`position (${obs.position[0].toFixed(1)}, ${obs.position[1].toFixed(1)})`);
    lines.push(`inquiries answered: ${obs.ndi}`);
    if (obs.instruction) {
      lines.push(`"${obs.instruction}"`);
    }
  }
  if (end !== null) {
    lines.push(`episode over: ${end.record.termination} after ${end.record.steps} steps`);
    lines.push(formatMetrics(end.metrics).join("  "));
  }
  if (lines.length === 0) {
    lines.push("connecting...");
  }
  return lines;
}
