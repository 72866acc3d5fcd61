// Wire types for the lockstep episode protocol. Shapes mirror the server's
// JSON frames exactly; parseFrame narrows untrusted text into one of them.

export const PROTOCOL_VERSION = 1;

export const ACTIONS = ["Forward", "TurnLeft", "TurnRight", "Ask", "Stop"] as const;
export type ActionName = (typeof ACTIONS)[number];

export interface SceneCondition {
  time_of_day: number;
  weather: string;
  visibility_m: number;
}

export interface ScenePoi {
  id: string;
  name: string;
  position: [number, number];
  category: string;
}

export interface SceneObstacle {
  footprint: [number, number][];
  z: [number, number];
}

// Only the fields the client renders; the server sends more.
export interface SceneDict {
  id: string;
  bounds: { min: [number, number]; max: [number, number] };
  obstacles: SceneObstacle[];
  pois: ScenePoi[];
  condition: SceneCondition;
}

export interface EpisodeInfo {
  episode_id: string;
  scene_id: string;
  seed: number;
  goal_name: string;
  delta: number;
  step_limit: number;
}

export interface HelloFrame {
  type: "hello";
  protocol: number;
  scene: SceneDict;
  episode: EpisodeInfo;
  actions: string[];
}

export interface VisiblePedestrian {
  id: string;
  position: [number, number];
  speed: number;
  answering: boolean;
}

export interface VisibleVehicle {
  id: string;
  position: [number, number];
  heading: number;
  speed: number;
}

export interface ObservationFrame {
  type: "observation";
  tick: number;
  sim_time: number;
  position: [number, number];
  heading: number;
  speed: number;
  rays: number[];
  instruction: string;
  ndi: number;
  pedestrians: VisiblePedestrian[];
  vehicles: VisibleVehicle[];
  terminal: boolean;
  termination: string | null;
}

export interface AckErrorFrame {
  type: "ack_error";
  code: "malformed" | "tick_mismatch" | "timeout";
  message: string;
  expected_tick?: number;
}

export interface NdiEvent {
  tick: number;
  pedestrian_id: string;
  instruction_index: number;
}

export interface EpisodeRecordDict {
  episode_id: string;
  scene_id: string;
  seed: number;
  goal: [number, number];
  delta: number;
  trajectory: [number, number][];
  optimal_path_length: number;
  ndi_events: NdiEvent[];
  instructions: string[];
  termination: string;
  steps: number;
}

export interface MetricsDict {
  tl: number;
  sr: number;
  spl: number;
  ne: number;
  one: number;
  osr: number;
  ndi: number;
}

export interface EpisodeEndFrame {
  type: "episode_end";
  record: EpisodeRecordDict;
  metrics: MetricsDict;
}

export type ServerFrame = HelloFrame | ObservationFrame | AckErrorFrame | EpisodeEndFrame;

export class ProtocolError extends Error {}

function isPair(v: unknown): v is [number, number] {
  return Array.isArray(v) && v.length === 2 &&
    typeof v[0] === "number" && typeof v[1] === "number";
}

export function parseFrame(text: string): ServerFrame {
  let msg: unknown;
  try {
    msg = JSON.parse(text);
  } catch {
    throw new ProtocolError("server sent invalid JSON");
  }
  if (typeof msg !== "object" || msg === null || Array.isArray(msg)) {
    throw new ProtocolError("server frame is not an object");
  }
  const frame = msg as Record<string, unknown>;
  switch (frame.type) {
    case "hello": {
      if (typeof frame.protocol !== "number" || typeof frame.scene !== "object" ||
          frame.scene === null || typeof frame.episode !== "object") {
        throw new ProtocolError("malformed hello frame");
      }
      return frame as unknown as HelloFrame;
    }
    case "observation": {
      if (typeof frame.tick !== "number" || !isPair(frame.position) ||
          !Array.isArray(frame.rays) || typeof frame.heading !== "number" ||
          typeof frame.ndi !== "number" || typeof frame.terminal !== "boolean" ||
          !Array.isArray(frame.pedestrians)) {
        throw new ProtocolError("malformed observation frame");
      }
      return frame as unknown as ObservationFrame;
    }
    case "ack_error": {
      if (typeof frame.code !== "string" || typeof frame.message !== "string") {
        throw new ProtocolError("malformed ack_error frame");
      }
      return frame as unknown as AckErrorFrame;
    }
    case "episode_end": {
      const record = frame.record as Record<string, unknown> | undefined;
      if (record === undefined || !Array.isArray(record.trajectory) ||
          typeof frame.metrics !== "object") {
        throw new ProtocolError("malformed episode_end frame");
      }
      return frame as unknown as EpisodeEndFrame;
    }
    default:
      throw new ProtocolError(`unexpected frame type ${JSON.stringify(frame.type)}`);
  }
}

export function actionMessage(tick: number, name: ActionName): string {
  return JSON.stringify({ type: "action", tick, name });
}
