// Lockstep teleop session over any WebSocket-shaped transport.
//
// The client owns the protocol invariants the Python reference client also
// enforces: hello first, matching protocol version, strictly increasing
// ticks, and exactly one action per observation (extra key presses while
// the server is thinking are dropped, not queued).

import {
  ActionName, AckErrorFrame, EpisodeEndFrame, HelloFrame, ObservationFrame,
  PROTOCOL_VERSION, ProtocolError, actionMessage, parseFrame,
} from "./protocol.js";

// Minimal surface shared by the browser WebSocket and the ws package.
export interface TeleopSocket {
  send(data: string): void;
  close(): void;
  onMessage(handler: (data: string) => void): void;
  onClose(handler: () => void): void;
}

export type SessionState = "connecting" | "awaiting-input" | "waiting-server" | "ended";

export interface SessionHooks {
  onHello?(hello: HelloFrame): void;
  onObservation?(obs: ObservationFrame): void;
  onEnd?(end: EpisodeEndFrame): void;
  onError?(err: Error): void;
}

export class TeleopSession {
  state: SessionState = "connecting";
  hello: HelloFrame | null = null;
  observation: ObservationFrame | null = null;
  end: EpisodeEndFrame | null = null;
  // positions observed tick by tick; must match the server's record
  readonly trajectory: [number, number][] = [];
  readonly instructions: string[] = [];
  private lastTick = -1;
  private readonly socket: TeleopSocket;
  private readonly hooks: SessionHooks;

  constructor(socket: TeleopSocket, hooks: SessionHooks = {}) {
    this.socket = socket;
    this.hooks = hooks;
    socket.onMessage((data) => this.handleFrame(data));
    socket.onClose(() => {
      if (this.state !== "ended") {
        this.fail(new ProtocolError("connection closed mid-episode"));
      }
    });
  }

  // One action per observation: returns true if the action was sent, false
  // if the session is not waiting for input (the press is dropped).
  submit(action: ActionName): boolean {
    if (this.state !== "awaiting-input" || this.observation === null) {
      return false;
    }
    this.socket.send(actionMessage(this.observation.tick, action));
    this.state = "waiting-server";
    return true;
  }

  private handleFrame(data: string): void {
    let frame;
    try {
      frame = parseFrame(data);
    } catch (err) {
      this.fail(err as Error);
      return;
    }
    switch (frame.type) {
      case "hello":
        this.handleHello(frame);
        break;
      case "observation":
        this.handleObservation(frame);
        break;
      case "ack_error":
        this.handleAckError(frame);
        break;
      case "episode_end":
        this.handleEnd(frame);
        break;
    }
  }

  private handleHello(hello: HelloFrame): void {
    if (this.hello !== null) {
      this.fail(new ProtocolError("second hello frame"));
      return;
    }
    if (hello.protocol !== PROTOCOL_VERSION) {
      this.fail(new ProtocolError(`protocol version ${hello.protocol} unsupported`));
      return;
    }
    this.hello = hello;
    this.hooks.onHello?.(hello);
  }

  private handleObservation(obs: ObservationFrame): void {
    if (this.hello === null) {
      this.fail(new ProtocolError("observation before hello"));
      return;
    }
    if (obs.tick <= this.lastTick) {
      this.fail(new ProtocolError(`ticks must increase: ${this.lastTick} then ${obs.tick}`));
      return;
    }
    this.lastTick = obs.tick;
    this.observation = obs;
    this.trajectory.push([obs.position[0], obs.position[1]]);
    if (obs.instruction && obs.instruction !== this.instructions.at(-1)) {
      this.instructions.push(obs.instruction);
    }
    // terminal frame: episode_end follows, no action is owed
    this.state = obs.terminal ? "waiting-server" : "awaiting-input";
    this.hooks.onObservation?.(obs);
  }

  private handleAckError(err: AckErrorFrame): void {
    // this client never sends bad frames, so any ack_error is fatal
    this.fail(new ProtocolError(`server rejected a frame: ${err.code}: ${err.message}`));
  }

  private handleEnd(end: EpisodeEndFrame): void {
    this.end = end;
    this.state = "ended";
    this.hooks.onEnd?.(end);
    this.socket.close();
  }

  private fail(err: Error): void {
    this.state = "ended";
    this.hooks.onError?.(err);
    this.socket.close();
  }
}
