"""Lockstep WebSocket protocol: one observation, one action, one tick.

Frames are JSON text. The server opens with hello (protocol version, full
scene, public episode parameters), then alternates observation and action
frames. Invalid input never kills the session: a malformed frame, an unknown
action, or a stale tick gets an ack_error and the server keeps waiting for a
valid action for the same tick. Silence beyond the timeout aborts the
episode. After the final observation the server sends episode_end with the
record and its metrics, then closes.

The hello intentionally omits the goal: the only way to learn where to go,
on the wire or in process, is to read the instruction text.
"""

from __future__ import annotations

import asyncio
import json

import websockets

from .metrics import compute_metrics, EpisodeRecord
from .scene import Scene, scene_from_dict
from .task import (
    ACTIONS, EpisodeSpec, Observation, build_observation, finish_record,
    make_world, step_world,
)

PROTOCOL_VERSION = 1
DEFAULT_ACTION_TIMEOUT_S = 60.0

ERR_MALFORMED = "malformed"
ERR_TICK_MISMATCH = "tick_mismatch"
ERR_TIMEOUT = "timeout"


class ProtocolError(Exception):
    """Raised by the client when the server breaks the frame contract."""


def dumps(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def episode_public_dict(spec: EpisodeSpec) -> dict:
    """Episode parameters a client may see; the goal POI stays hidden."""
    out = spec.to_dict()
    del out["goal_poi_id"]
    out["episode_id"] = spec.episode_id
    return out


def hello_message(spec: EpisodeSpec, scene: Scene) -> str:
    return dumps({
        "type": "hello",
        "protocol": PROTOCOL_VERSION,
        "scene": scene.to_dict(),
        "episode": episode_public_dict(spec),
        "actions": list(ACTIONS),
    })


def observation_message(obs: Observation) -> str:
    payload = obs.to_dict()
    payload["type"] = "observation"
    return dumps(payload)


def ack_error_message(code: str, message: str, expected_tick: int | None = None) -> str:
    payload = {"type": "ack_error", "code": code, "message": message}
    if expected_tick is not None:
        payload["expected_tick"] = expected_tick
    return dumps(payload)


def episode_end_message(record: EpisodeRecord) -> str:
    return dumps({
        "type": "episode_end",
        "record": record.to_dict(),
        "metrics": compute_metrics(record).to_dict(),
    })


def action_message(tick: int, name: str) -> str:
    return dumps({"type": "action", "tick": tick, "name": name})


def parse_action(raw, expected_tick: int) -> tuple[str | None, str | None, str]:
    """Validate one incoming frame.

    Returns (action_name, error_code, error_message); exactly one of
    action_name and error_code is set.
    """
    if isinstance(raw, bytes):
        return None, ERR_MALFORMED, "expected a text frame"
    try:
        msg = json.loads(raw)
    except json.JSONDecodeError as exc:
        return None, ERR_MALFORMED, f"invalid JSON: {exc.msg}"
    if not isinstance(msg, dict) or msg.get("type") != "action":
        return None, ERR_MALFORMED, "expected an action frame"
    name = msg.get("name")
    if name not in ACTIONS:
        return None, ERR_MALFORMED, f"unknown action {name!r}"
    tick = msg.get("tick")
    if not isinstance(tick, int) or isinstance(tick, bool):
        return None, ERR_MALFORMED, "action tick must be an integer"
    if tick != expected_tick:
        return None, ERR_TICK_MISMATCH, f"action for tick {tick}, expected {expected_tick}"
    return name, None, ""


async def serve_episode(ws, spec: EpisodeSpec, scene: Scene, provider=None,
                        action_timeout_s: float = DEFAULT_ACTION_TIMEOUT_S) -> EpisodeRecord:
    """Run one full lockstep episode over an open socket; returns the record."""
    world = make_world(spec, scene, provider)
    await ws.send(hello_message(spec, scene))
    while True:
        obs = build_observation(world)
        await ws.send(observation_message(obs))
        if world.terminated:
            break
        action = None
        while action is None:
            try:
                raw = await asyncio.wait_for(ws.recv(), timeout=action_timeout_s)
            except asyncio.TimeoutError:
                await ws.send(ack_error_message(ERR_TIMEOUT,
                                                f"no action within {action_timeout_s}s"))
                world.terminated = True
                world.termination = "timeout"
                break
            action, code, message = parse_action(raw, world.tick)
            if code is not None:
                await ws.send(ack_error_message(code, message, expected_tick=world.tick))
        if world.terminated and action is None:
            break  # timed out
        step_world(world, action)
        if world.termination == "stop":
            break  # Stop advances nothing; no further observation exists
    record = finish_record(world)
    await ws.send(episode_end_message(record))
    return record


class EpisodeServer:
    """Serves one episode per connection on a local port.

    spec_factory is called with the connection index (0, 1, ...) and returns
    the EpisodeSpec to play. Finished records are collected in .records.
    """

    def __init__(self, scene: Scene, spec_factory, provider=None,
                 action_timeout_s: float = DEFAULT_ACTION_TIMEOUT_S):
        self.scene = scene
        self.spec_factory = spec_factory
        self.provider = provider
        self.action_timeout_s = action_timeout_s
        self.records: list[EpisodeRecord] = []
        self._count = 0
        self._server = None

    async def _handle(self, ws) -> None:
        index = self._count
        self._count += 1
        spec = self.spec_factory(index)
        try:
            record = await serve_episode(ws, spec, self.scene, self.provider,
                                         self.action_timeout_s)
        except websockets.ConnectionClosed:
            return
        self.records.append(record)

    async def start(self, host: str = "127.0.0.1", port: int = 0) -> tuple[str, int]:
        self._server = await websockets.serve(self._handle, host, port)
        sock = next(iter(self._server.sockets))
        bound = sock.getsockname()
        return bound[0], bound[1]

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None


async def run_remote_episode(uri: str, policy_factory) -> tuple[EpisodeRecord, dict]:
    """Play one episode as a client.

    policy_factory(hello_dict) builds the policy after the scene is known;
    the policy itself maps Observation to an action name. Returns the
    server's record (parsed from episode_end) plus the hello frame.
    """
    async with websockets.connect(uri) as ws:
        hello = json.loads(await ws.recv())
        if hello.get("type") != "hello":
            raise ProtocolError(f"expected hello, got {hello.get('type')!r}")
        if hello.get("protocol") != PROTOCOL_VERSION:
            raise ProtocolError(f"protocol version {hello.get('protocol')!r} unsupported")
        policy = policy_factory(hello)
        last_tick = -1
        while True:
            msg = json.loads(await ws.recv())
            kind = msg.get("type")
            if kind == "observation":
                obs = Observation.from_dict(msg)
                if obs.tick <= last_tick:
                    raise ProtocolError(f"ticks must increase: {last_tick} then {obs.tick}")
                last_tick = obs.tick
                if obs.terminal:
                    continue  # final frame; episode_end follows
                await ws.send(action_message(obs.tick, policy(obs)))
            elif kind == "ack_error":
                raise ProtocolError(f"server rejected a frame: {msg.get('code')}: {msg.get('message')}")
            elif kind == "episode_end":
                return EpisodeRecord.from_dict(msg["record"]), hello
            else:
                raise ProtocolError(f"unexpected frame type {kind!r}")


def client_scene(hello: dict) -> Scene:
    """Rebuild the Scene a hello frame describes (validated like a file)."""
    return scene_from_dict(hello["scene"])


def play_networked_episode(spec: EpisodeSpec, scene: Scene, policy_factory,
                           provider=None,
                           action_timeout_s: float = DEFAULT_ACTION_TIMEOUT_S,
                           ) -> tuple[EpisodeRecord, EpisodeRecord]:
    """Spin up a loopback server, play one episode, tear down.

    Returns (server_record, client_record); the two must agree if the
    transport is faithful. policy_factory takes the hello dict.
    """

    async def _run() -> tuple[EpisodeRecord, EpisodeRecord]:
        server = EpisodeServer(scene, lambda index: spec, provider, action_timeout_s)
        host, port = await server.start()
        try:
            client_record, _ = await run_remote_episode(f"ws://{host}:{port}", policy_factory)
        finally:
            await server.stop()
        return server.records[0], client_record

    return asyncio.run(_run())
