from __future__ import annotations

import asyncio
import json

import pytest
import websockets

from askworld.metrics import EpisodeRecord, compute_metrics
from askworld.protocol import (
    ERR_MALFORMED, ERR_TICK_MISMATCH, ERR_TIMEOUT, EpisodeServer,
    PROTOCOL_VERSION, ProtocolError, action_message, client_scene, dumps,
    episode_end_message, episode_public_dict, hello_message,
    observation_message, parse_action, play_networked_episode,
    run_remote_episode,
)
from askworld.task import EpisodeSpec, build_observation, make_world, run_episode

from conftest import make_scene


def court_spec(**kw) -> EpisodeSpec:
    base = dict(scene_id="test-court", seed=1, start=(5.0, 10.0),
                start_heading=0.0, goal_poi_id="cafe-1", pedestrian_count=2)
    base.update(kw)
    return EpisodeSpec(**base)


def scripted_policy(obs):
    plan = ("Forward", "Forward", "Forward", "TurnLeft", "Forward", "Forward")
    return plan[obs.tick] if obs.tick < len(plan) else "Stop"


@pytest.mark.parametrize("raw, code", [
    (b"\x00\x01", ERR_MALFORMED),
    ("not json", ERR_MALFORMED),
    ('["a", "list"]', ERR_MALFORMED),
    ('{"type": "observation", "tick": 0, "name": "Forward"}', ERR_MALFORMED),
    ('{"type": "action", "tick": 0, "name": "Jump"}', ERR_MALFORMED),
    ('{"type": "action", "tick": "0", "name": "Forward"}', ERR_MALFORMED),
    ('{"type": "action", "tick": true, "name": "Forward"}', ERR_MALFORMED),
    ('{"type": "action", "tick": 3, "name": "Forward"}', ERR_TICK_MISMATCH),
])
def test_parse_action_rejections(raw, code):
    name, err, message = parse_action(raw, expected_tick=0)
    assert name is None
    assert err == code
    assert message


def test_parse_action_accepts_matching_tick():
    name, err, _ = parse_action('{"type": "action", "tick": 4, "name": "Ask"}', 4)
    assert name == "Ask" and err is None


def test_hello_reveals_scene_but_never_the_goal():
    scene = make_scene()
    hello = json.loads(hello_message(court_spec(), scene))
    assert hello["type"] == "hello"
    assert hello["protocol"] == PROTOCOL_VERSION
    assert hello["actions"] == ["Forward", "TurnLeft", "TurnRight", "Stop", "Ask"]
    assert "goal_poi_id" not in hello["episode"]
    assert "goal" not in hello["episode"]
    assert hello["episode"]["episode_id"] == "test-court-s1"
    rebuilt = client_scene(hello)
    assert rebuilt.to_dict() == scene.to_dict()


def test_episode_public_dict_keeps_the_rest():
    public = episode_public_dict(court_spec())
    assert public["seed"] == 1
    assert public["max_steps"] == 100
    assert "goal_poi_id" not in public


def test_episode_end_message_carries_metrics():
    record = EpisodeRecord(episode_id="e", scene_id="s", seed=0, goal=(1.0, 0.0),
                           delta=3.0, trajectory=((0.0, 0.0), (1.0, 0.0)),
                           optimal_path_length=1.0)
    end = json.loads(episode_end_message(record))
    assert end["type"] == "episode_end"
    assert EpisodeRecord.from_dict(end["record"]) == record
    assert end["metrics"] == compute_metrics(record).to_dict()


def test_loopback_record_matches_in_process_run():
    scene = make_scene()
    spec = court_spec()
    server_rec, client_rec = play_networked_episode(
        spec, scene, policy_factory=lambda hello: scripted_policy)
    local_rec = run_episode(spec, scene, scripted_policy)
    assert server_rec == client_rec == local_rec
    assert dumps(server_rec.to_dict()) == dumps(local_rec.to_dict())


def test_server_survives_garbage_and_stale_ticks():
    scene = make_scene()
    spec = court_spec()

    async def scenario():
        server = EpisodeServer(scene, lambda index: spec, action_timeout_s=10.0)
        host, port = await server.start()
        try:
            async with websockets.connect(f"ws://{host}:{port}") as ws:
                hello = json.loads(await ws.recv())
                assert hello["type"] == "hello"
                obs0 = json.loads(await ws.recv())
                assert obs0["type"] == "observation" and obs0["tick"] == 0

                await ws.send(b"\x00binary")
                err = json.loads(await ws.recv())
                assert (err["type"], err["code"]) == ("ack_error", ERR_MALFORMED)

                await ws.send("{broken json")
                err = json.loads(await ws.recv())
                assert err["code"] == ERR_MALFORMED

                await ws.send(dumps({"type": "action", "tick": 7, "name": "Forward"}))
                err = json.loads(await ws.recv())
                assert err["code"] == ERR_TICK_MISMATCH
                assert err["expected_tick"] == 0

                await ws.send(dumps({"type": "action", "tick": 0, "name": "Levitate"}))
                err = json.loads(await ws.recv())
                assert err["code"] == ERR_MALFORMED

                await ws.send(action_message(0, "Forward"))
                obs1 = json.loads(await ws.recv())
                assert obs1["type"] == "observation" and obs1["tick"] == 1
                assert obs1["position"][0] > obs0["position"][0]

                await ws.send(action_message(1, "Stop"))
                end = json.loads(await ws.recv())
                assert end["type"] == "episode_end"
                record = EpisodeRecord.from_dict(end["record"])
                assert record.steps == 1 and record.termination == "stop"
        finally:
            await server.stop()
        assert len(server.records) == 1
        return server.records[0]

    record = asyncio.run(scenario())
    assert record.termination == "stop"


def test_silence_times_out_the_episode():
    scene = make_scene()

    async def scenario():
        server = EpisodeServer(scene, lambda index: court_spec(),
                               action_timeout_s=0.3)
        host, port = await server.start()
        try:
            async with websockets.connect(f"ws://{host}:{port}") as ws:
                json.loads(await ws.recv())   # hello
                json.loads(await ws.recv())   # observation 0
                err = json.loads(await ws.recv())  # no action sent
                assert (err["type"], err["code"]) == ("ack_error", ERR_TIMEOUT)
                end = json.loads(await ws.recv())
                assert end["type"] == "episode_end"
                return EpisodeRecord.from_dict(end["record"])
        finally:
            await server.stop()

    record = asyncio.run(scenario())
    assert record.termination == "timeout"
    assert record.steps == 0


def test_client_rejects_non_increasing_ticks():
    scene = make_scene()
    spec = court_spec()

    async def scenario():
        world = make_world(spec, scene)
        frame = observation_message(build_observation(world))

        async def handler(ws):
            await ws.send(hello_message(spec, scene))
            await ws.send(frame)
            await ws.recv()
            await ws.send(frame)  # same tick again
            await ws.recv()

        server = await websockets.serve(handler, "127.0.0.1", 0)
        port = next(iter(server.sockets)).getsockname()[1]
        try:
            with pytest.raises(ProtocolError, match="ticks must increase"):
                await run_remote_episode(f"ws://127.0.0.1:{port}",
                                         lambda hello: scripted_policy)
        finally:
            server.close()
            await server.wait_closed()

    asyncio.run(scenario())


def test_client_rejects_unknown_protocol_version():
    scene = make_scene()

    async def scenario():
        async def handler(ws):
            bad = json.loads(hello_message(court_spec(), scene))
            bad["protocol"] = 99
            await ws.send(dumps(bad))
            await ws.recv()

        server = await websockets.serve(handler, "127.0.0.1", 0)
        port = next(iter(server.sockets)).getsockname()[1]
        try:
            with pytest.raises(ProtocolError, match="version"):
                await run_remote_episode(f"ws://127.0.0.1:{port}",
                                         lambda hello: scripted_policy)
        finally:
            server.close()
            await server.wait_closed()

    asyncio.run(scenario())


def test_networked_ndi_accounting_matches_record():
    # a policy that asks once at tick 0 (a pedestrian may or may not be in
    # earshot; either way the record and the wire agree on the count)
    scene = make_scene()
    spec = court_spec(pedestrian_count=6, seed=5)

    def policy(obs):
        if obs.tick == 0:
            return "Ask"
        return scripted_policy(obs)

    server_rec, client_rec = play_networked_episode(
        spec, scene, policy_factory=lambda hello: policy)
    assert server_rec.ndi_events == client_rec.ndi_events
    assert len(client_rec.instructions) == len(client_rec.ndi_events) + 1
