from __future__ import annotations

import asyncio
import json
import re
import subprocess
import sys

import pytest

from askworld.cli import main, parse_seeds
from askworld.protocol import run_remote_episode
from askworld.recorder import RunRecorder, load_manifest

from conftest import make_scene


def test_parse_seeds():
    assert parse_seeds("0:5") == [0, 1, 2, 3, 4]
    assert parse_seeds("3,5,9") == [3, 5, 9]
    assert parse_seeds("7") == [7]
    assert parse_seeds("1, 2,") == [1, 2]


def test_scenes_lists_builtins(capsys):
    assert main(["scenes"]) == 0
    out = capsys.readouterr().out.split()
    assert out == ["duplicate-stores", "three-buildings", "vehicle-loop"]


def test_heatmap_writes_pgm(tmp_path, capsys):
    out = tmp_path / "occ.pgm"
    code = main(["heatmap", "--scene", "three-buildings", "--out", str(out),
                 "--resolution", "0.5", "--samples", "16", "--rounds", "2"])
    assert code == 0
    assert out.is_file()
    assert out.with_suffix(".json").is_file()
    assert "occupied cells" in capsys.readouterr().out


def test_run_then_score_round_trip(tmp_path, capsys):
    code = main(["run", "--scene", "duplicate-stores", "--seeds", "0:2",
                 "--policy", "oracle_no_ask", "--out", str(tmp_path),
                 "--run-id", "mini", "--verbose"])
    assert code == 0
    out_lines = capsys.readouterr().out.strip().splitlines()
    agg_line = next(line for line in out_lines if line.startswith("{"))
    run_aggregate = json.loads(agg_line)
    assert run_aggregate["count"] == 2
    assert any("sr=" in line for line in out_lines)  # per-episode verbose rows

    run_dir = tmp_path / "mini"
    manifest = load_manifest(run_dir)
    assert manifest["config"]["policy"] == "oracle_no_ask"
    assert len(manifest["episodes"]) == 2

    assert main(["score", str(run_dir)]) == 0
    score_aggregate = json.loads(capsys.readouterr().out.strip())
    assert score_aggregate == run_aggregate


def test_run_benchmark_needs_the_fixed_goal(tmp_path):
    with pytest.raises(SystemExit, match="benchmark goal"):
        main(["run", "--scene", "three-buildings", "--seeds", "0:1",
              "--out", str(tmp_path)])


def test_run_sampled_episode_works_anywhere(tmp_path, capsys):
    code = main(["run", "--scene", "three-buildings", "--seeds", "5:6",
                 "--episode", "sampled", "--policy", "oracle_no_ask",
                 "--pedestrians", "4", "--out", str(tmp_path), "--run-id", "sampled"])
    assert code == 0
    aggregate_line = capsys.readouterr().out.strip().splitlines()[0]
    assert json.loads(aggregate_line)["count"] == 1


def test_score_empty_archive_fails(tmp_path, capsys):
    recorder = RunRecorder(tmp_path, "void", make_scene())
    recorder.finalize()
    assert main(["score", str(recorder.path)]) == 1
    assert "no episodes" in capsys.readouterr().err


def test_serve_subprocess_plays_a_full_episode():
    process = subprocess.Popen(
        [sys.executable, "-u", "-m", "askworld.cli", "serve",
         "--scene", "duplicate-stores", "--port", "0", "--episode", "benchmark",
         "--seed", "3", "--pedestrians", "6"],
        stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True)
    try:
        banner = process.stdout.readline()
        match = re.search(r"ws://([\d.]+):(\d+)", banner)
        assert match, f"no endpoint in banner: {banner!r}"
        uri = match.group(0)

        def policy(obs):
            return "Forward" if obs.tick < 3 else "Stop"

        record, hello = asyncio.run(run_remote_episode(uri, lambda h: policy))
        assert hello["episode"]["seed"] == 3
        assert "goal_poi_id" not in hello["episode"]
        assert record.scene_id == "duplicate-stores"
        assert record.steps == 3
        assert record.termination == "stop"
        assert len(record.trajectory) == 4
    finally:
        process.terminate()
        process.wait(timeout=10)
