"""Command line entry points.

    askworld scenes                     list built-in scenes
    askworld run --scene NAME ...      play episodes in process, archive them
    askworld serve --scene NAME ...    lockstep WebSocket server
    askworld heatmap --scene NAME ...  export the occupancy map as PGM
    askworld score RUN_DIR             re-score an archive from its records
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

from . import protocol, recorder
from .metrics import aggregate, compute_metrics
from .scene import (
    OccupancyConfig, builtin_scene_names, export_heatmap, generate_occupancy,
    load_scene_or_builtin,
)
from .task import (
    EpisodeSpec, benchmark_spec, oracle_ask_policy, oracle_no_ask_policy,
    run_episode, sample_episode, world_grids,
)

POLICIES = {"oracle_ask": oracle_ask_policy, "oracle_no_ask": oracle_no_ask_policy}


def parse_seeds(text: str) -> list[int]:
    """Either START:END (half-open) or a comma list."""
    if ":" in text:
        start, end = text.split(":", 1)
        return list(range(int(start), int(end)))
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _episode_spec(scene, seed: int, kind: str, pedestrians: int, vehicles: int) -> EpisodeSpec:
    if kind == "benchmark":
        has_fixed_goal = any(p.id == "store-a-e" for p in scene.pois)
        if not has_fixed_goal:
            raise SystemExit(f"scene {scene.id!r} has no benchmark goal; use --episode sampled")
        return benchmark_spec(scene, seed)
    return sample_episode(scene, seed, pedestrian_count=pedestrians, vehicle_count=vehicles)


def cmd_scenes(args) -> int:
    for name in builtin_scene_names():
        print(name)
    return 0


def cmd_run(args) -> int:
    scene = load_scene_or_builtin(args.scene)
    _, nav_grid = world_grids(scene)
    seeds = parse_seeds(args.seeds)
    policy_factory = POLICIES[args.policy]
    run_id = args.run_id or f"{scene.id}-{args.policy}"
    rec = recorder.RunRecorder(args.out, run_id, scene, config={
        "policy": args.policy, "episode": args.episode, "seeds": seeds,
        "pedestrians": args.pedestrians, "vehicles": args.vehicles,
    })
    rec.write_occupancy(world_grids(scene)[0])
    metric_sets = []
    for seed in seeds:
        spec = _episode_spec(scene, seed, args.episode, args.pedestrians, args.vehicles)
        record = run_episode(spec, scene, policy_factory(scene, nav_grid, spec))
        rec.add_episode(record)
        metric_sets.append(compute_metrics(record))
        if args.verbose:
            m = metric_sets[-1]
            print(f"{record.episode_id}: sr={m.sr:.0f} spl={m.spl:.3f} ne={m.ne:.2f} "
                  f"ndi={m.ndi:.0f} steps={record.steps} ({record.termination})")
    manifest = rec.finalize()
    print(json.dumps(aggregate(metric_sets), sort_keys=True))
    print(f"archive: {manifest.parent}")
    return 0


def cmd_serve(args) -> int:
    scene = load_scene_or_builtin(args.scene)

    def spec_factory(index: int) -> EpisodeSpec:
        return _episode_spec(scene, args.seed + index, args.episode,
                             args.pedestrians, args.vehicles)

    async def _serve() -> None:
        server = protocol.EpisodeServer(scene, spec_factory,
                                        action_timeout_s=args.timeout)
        host, port = await server.start(args.host, args.port)
        print(f"serving ws://{host}:{port} scene={scene.id} "
              f"(one episode per connection, seeds from {args.seed})")
        try:
            await asyncio.Event().wait()
        finally:
            await server.stop()

    try:
        asyncio.run(_serve())
    except KeyboardInterrupt:
        print("stopped")
    return 0


def cmd_heatmap(args) -> int:
    scene = load_scene_or_builtin(args.scene)
    cfg = OccupancyConfig(resolution=args.resolution, samples_per_voxel=args.samples,
                          rounds=args.rounds, threshold=args.threshold, seed=args.seed)
    grid = generate_occupancy(scene, cfg)
    out = Path(args.out or f"{scene.id}-occupancy.pgm")
    sidecar = export_heatmap(grid, out, mode=args.mode)
    print(f"wrote {out} and {sidecar} ({grid.width}x{grid.height}, "
          f"{int(grid.binary.sum())} occupied cells)")
    return 0


def cmd_score(args) -> int:
    records = recorder.load_records(args.run)
    if not records:
        print("no episodes in archive", file=sys.stderr)
        return 1
    print(json.dumps(aggregate([compute_metrics(r) for r in records]), sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="askworld", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("scenes", help="list built-in scene names").set_defaults(fn=cmd_scenes)

    p = sub.add_parser("run", help="play episodes in process and archive them")
    p.add_argument("--scene", default="duplicate-stores", help="built-in name or JSON path")
    p.add_argument("--seeds", default="0:20", help="START:END half-open, or comma list")
    p.add_argument("--policy", choices=sorted(POLICIES), default="oracle_ask")
    p.add_argument("--episode", choices=["benchmark", "sampled"], default="benchmark")
    p.add_argument("--out", default="runs", help="archive root directory")
    p.add_argument("--run-id", default=None)
    p.add_argument("--pedestrians", type=int, default=12)
    p.add_argument("--vehicles", type=int, default=0)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("serve", help="serve episodes over WebSocket, one per connection")
    p.add_argument("--scene", default="duplicate-stores")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--seed", type=int, default=0, help="seed of the first connection")
    p.add_argument("--episode", choices=["benchmark", "sampled"], default="sampled")
    p.add_argument("--timeout", type=float, default=protocol.DEFAULT_ACTION_TIMEOUT_S,
                   help="seconds to wait for each action")
    p.add_argument("--pedestrians", type=int, default=12)
    p.add_argument("--vehicles", type=int, default=0)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("heatmap", help="export a scene occupancy map as PGM")
    p.add_argument("--scene", default="three-buildings")
    p.add_argument("--out", default=None)
    p.add_argument("--mode", choices=["heatmap", "binary"], default="heatmap")
    p.add_argument("--resolution", type=float, default=0.25)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--rounds", type=int, default=4)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_heatmap)

    p = sub.add_parser("score", help="recompute aggregate metrics from an archive")
    p.add_argument("run", help="path to a run directory")
    p.set_defaults(fn=cmd_score)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
