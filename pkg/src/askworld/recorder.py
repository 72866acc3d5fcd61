"""Run archives: a directory tree of episode records that rebuilds bit-equal.

Layout under <root>/<run_id>/:
    manifest.json                 run config, per-episode metrics, aggregates
    scene.json                    the scene exactly as simulated
    occupancy.pgm / .json         soft occupancy heatmap plus its sidecar
    episodes/<episode_id>/episode.json

Nothing in an archive depends on wall-clock time, filesystem order, or the
transport that produced the records, so re-running the same configuration
yields byte-identical trees. If the run directory already exists, a numeric
suffix is appended to the directory name only; the manifest keeps the
requested run id.
"""

from __future__ import annotations

import json
from pathlib import Path

from .metrics import EpisodeRecord, aggregate, compute_metrics
from .scene import OccupancyGrid, Scene, export_heatmap

MANIFEST_FORMAT = 1


def _dump(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


class RunRecorder:
    """Collects episode records and writes one archive directory."""

    def __init__(self, root: str | Path, run_id: str, scene: Scene,
                 config: dict | None = None):
        self.run_id = run_id
        self.scene = scene
        self.config = dict(config or {})
        self.records: list[EpisodeRecord] = []
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        path = root / run_id
        suffix = 0
        while path.exists():
            suffix += 1
            path = root / f"{run_id}-{suffix}"
        path.mkdir()
        self.path = path

    def add_episode(self, record: EpisodeRecord) -> Path:
        self.records.append(record)
        episode_dir = self.path / "episodes" / record.episode_id
        episode_dir.mkdir(parents=True, exist_ok=True)
        out = episode_dir / "episode.json"
        out.write_text(_dump(record.to_dict()), encoding="utf-8")
        return out

    def write_occupancy(self, grid: OccupancyGrid) -> None:
        export_heatmap(grid, self.path / "occupancy.pgm", mode="heatmap")

    def finalize(self) -> Path:
        """Write scene.json and manifest.json; returns the manifest path."""
        (self.path / "scene.json").write_text(_dump(self.scene.to_dict()), encoding="utf-8")
        episodes = sorted(self.records, key=lambda r: (r.seed, r.episode_id))
        manifest = {
            "format": MANIFEST_FORMAT,
            "run_id": self.run_id,
            "scene_id": self.scene.id,
            "config": self.config,
            "episodes": [
                {"episode_id": r.episode_id, "seed": r.seed,
                 "metrics": compute_metrics(r).to_dict()}
                for r in episodes
            ],
        }
        if episodes:
            manifest["aggregate"] = aggregate([compute_metrics(r) for r in episodes])
        out = self.path / "manifest.json"
        out.write_text(_dump(manifest), encoding="utf-8")
        return out


def load_manifest(run_path: str | Path) -> dict:
    return json.loads((Path(run_path) / "manifest.json").read_text(encoding="utf-8"))


def load_records(run_path: str | Path) -> list[EpisodeRecord]:
    """All episode records of a run, ordered as the manifest lists them."""
    manifest = load_manifest(run_path)
    records = []
    for entry in manifest["episodes"]:
        data = json.loads(
            (Path(run_path) / "episodes" / entry["episode_id"] / "episode.json")
            .read_text(encoding="utf-8"))
        records.append(EpisodeRecord.from_dict(data))
    return records


def tree_digest(run_path: str | Path) -> dict[str, str]:
    """Relative path -> sha256 for every file; equality means equal archives."""
    import hashlib

    run_path = Path(run_path)
    digest = {}
    for path in sorted(run_path.rglob("*")):
        if path.is_file():
            digest[str(path.relative_to(run_path))] = hashlib.sha256(path.read_bytes()).hexdigest()
    return digest
