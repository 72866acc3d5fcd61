"""Episode records and the seven evaluation metrics.

Metrics are computed purely from a finished record: the 2D trajectory, the
goal, the success radius delta, the optimal path length, and the inquiry
events. Nothing here touches simulation state, so records can be re-scored
offline from archives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EpisodeRecord:
    """Everything needed to score one episode after the fact."""

    episode_id: str
    scene_id: str
    seed: int
    goal: tuple[float, float]
    delta: float                                  # success radius, m
    trajectory: tuple[tuple[float, float], ...]   # agent position per tick, tick 0 first
    optimal_path_length: float                    # planner shortest path start -> goal, m
    ndi_events: tuple[dict, ...] = ()             # one entry per answered inquiry
    instructions: tuple[str, ...] = ()            # initial instruction + answers, in order
    termination: str = "stop"                     # stop | collision | step_limit
    steps: int = 0

    def to_dict(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "scene_id": self.scene_id,
            "seed": self.seed,
            "goal": [self.goal[0], self.goal[1]],
            "delta": self.delta,
            "trajectory": [[p[0], p[1]] for p in self.trajectory],
            "optimal_path_length": self.optimal_path_length,
            "ndi_events": list(self.ndi_events),
            "instructions": list(self.instructions),
            "termination": self.termination,
            "steps": self.steps,
        }

    @classmethod
    def from_dict(cls, data: dict) -> EpisodeRecord:
        return cls(
            episode_id=data["episode_id"],
            scene_id=data["scene_id"],
            seed=int(data["seed"]),
            goal=(float(data["goal"][0]), float(data["goal"][1])),
            delta=float(data["delta"]),
            trajectory=tuple((float(p[0]), float(p[1])) for p in data["trajectory"]),
            optimal_path_length=float(data["optimal_path_length"]),
            ndi_events=tuple(data.get("ndi_events", [])),
            instructions=tuple(data.get("instructions", [])),
            termination=data.get("termination", "stop"),
            steps=int(data.get("steps", 0)),
        )


@dataclass(frozen=True)
class MetricSet:
    tl: float    # trajectory length, m
    sr: float    # success, 0 or 1 per episode; rate when aggregated
    spl: float   # success weighted by path length
    ne: float    # navigation error: final distance to goal, m
    one: float   # oracle navigation error: closest distance ever, m
    osr: float   # oracle success, 0 or 1; rate when aggregated
    ndi: float   # number of direction inquiries

    def to_dict(self) -> dict:
        return {"tl": self.tl, "sr": self.sr, "spl": self.spl, "ne": self.ne,
                "one": self.one, "osr": self.osr, "ndi": self.ndi}


def trajectory_length(trajectory) -> float:
    pts = np.asarray(trajectory, dtype=float)
    if len(pts) < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


def compute_metrics(record: EpisodeRecord) -> MetricSet:
    """Score one episode. The trajectory must hold at least the start point."""
    if not record.trajectory:
        raise ValueError(f"episode {record.episode_id}: empty trajectory")
    pts = np.asarray(record.trajectory, dtype=float)
    goal = np.asarray(record.goal, dtype=float)
    dists = np.linalg.norm(pts - goal[None, :], axis=1)
    tl = trajectory_length(pts)
    ne = float(dists[-1])
    one = float(dists.min())
    sr = 1.0 if ne <= record.delta else 0.0
    osr = 1.0 if one <= record.delta else 0.0
    l_star = record.optimal_path_length
    denom = max(tl, l_star)
    spl = sr if denom <= 0.0 else sr * l_star / denom
    return MetricSet(tl=tl, sr=sr, spl=spl, ne=ne, one=one, osr=osr,
                     ndi=float(len(record.ndi_events)))


def aggregate(metric_sets: list[MetricSet]) -> dict:
    """Arithmetic means over episodes, plus the episode count."""
    if not metric_sets:
        raise ValueError("cannot aggregate zero episodes")
    n = len(metric_sets)
    out = {"count": n}
    for key in ("tl", "sr", "spl", "ne", "one", "osr", "ndi"):
        out[key] = float(math.fsum(getattr(m, key) for m in metric_sets) / n)
    return out
