"""Headless town-navigation benchmark with direction inquiries.

Simulates an agent walking dynamic pedestrian scenes at 1 Hz, optionally
asking simulated locals for directions, and scores finished episodes with
standard navigation metrics. Includes a lockstep WebSocket server, an archive
recorder, and scripted reference policies.
"""

from .metrics import EpisodeRecord, MetricSet, aggregate, compute_metrics
from .scene import (
    ConditionTags, OccupancyConfig, OccupancyGrid, Poi, Prism, Scene,
    builtin_scene, builtin_scene_names, generate_occupancy, load_scene,
    load_scene_or_builtin,
)
from .task import (
    ACTIONS, EpisodeSpec, Observation, World, benchmark_spec, build_observation,
    make_world, oracle_ask_policy, oracle_no_ask_policy, run_episode,
    sample_episode, step_world,
)

__version__ = "0.1.0"

__all__ = [
    "ACTIONS", "ConditionTags", "EpisodeRecord", "EpisodeSpec", "MetricSet",
    "Observation", "OccupancyConfig", "OccupancyGrid", "Poi", "Prism", "Scene",
    "World", "aggregate", "benchmark_spec", "build_observation", "builtin_scene",
    "builtin_scene_names", "compute_metrics", "generate_occupancy", "load_scene",
    "load_scene_or_builtin", "make_world", "oracle_ask_policy",
    "oracle_no_ask_policy", "run_episode", "sample_episode", "step_world",
    "__version__",
]
