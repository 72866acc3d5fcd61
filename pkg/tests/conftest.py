from __future__ import annotations

import json

import pytest

from askworld.scene import Scene, builtin_scene, scene_from_dict
from askworld.task import world_grids


@pytest.fixture(scope="session")
def dup_scene() -> Scene:
    return builtin_scene("duplicate-stores")


@pytest.fixture(scope="session")
def dup_grids(dup_scene):
    return world_grids(dup_scene)


@pytest.fixture(scope="session")
def three_scene() -> Scene:
    return builtin_scene("three-buildings")


@pytest.fixture(scope="session")
def vehicle_scene() -> Scene:
    return builtin_scene("vehicle-loop")


def make_scene(**overrides) -> Scene:
    """Small empty-court scene; override any top-level schema field."""
    data = {
        "id": "test-court",
        "bounds": {"min": [0, 0], "max": [30, 20]},
        "obstacles": [],
        "pois": [
            {"id": "cafe-1", "name": "Test Cafe", "category": "cafe",
             "pos": [25, 10], "approach_radius": 2.0},
        ],
        "spawn_regions": [{"min": [1, 1], "max": [29, 19]}],
        "condition": {"time_of_day": 10.0, "weather": "clear", "visibility_m": 40.0},
    }
    data.update(overrides)
    return scene_from_dict(json.loads(json.dumps(data)))


@pytest.fixture()
def court_scene() -> Scene:
    return make_scene()
