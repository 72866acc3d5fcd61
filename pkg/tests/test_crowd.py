from __future__ import annotations

import numpy as np
import pytest

from askworld.crowd import (
    ANSWER_BASE_S, ANSWER_PER_LEVEL_S, CATEGORY_ACTIVITIES, CULTURES,
    DAY_END_S, DAY_START_S, GENDERS, OCCUPATIONS, PedState, Pedestrian,
    begin_answer, populate, sample_profile, sample_schedule, step_crowd,
)
from askworld.scene import OccupancyConfig, generate_occupancy, point_in_obstacle

from conftest import make_scene


def test_profile_deterministic_and_in_vocab():
    for index in range(50):
        profile = sample_profile(123, index)
        again = sample_profile(123, index)
        assert profile == again
        assert profile.id == f"ped-{index}"
        assert 18 <= profile.age <= 79
        assert profile.gender in GENDERS
        assert profile.culture in CULTURES
        assert profile.occupation in OCCUPATIONS
        assert 0.0 <= profile.familiarity <= 1.0
        assert 0.0 <= profile.talkativeness <= 1.0
    assert sample_profile(123, 0) != sample_profile(124, 0)
    # the population is not a clone army
    ages = {sample_profile(123, i).age for i in range(50)}
    assert len(ages) > 10


def test_schedule_sorted_compatible_non_overlapping(dup_scene):
    poi_ids = {p.id for p in dup_scene.pois}
    categories = {p.id: p.category for p in dup_scene.pois}
    for seed in (1, 2, 3):
        for index in range(40):
            entries = sample_schedule(sample_profile(seed, index), dup_scene, seed, index)
            assert entries == sample_schedule(sample_profile(seed, index), dup_scene, seed, index)
            assert len(entries) <= 4
            for entry in entries:
                assert entry.poi_id in poi_ids
                assert entry.activity in CATEGORY_ACTIVITIES[categories[entry.poi_id]]
                assert DAY_START_S <= entry.start_s <= DAY_END_S
                assert 60.0 <= entry.duration_s <= 1800.0
                assert entry.start_s + entry.duration_s <= DAY_END_S + 1e-6
            for a, b in zip(entries, entries[1:]):
                assert a.start_s + a.duration_s <= b.start_s + 1e-9


def test_schedule_empty_without_pois():
    scene = make_scene(pois=[])
    assert sample_schedule(sample_profile(1, 0), scene, 1, 0) == []


def test_populate_places_everyone_legally(dup_scene):
    peds = populate(dup_scene, seed=7, count=25)
    assert len(peds) == 25
    assert len({p.id for p in peds}) == 25
    for ped in peds:
        x, y = ped.body.position
        assert dup_scene.bounds.contains((x, y))
        assert not point_in_obstacle(dup_scene, (x, y, 0.5))
        assert ped.state is PedState.IDLE
        assert ped.body.speed() == 0.0
    again = populate(dup_scene, seed=7, count=25)
    for a, b in zip(peds, again):
        assert np.array_equal(a.body.position, b.body.position)
        assert a.profile == b.profile
        assert a.schedule == b.schedule


def test_illegal_transition_raises():
    ped = populate(make_scene(), seed=1, count=1)[0]
    assert ped.state is PedState.IDLE
    with pytest.raises(RuntimeError, match="illegal transition"):
        ped.transition(PedState.PERFORM_ACTIVITY)
    ped.transition(PedState.PLAN_PATH)  # legal edge still works
    assert ped.state is PedState.PLAN_PATH


def _walking_fixture():
    """A single ped with an immediate one-stop schedule on an empty court."""
    scene = make_scene()
    grid = generate_occupancy(scene, OccupancyConfig(resolution=0.5, seed=0))
    ped = populate(scene, seed=3, count=1)[0]
    ped.body.position = np.array([5.0, 10.0])
    ped.schedule = [type(ped.schedule[0])(start_s=0.0, duration_s=30.0,
                                          poi_id="cafe-1", activity="rest")]
    ped.schedule_index = 0
    return scene, grid, ped


def test_fsm_walks_schedule_to_activity_and_back_to_idle():
    scene, grid, ped = _walking_fixture()
    seen = [ped.state]
    arrived_at = None
    for t in range(120):
        step_crowd([ped], scene, grid, sim_time=float(t), dt=1.0)
        if ped.state is not seen[-1]:
            seen.append(ped.state)
        if ped.state is PedState.PERFORM_ACTIVITY and arrived_at is None:
            arrived_at = float(t)
            poi = scene.poi_by_id("cafe-1")
            assert np.linalg.norm(ped.body.position - np.asarray(poi.position)) < 2.0
            assert ped.body.speed() == 0.0
    assert seen == [PedState.IDLE, PedState.WALK, PedState.PERFORM_ACTIVITY, PedState.IDLE]
    assert arrived_at is not None
    # ~20 m at 1.34 m/s nominal speed
    assert 12.0 <= arrived_at <= 30.0


def test_answer_freezes_then_resumes_walk():
    scene, grid, ped = _walking_fixture()
    for t in range(5):
        step_crowd([ped], scene, grid, sim_time=float(t), dt=1.0)
    assert ped.state is PedState.WALK
    frozen_at = ped.body.position.copy()

    begin_answer(ped, sim_time=5.0, length_level=2)
    assert ped.state is PedState.ANSWER_INQUIRY
    assert ped.answer_until == pytest.approx(5.0 + ANSWER_BASE_S + 2 * ANSWER_PER_LEVEL_S)
    assert ped.body.speed() == 0.0

    for t in (5.0, 6.0, 7.0):  # inside the 3 s answer window
        step_crowd([ped], scene, grid, sim_time=t, dt=1.0)
        assert ped.state is PedState.ANSWER_INQUIRY
        assert np.array_equal(ped.body.position, frozen_at)
        assert ped.body.speed() == 0.0

    step_crowd([ped], scene, grid, sim_time=8.0, dt=1.0)
    assert ped.state is PedState.WALK
    assert not np.array_equal(ped.body.position, frozen_at)


def test_answer_extends_window_and_resumes_idle():
    scene, grid, ped = _walking_fixture()
    ped.schedule = []
    begin_answer(ped, sim_time=0.0, length_level=0)
    assert ped.answer_until == pytest.approx(ANSWER_BASE_S)
    begin_answer(ped, sim_time=1.0, length_level=1)  # asked again mid-answer
    assert ped.answer_until == pytest.approx(1.0 + ANSWER_BASE_S + ANSWER_PER_LEVEL_S)
    assert ped.resume_state is PedState.IDLE
    step_crowd([ped], scene, grid, sim_time=4.0, dt=1.0)
    assert ped.state is PedState.IDLE


def test_unreachable_stop_is_dropped():
    # cafe sealed inside a box: plan fails, entry is skipped, ped goes idle
    scene = make_scene(obstacles=[
        {"footprint": [[23, 8], [27, 8], [27, 12], [23, 12]], "z": [0, 4]},
    ], pois=[
        {"id": "cafe-1", "name": "Test Cafe", "category": "cafe",
         "pos": [25, 10], "approach_radius": 2.0},
    ], spawn_regions=[{"min": [1, 1], "max": [20, 19]}])
    grid = generate_occupancy(scene, OccupancyConfig(resolution=0.5, seed=0))
    ped = populate(scene, seed=3, count=1)[0]
    ped.schedule = [type(sample_schedule(ped.profile, scene, 1, 0)[0])(
        start_s=0.0, duration_s=30.0, poi_id="cafe-1", activity="rest")]
    ped.schedule_index = 0
    step_crowd([ped], scene, grid, sim_time=0.0, dt=1.0)
    assert ped.state is PedState.IDLE
    assert ped.schedule_index == 1
