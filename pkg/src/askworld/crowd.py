"""Pedestrian crowd: demographic profiles, daily schedules, and behavior FSM.

Each pedestrian owns a profile (sampled once per seed), a schedule of timed
POI visits compatible with its occupation-free activity tags, and a small
state machine: Idle, PlanPath, Walk, PerformActivity, AnswerInquiry. Asking
freezes a pedestrian in place until the answer window ends, then it resumes
exactly the state it was interrupted in.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry, motion
from .scene import Scene, OccupancyGrid
from .seeding import PROFILE, SCHEDULE, POPULATE, derive_rng

GENDERS = ("female", "male", "nonbinary")
GENDER_WEIGHTS = (0.49, 0.49, 0.02)

CULTURES = (
    "north_european", "south_european", "east_asian", "south_asian",
    "middle_eastern", "african", "latin_american", "north_american",
)
# Cultures whose members lean on landmark-heavy phrasing when giving routes.
LANDMARK_CULTURES = frozenset({"north_european", "south_european", "middle_eastern"})

OCCUPATIONS = (
    "teacher", "nurse", "engineer", "barista", "shop_clerk", "office_worker",
    "student", "chef", "courier", "librarian", "doctor", "banker", "artist",
    "musician", "retiree", "gym_trainer", "pharmacist", "receptionist",
    "bus_driver", "journalist",
)

# Which activities a POI category can host; schedules only pair compatibles.
CATEGORY_ACTIVITIES: dict[str, tuple[str, ...]] = {
    "store": ("shop",), "supermarket": ("shop",), "pharmacy": ("shop",),
    "cafe": ("rest",), "restaurant": ("rest",), "hotel": ("rest",),
    "park": ("stroll", "rest"), "plaza": ("stroll",), "museum": ("stroll",),
    "gym": ("stroll",), "office": ("work",), "bank": ("work",),
    "school": ("work",), "clinic": ("work",), "library": ("work", "rest"),
    "station": ("commute",),
}

DAY_START_S = 28800.0   # 08:00
DAY_END_S = 72000.0     # 20:00

WAYPOINT_TOLERANCE = 0.5   # m
ARRIVE_TOLERANCE = 0.8     # m from the final waypoint
ANSWER_BASE_S = 2.0
ANSWER_PER_LEVEL_S = 0.5   # utterance length level 0/1/2 adds this much each
PED_RADIUS = 0.25          # m


class PedState(enum.Enum):
    IDLE = "idle"
    PLAN_PATH = "plan_path"
    WALK = "walk"
    PERFORM_ACTIVITY = "perform_activity"
    ANSWER_INQUIRY = "answer_inquiry"


# The FSM accepts exactly these edges; anything else is a bug, not a policy.
ALLOWED_TRANSITIONS: frozenset[tuple[PedState, PedState]] = frozenset({
    (PedState.IDLE, PedState.PLAN_PATH),
    (PedState.PLAN_PATH, PedState.WALK),
    (PedState.PLAN_PATH, PedState.IDLE),
    (PedState.WALK, PedState.PERFORM_ACTIVITY),
    (PedState.WALK, PedState.PLAN_PATH),
    (PedState.PERFORM_ACTIVITY, PedState.IDLE),
    (PedState.IDLE, PedState.ANSWER_INQUIRY),
    (PedState.WALK, PedState.ANSWER_INQUIRY),
    (PedState.PERFORM_ACTIVITY, PedState.ANSWER_INQUIRY),
    (PedState.ANSWER_INQUIRY, PedState.IDLE),
    (PedState.ANSWER_INQUIRY, PedState.WALK),
    (PedState.ANSWER_INQUIRY, PedState.PERFORM_ACTIVITY),
})


@dataclass(frozen=True)
class Profile:
    id: str
    age: int
    gender: str
    culture: str
    occupation: str
    familiarity: float      # 0..1, knowledge of this area
    talkativeness: float    # 0..1


@dataclass(frozen=True)
class ScheduleEntry:
    start_s: float
    duration_s: float
    poi_id: str
    activity: str


@dataclass
class Pedestrian:
    id: str
    profile: Profile
    body: motion.Body
    schedule: list[ScheduleEntry]
    state: PedState = PedState.IDLE
    resume_state: PedState = PedState.IDLE
    schedule_index: int = 0
    path: list[tuple[float, float]] | None = None
    waypoint_index: int = 0
    activity_until: float = 0.0
    answer_until: float = 0.0

    def transition(self, new_state: PedState) -> None:
        if new_state == self.state:
            return
        if (self.state, new_state) not in ALLOWED_TRANSITIONS:
            raise RuntimeError(f"pedestrian {self.id}: illegal transition {self.state} -> {new_state}")
        self.state = new_state


def sample_profile(seed: int, index: int) -> Profile:
    """Deterministic profile for pedestrian #index under this world seed."""
    rng = derive_rng(seed, PROFILE, index)
    gender = str(rng.choice(GENDERS, p=GENDER_WEIGHTS))
    return Profile(
        id=f"ped-{index}",
        age=int(rng.integers(18, 80)),
        gender=gender,
        culture=str(rng.choice(CULTURES)),
        occupation=str(rng.choice(OCCUPATIONS)),
        familiarity=float(rng.random()),
        talkativeness=float(rng.random()),
    )


def sample_schedule(profile: Profile, scene: Scene, seed: int, index: int) -> list[ScheduleEntry]:
    """Up to 4 timed POI visits in the day window, sorted, non-overlapping.

    Each visit targets a POI whose category supports the drawn activity; the
    drawn durations are clipped so entries never overlap, and a visit that
    cannot fit a minimal 60 s stay before the next start (or day end) is
    dropped outright.
    """
    rng = derive_rng(seed, SCHEDULE, index)
    usable = [p for p in scene.pois if p.category in CATEGORY_ACTIVITIES]
    if not usable:
        return []
    n = int(rng.integers(2, 5))
    starts = np.sort(rng.uniform(DAY_START_S, DAY_END_S, size=n))
    entries: list[ScheduleEntry] = []
    for i, start in enumerate(starts):
        limit = (starts[i + 1] if i + 1 < n else DAY_END_S) - start
        if limit < 60.0:
            continue
        poi = usable[int(rng.integers(0, len(usable)))]
        activity = str(rng.choice(CATEGORY_ACTIVITIES[poi.category]))
        duration = max(60.0, min(float(rng.uniform(600.0, 1800.0)), limit))
        entries.append(ScheduleEntry(start_s=float(start), duration_s=duration,
                                     poi_id=poi.id, activity=activity))
    return entries


def _spawn_position(scene: Scene, rng: np.random.Generator) -> np.ndarray:
    regions = scene.spawn_regions or [scene.bounds]
    areas = np.array([max(r.size[0] * r.size[1], 1e-9) for r in regions])
    for _ in range(200):
        region = regions[int(rng.choice(len(regions), p=areas / areas.sum()))]
        p = np.array([
            rng.uniform(region.min_xy[0], region.max_xy[0]),
            rng.uniform(region.min_xy[1], region.max_xy[1]),
        ])
        if not any(geometry.point_in_convex_polygon(p, prism.footprint) for prism in scene.obstacles):
            return p
    raise RuntimeError("could not place a pedestrian outside obstacles after 200 draws")


def populate(scene: Scene, seed: int, count: int) -> list[Pedestrian]:
    """Spawn pedestrians with per-index profiles, schedules, and positions."""
    peds = []
    for i in range(count):
        profile = sample_profile(seed, i)
        schedule = sample_schedule(profile, scene, seed, i)
        rng = derive_rng(seed, POPULATE, i)
        position = _spawn_position(scene, rng)
        body = motion.Body(
            id=profile.id, position=position, velocity=np.zeros(2), radius=PED_RADIUS,
        )
        peds.append(Pedestrian(id=profile.id, profile=profile, body=body, schedule=schedule))
    return peds


def begin_answer(ped: Pedestrian, sim_time: float, length_level: int) -> None:
    """Freeze the pedestrian to answer; it resumes its prior state afterward.

    length_level 0/1/2 (short/medium/long) sets how long speech takes.
    """
    if ped.state != PedState.ANSWER_INQUIRY:
        ped.resume_state = ped.state
        ped.transition(PedState.ANSWER_INQUIRY)
    ped.answer_until = sim_time + ANSWER_BASE_S + ANSWER_PER_LEVEL_S * length_level
    ped.body.velocity = np.zeros(2)


def step_crowd(peds: list[Pedestrian], scene: Scene, grid: OccupancyGrid,
               sim_time: float, dt: float,
               extra_bodies: list[motion.Body] | None = None) -> None:
    """One tick of FSM updates plus social-force motion for walking peds.

    Pedestrians in ANSWER_INQUIRY have exactly zero speed and do not move;
    everyone else repels walkers as a static body. extra_bodies (e.g. the
    agent) repel but are not stepped.
    """
    walls = np.vstack([scene.wall_segments(), scene.boundary_segments()])
    for ped in peds:
        if ped.state == PedState.ANSWER_INQUIRY:
            ped.body.velocity = np.zeros(2)
            if sim_time >= ped.answer_until:
                ped.transition(ped.resume_state)
            else:
                continue
        if ped.state == PedState.IDLE:
            entry = _current_entry(ped)
            if entry is not None and sim_time >= entry.start_s:
                ped.transition(PedState.PLAN_PATH)
        if ped.state == PedState.PLAN_PATH:
            entry = _current_entry(ped)
            if entry is None:
                ped.transition(PedState.IDLE)
            else:
                poi = scene.poi_by_id(entry.poi_id)
                path = motion.plan_path(grid, tuple(ped.body.position), poi.position,
                                        body_radius=ped.body.radius)
                if path is None:
                    ped.schedule_index += 1  # unreachable stop: drop it
                    ped.transition(PedState.IDLE)
                else:
                    ped.path = path
                    ped.waypoint_index = 0
                    ped.transition(PedState.WALK)
        if ped.state == PedState.WALK:
            _advance_waypoints(ped)
            if ped.path is not None and ped.waypoint_index >= len(ped.path):
                entry = _current_entry(ped)
                ped.activity_until = sim_time + (entry.duration_s if entry else 600.0)
                ped.schedule_index += 1
                ped.path = None
                ped.body.goal = None
                ped.body.velocity = np.zeros(2)
                ped.transition(PedState.PERFORM_ACTIVITY)
        if ped.state == PedState.PERFORM_ACTIVITY and sim_time >= ped.activity_until:
            ped.transition(PedState.IDLE)

    walkers = [p.body for p in peds if p.state == PedState.WALK]
    stationary = [p.body for p in peds if p.state != PedState.WALK]
    if walkers:
        motion.step_bodies(walkers, dt, walls=walls, others=stationary + list(extra_bodies or []))
    for ped in peds:
        if ped.state == PedState.WALK:
            _advance_waypoints(ped)


def _current_entry(ped: Pedestrian) -> ScheduleEntry | None:
    if ped.schedule_index < len(ped.schedule):
        return ped.schedule[ped.schedule_index]
    return None


def _advance_waypoints(ped: Pedestrian) -> None:
    if not ped.path:
        return
    while ped.waypoint_index < len(ped.path):
        wp = ped.path[ped.waypoint_index]
        d = math.hypot(wp[0] - ped.body.position[0], wp[1] - ped.body.position[1])
        tolerance = ARRIVE_TOLERANCE if ped.waypoint_index == len(ped.path) - 1 else WAYPOINT_TOLERANCE
        if d > tolerance:
            break
        ped.waypoint_index += 1
    if ped.waypoint_index < len(ped.path):
        ped.body.goal = ped.path[ped.waypoint_index]
    else:
        ped.body.goal = None
