"""Direction-giving: navigation styles, route sketches, and instruction text.

A pedestrian's profile maps to a navigation style (perspective, direction
type, distance phrasing, landmark appetite, utterance length). A planned path
is condensed into a route sketch (merged segments, classified turns, corridor
landmarks), and the sketch plus style render to deterministic template text.
An optional external text provider can replace the template renderer; on any
failure the template result is used instead.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from urllib import error, request

import numpy as np

from . import geometry
from .crowd import LANDMARK_CULTURES, Profile
from .scene import Poi, Scene

MERGE_DEG = 20.0        # heading changes below this merge into one segment
TURN_DEG = 45.0         # at or above this a boundary is a turn, else a bear
SIMPLIFY_EPSILON = 0.5  # m, polyline simplification tolerance
CORRIDOR_RADIUS = 25.0  # m, how far off-route a landmark may sit
SURVEY_FAMILIARITY = 0.7

EGOCENTRIC_WORDS = ("left", "right")
CARDINAL_WORDS = ("north", "northeast", "east", "southeast",
                  "south", "southwest", "west", "northwest")
# Octants indexed by round(heading / 45 deg) with 0 = +x.
_OCTANTS = ("east", "northeast", "north", "northwest",
            "west", "southwest", "south", "southeast")

_RANK_WORDS = ("nearest", "second nearest", "third nearest",
               "fourth nearest", "fifth nearest")

VAGUE_NEAR_M = 20.0
VAGUE_MID_M = 60.0

LLM_ENDPOINT_ENV = "ASKWORLD_LLM_ENDPOINT"
LLM_TIMEOUT_S = 2.0


@dataclass(frozen=True)
class NavStyle:
    """How a particular giver phrases directions.

    Invariant: survey perspective always uses cardinal directions.
    """

    perspective: str            # "route" | "survey"
    direction_type: str         # "egocentric" | "cardinal"
    distance_description: str   # "precise" | "vague"
    landmark_use: float         # 0..1; >= 0.5 means landmarks get mentioned
    utterance_length: int       # 0 short, 1 medium, 2 long

    def __post_init__(self) -> None:
        if self.perspective == "survey" and self.direction_type != "cardinal":
            raise ValueError("survey perspective requires cardinal directions")


@dataclass(frozen=True)
class RouteSegment:
    start: tuple[float, float]
    end: tuple[float, float]
    length: float
    heading: float                   # rad, 0 = +x
    turn_in: str | None              # turn_left/turn_right/bear_left/bear_right, None on the first
    landmark: Poi | None


@dataclass(frozen=True)
class RouteSketch:
    segments: tuple[RouteSegment, ...]
    total_length: float
    goal_name: str


def derive_nav_style(profile: Profile) -> NavStyle:
    """Deterministic style from demographics; no randomness involved.

    High familiarity speakers give survey (map-like, cardinal, precise)
    directions, everyone else gives route (egocentric, vague) ones.
    Talkativeness tertiles set utterance length; female speakers run one
    level longer. Landmark-leaning cultures get a high landmark appetite.
    """
    survey = profile.familiarity >= SURVEY_FAMILIARITY
    tertile = 0 if profile.talkativeness < 1 / 3 else (1 if profile.talkativeness < 2 / 3 else 2)
    if profile.gender == "female":
        tertile = min(2, tertile + 1)
    return NavStyle(
        perspective="survey" if survey else "route",
        direction_type="cardinal" if survey else "egocentric",
        distance_description="precise" if survey else "vague",
        landmark_use=0.8 if profile.culture in LANDMARK_CULTURES else 0.2,
        utterance_length=tertile,
    )


def simplify_polyline(points: list[tuple[float, float]], epsilon: float = SIMPLIFY_EPSILON) -> list[tuple[float, float]]:
    """Ramer-Douglas-Peucker; keeps endpoints, splits at the first max deviation."""
    if len(points) < 3:
        return list(points)
    seg = (points[0][0], points[0][1], points[-1][0], points[-1][1])
    best_d, best_i = -1.0, -1
    for i in range(1, len(points) - 1):
        d = geometry.segment_distance(points[i], seg)
        if d > best_d + 1e-15:
            best_d, best_i = d, i
    if best_d <= epsilon:
        return [points[0], points[-1]]
    left = simplify_polyline(points[: best_i + 1], epsilon)
    right = simplify_polyline(points[best_i:], epsilon)
    return left[:-1] + right


def compass_octant(heading: float) -> str:
    return _OCTANTS[int(round(heading / (math.pi / 4))) % 8]


def _classify_turn(prev_heading: float, heading: float) -> str | None:
    delta = geometry.wrap_angle(heading - prev_heading)
    if abs(delta) < math.radians(MERGE_DEG):
        return None
    side = "left" if delta > 0 else "right"
    kind = "turn" if abs(delta) >= math.radians(TURN_DEG) else "bear"
    return f"{kind}_{side}"


def sketch_route(waypoints: list[tuple[float, float]], scene: Scene, goal: Poi,
                 corridor_radius: float = CORRIDOR_RADIUS) -> RouteSketch:
    """Condense a waypoint path into described segments.

    The polyline is simplified, then consecutive pieces merge while the
    heading change stays under MERGE_DEG. Each boundary is classified
    left/right by the cross product of incoming and outgoing directions and
    bear/turn by its magnitude. Each segment picks its nearest corridor POI
    (excluding the goal itself) as a landmark.
    """
    pts = simplify_polyline([(float(x), float(y)) for x, y in waypoints])
    if len(pts) < 2:
        pts = pts + pts  # degenerate: zero-length single segment
    # merge near-collinear boundaries
    merged: list[tuple[float, float]] = [pts[0], pts[1]]
    for p in pts[2:]:
        a, b = merged[-2], merged[-1]
        h_prev = math.atan2(b[1] - a[1], b[0] - a[0])
        h_next = math.atan2(p[1] - b[1], p[0] - b[0])
        if abs(geometry.wrap_angle(h_next - h_prev)) < math.radians(MERGE_DEG):
            merged[-1] = p
        else:
            merged.append(p)

    segments: list[RouteSegment] = []
    prev_heading: float | None = None
    for a, b in zip(merged, merged[1:]):
        heading = math.atan2(b[1] - a[1], b[0] - a[0])
        turn_in = None if prev_heading is None else _classify_turn(prev_heading, heading)
        seg = (a[0], a[1], b[0], b[1])
        landmark: Poi | None = None
        best = math.inf
        for poi in scene.pois:
            if poi.id == goal.id:
                continue
            d = geometry.segment_distance(poi.position, seg)
            if d <= corridor_radius and d < best:
                best, landmark = d, poi
        segments.append(RouteSegment(
            start=a, end=b, length=math.hypot(b[0] - a[0], b[1] - a[1]),
            heading=heading, turn_in=turn_in, landmark=landmark,
        ))
        prev_heading = heading
    total = sum(s.length for s in segments)
    return RouteSketch(segments=tuple(segments), total_length=total, goal_name=goal.name)


def round5(length: float) -> int:
    """Distances are spoken in 5 m steps, never below 5."""
    return max(5, int(5 * round(length / 5.0)))


def _distance_phrase(length: float, style: NavStyle) -> str:
    if style.distance_description == "precise":
        return f"{round5(length)} meters"
    if length < VAGUE_NEAR_M:
        return "a short way"
    if length < VAGUE_MID_M:
        return "a while"
    return "quite far"


_TURN_PHRASES = {
    "turn_left": "turn left", "turn_right": "turn right",
    "bear_left": "bear left", "bear_right": "bear right",
}


def goal_phrase(goal_name: str, goal_rank: tuple[int, int] | None) -> str:
    """Goal reference; a rank qualifier disambiguates duplicated names."""
    if goal_rank is None or goal_rank[1] <= 1:
        return goal_name
    rank, count = goal_rank
    word = "farthest" if rank == count - 1 else _RANK_WORDS[min(rank, len(_RANK_WORDS) - 1)]
    return f"the {word} {goal_name}"


def compose_instruction(sketch: RouteSketch, style: NavStyle,
                        goal_rank: tuple[int, int] | None = None) -> str:
    """Render the sketch to deterministic template text.

    Length levels: 0 drops landmarks and uses clipped phrasing, 1 spells out
    every segment, 2 adds a greeting and a closing line. Landmarks appear
    only when style.landmark_use >= 0.5.
    """
    clauses: list[str] = []
    use_landmarks = style.landmark_use >= 0.5 and style.utterance_length >= 1
    for i, seg in enumerate(sketch.segments):
        dist = _distance_phrase(seg.length, style)
        if style.direction_type == "cardinal":
            move = f"head {compass_octant(seg.heading)} for {dist}"
        else:
            move = f"go straight for {dist}"
        if seg.turn_in is not None and style.direction_type == "egocentric":
            turn = _TURN_PHRASES[seg.turn_in]
            if style.utterance_length == 0:
                clause = f"{turn}, {move}"
            else:
                clause = f"{turn}, then {move}"
        else:
            clause = move if i == 0 else f"then {move}"
        if use_landmarks and seg.landmark is not None:
            clause += f" past {seg.landmark.name}"
        clauses.append(clause)
    body = ", ".join(clauses)
    body = body[0].upper() + body[1:]
    text = f"{body} to reach {goal_phrase(sketch.goal_name, goal_rank)}."
    if style.utterance_length >= 2:
        text = f"Sure, it's easy. {text} You can't miss it."
    return text


class TemplateProvider:
    """Pure renderer; the default and the fallback for external providers."""

    def generate(self, sketch: RouteSketch, style: NavStyle,
                 goal_rank: tuple[int, int] | None = None) -> str:
        return compose_instruction(sketch, style, goal_rank)


class HttpTextProvider:
    """POSTs the sketch to an external endpoint; any failure falls back.

    Request body: {"sketch": ..., "style": ..., "goal": ...}; the endpoint
    must answer {"text": "..."} within LLM_TIMEOUT_S seconds. A missing or
    malformed answer yields the template text; errors never propagate.
    """

    def __init__(self, endpoint: str, timeout_s: float = LLM_TIMEOUT_S):
        self.endpoint = endpoint
        self.timeout_s = timeout_s
        self._fallback = TemplateProvider()

    def generate(self, sketch: RouteSketch, style: NavStyle,
                 goal_rank: tuple[int, int] | None = None) -> str:
        payload = {
            "sketch": {
                "goal": goal_phrase(sketch.goal_name, goal_rank),
                "total_length": sketch.total_length,
                "segments": [
                    {"length": s.length, "heading": s.heading, "turn_in": s.turn_in,
                     "landmark": s.landmark.name if s.landmark else None}
                    for s in sketch.segments
                ],
            },
            "style": {
                "perspective": style.perspective,
                "direction_type": style.direction_type,
                "distance_description": style.distance_description,
                "landmark_use": style.landmark_use,
                "utterance_length": style.utterance_length,
            },
        }
        try:
            req = request.Request(
                self.endpoint, data=json.dumps(payload).encode("utf-8"),
                headers={"Content-Type": "application/json"}, method="POST",
            )
            with request.urlopen(req, timeout=self.timeout_s) as resp:
                answer = json.loads(resp.read().decode("utf-8"))
            text = answer.get("text")
            if isinstance(text, str) and text.strip():
                return text
        except (error.URLError, OSError, ValueError):
            pass
        return self._fallback.generate(sketch, style, goal_rank)


def default_provider() -> TemplateProvider | HttpTextProvider:
    """HttpTextProvider when the endpoint env var is set, else templates."""
    endpoint = os.environ.get(LLM_ENDPOINT_ENV, "").strip()
    if endpoint:
        return HttpTextProvider(endpoint)
    return TemplateProvider()


def resolve_goal_poi(text: str, scene: Scene, asker_xy: tuple[float, float],
                     rng: np.random.Generator) -> Poi | None:
    """Map instruction text back to a POI, the way a listener would.

    Template text marks the goal with "to reach ..."; only that trailing
    segment is searched so landmark mentions never steal the match. Without
    the marker the longest POI name anywhere wins. Same-name candidates sort
    by distance from the asker (ties on id); a spelled rank qualifier
    ("second nearest", "farthest", ...) picks exactly, otherwise the listener
    guesses uniformly among the candidates.
    """
    marker = "to reach "
    if marker in text:
        text = text[text.rindex(marker) + len(marker):]
    names = sorted({p.name for p in scene.pois}, key=len, reverse=True)
    name = next((n for n in names if n in text), None)
    if name is None:
        return None
    candidates = sorted(
        scene.pois_by_name(name),
        key=lambda p: (math.hypot(p.position[0] - asker_xy[0], p.position[1] - asker_xy[1]), p.id),
    )
    if len(candidates) == 1:
        return candidates[0]
    if "farthest" in text:
        return candidates[-1]
    for rank in range(len(_RANK_WORDS) - 1, 0, -1):  # longest qualifier first
        if rank < len(candidates) and _RANK_WORDS[rank] in text:
            return candidates[rank]
    if _RANK_WORDS[0] in text:
        return candidates[0]
    return candidates[int(rng.integers(0, len(candidates)))]
