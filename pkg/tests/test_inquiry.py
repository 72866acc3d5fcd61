from __future__ import annotations

import http.server
import json
import math
import re
import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from askworld.crowd import Profile
from askworld.inquiry import (
    CARDINAL_WORDS, EGOCENTRIC_WORDS, HttpTextProvider, LLM_ENDPOINT_ENV,
    NavStyle, RouteSegment, RouteSketch, TemplateProvider, compass_octant,
    compose_instruction, default_provider, derive_nav_style, goal_phrase,
    resolve_goal_poi, round5, simplify_polyline, sketch_route,
)
from askworld.scene import builtin_scene
from askworld.seeding import derive_rng

DUP = builtin_scene("duplicate-stores")


def profile(**kw) -> Profile:
    base = dict(id="ped-0", age=30, gender="male", culture="east_asian",
                occupation="teacher", familiarity=0.5, talkativeness=0.5)
    base.update(kw)
    return Profile(**base)


def seg(a, b, turn_in=None, landmark=None) -> RouteSegment:
    length = math.hypot(b[0] - a[0], b[1] - a[1])
    return RouteSegment(start=a, end=b, length=length,
                        heading=math.atan2(b[1] - a[1], b[0] - a[0]),
                        turn_in=turn_in, landmark=landmark)


def sketch(*segments, goal_name="Store A") -> RouteSketch:
    return RouteSketch(segments=tuple(segments),
                       total_length=sum(s.length for s in segments),
                       goal_name=goal_name)


STRAIGHT_50 = sketch(seg((0, 0), (50, 0)))
L_SHAPE = sketch(seg((0, 0), (50, 0)), seg((50, 0), (50, 30), turn_in="turn_left"))

ROUTE_PRECISE_SHORT = NavStyle("route", "egocentric", "precise", 0.2, 0)
ROUTE_VAGUE_MED = NavStyle("route", "egocentric", "vague", 0.2, 1)
SURVEY_LONG = NavStyle("survey", "cardinal", "precise", 0.2, 2)


# --- style derivation ---------------------------------------------------------

def test_style_from_familiarity_boundary():
    low = derive_nav_style(profile(familiarity=0.69))
    assert (low.perspective, low.direction_type, low.distance_description) == (
        "route", "egocentric", "vague")
    high = derive_nav_style(profile(familiarity=0.7))
    assert (high.perspective, high.direction_type, high.distance_description) == (
        "survey", "cardinal", "precise")


def test_style_talkativeness_tertiles_and_female_bump():
    assert derive_nav_style(profile(talkativeness=0.1)).utterance_length == 0
    assert derive_nav_style(profile(talkativeness=0.5)).utterance_length == 1
    assert derive_nav_style(profile(talkativeness=0.9)).utterance_length == 2
    assert derive_nav_style(profile(talkativeness=0.1, gender="female")).utterance_length == 1
    assert derive_nav_style(profile(talkativeness=0.9, gender="female")).utterance_length == 2


def test_style_landmark_appetite_by_culture():
    assert derive_nav_style(profile(culture="middle_eastern")).landmark_use == 0.8
    assert derive_nav_style(profile(culture="east_asian")).landmark_use == 0.2


def test_survey_requires_cardinal():
    with pytest.raises(ValueError, match="cardinal"):
        NavStyle("survey", "egocentric", "precise", 0.2, 1)


# --- route sketching ------------------------------------------------------------

def test_simplify_drops_jitter_keeps_corners():
    jittered = [(0.0, 0.0), (5.0, 0.3), (10.0, -0.3), (20.0, 0.0)]
    assert simplify_polyline(jittered) == [(0.0, 0.0), (20.0, 0.0)]
    corner = [(0.0, 0.0), (10.0, 0.0), (10.0, 10.0)]
    assert simplify_polyline(corner) == corner
    assert simplify_polyline([(1.0, 2.0)]) == [(1.0, 2.0)]


def test_compass_octants():
    assert compass_octant(0.0) == "east"
    assert compass_octant(math.pi / 4) == "northeast"
    assert compass_octant(math.pi / 2) == "north"
    assert compass_octant(math.pi) == "west"
    assert compass_octant(-math.pi / 2) == "south"
    assert compass_octant(-math.pi / 4) == "southeast"
    assert compass_octant(math.radians(22.0)) == "east"
    assert compass_octant(math.radians(23.0)) == "northeast"


def test_sketch_merges_near_collinear_and_classifies_turns():
    one = sketch_route([(0, 0), (10, 0), (20, 3)], DUP, DUP.poi_by_id("store-a-e"))
    assert len(one.segments) == 1
    assert one.segments[0].turn_in is None

    left = sketch_route([(0, 0), (10, 0), (10, 10)], DUP, DUP.poi_by_id("store-a-e"))
    assert len(left.segments) == 2
    assert left.segments[1].turn_in == "turn_left"

    right = sketch_route([(0, 0), (10, 0), (20, -10)], DUP, DUP.poi_by_id("store-a-e"))
    assert right.segments[1].turn_in == "turn_right"

    bear = sketch_route([(0, 0), (10, 0), (20, 6)], DUP, DUP.poi_by_id("store-a-e"))
    assert bear.segments[1].turn_in == "bear_left"


def test_sketch_total_length_and_goal_name():
    sk = sketch_route([(0, 0), (10, 0), (10, 10)], DUP, DUP.poi_by_id("store-a-w"))
    assert sk.total_length == pytest.approx(20.0)
    assert sk.goal_name == "Store A"


def test_sketch_picks_nearest_corridor_landmark_not_goal():
    sk = sketch_route([(30, 4), (40, 4)], DUP, DUP.poi_by_id("store-a-e"))
    assert len(sk.segments) == 1
    landmark = sk.segments[0].landmark
    assert landmark is not None
    assert landmark.id == "bank-1"  # Cedar Bank sits 2.8 m off this stretch

    far = sketch_route([(30, 4), (40, 4)], DUP, DUP.poi_by_id("store-a-e"),
                       corridor_radius=1.0)
    assert far.segments[0].landmark is None


# --- phrasing -------------------------------------------------------------------

def test_round5():
    assert round5(0.0) == 5
    assert round5(2.4) == 5
    assert round5(47.4) == 45
    assert round5(47.6) == 50
    assert round5(50.0) == 50


def test_goal_phrase_ranks():
    assert goal_phrase("Store A", None) == "Store A"
    assert goal_phrase("Store A", (0, 1)) == "Store A"
    assert goal_phrase("Store A", (0, 3)) == "the nearest Store A"
    assert goal_phrase("Store A", (1, 3)) == "the second nearest Store A"
    assert goal_phrase("Store A", (2, 3)) == "the farthest Store A"
    assert goal_phrase("Store A", (1, 2)) == "the farthest Store A"


def test_golden_instruction_strings():
    assert compose_instruction(STRAIGHT_50, ROUTE_PRECISE_SHORT) == (
        "Go straight for 50 meters to reach Store A.")
    assert compose_instruction(STRAIGHT_50, ROUTE_PRECISE_SHORT, goal_rank=(1, 2)) == (
        "Go straight for 50 meters to reach the farthest Store A.")
    assert compose_instruction(STRAIGHT_50, SURVEY_LONG) == (
        "Sure, it's easy. Head east for 50 meters to reach Store A. You can't miss it.")
    assert compose_instruction(L_SHAPE, ROUTE_PRECISE_SHORT) == (
        "Go straight for 50 meters, turn left, go straight for 30 meters to reach Store A.")
    assert compose_instruction(L_SHAPE, ROUTE_VAGUE_MED) == (
        "Go straight for a while, turn left, then go straight for a while to reach Store A.")


def test_vague_distance_buckets():
    for length, phrase in ((10, "a short way"), (30, "a while"), (80, "quite far")):
        text = compose_instruction(sketch(seg((0, 0), (length, 0))),
                                   NavStyle("route", "egocentric", "vague", 0.2, 0))
        assert phrase in text


def test_landmarks_only_at_length_and_appetite():
    cafe = DUP.poi_by_id("cafe-1")
    with_mark = sketch(seg((0, 0), (50, 0), landmark=cafe))
    chatty = NavStyle("route", "egocentric", "precise", 0.8, 1)
    assert " past Corner Cafe" in compose_instruction(with_mark, chatty)
    terse = NavStyle("route", "egocentric", "precise", 0.8, 0)
    assert "Corner Cafe" not in compose_instruction(with_mark, terse)
    indifferent = NavStyle("route", "egocentric", "precise", 0.2, 1)
    assert "Corner Cafe" not in compose_instruction(with_mark, indifferent)


# --- resolving instructions back to POIs -----------------------------------------

def test_resolve_unique_name_and_unknown_text():
    rng = derive_rng(1, 99)
    poi = resolve_goal_poi("Head north to reach Cedar Bank.", DUP, (30, 4), rng)
    assert poi is not None and poi.id == "bank-1"
    assert resolve_goal_poi("No idea, sorry.", DUP, (30, 4), rng) is None


def test_resolve_rank_qualifiers_from_asker_position():
    rng = derive_rng(1, 99)
    asker = (20.0, 20.0)  # west store is the nearest from here
    nearest = resolve_goal_poi("Go on to reach the nearest Store A.", DUP, asker, rng)
    assert nearest.id == "store-a-w"
    farthest = resolve_goal_poi("Go on to reach the farthest Store A.", DUP, asker, rng)
    assert farthest.id == "store-a-e"
    second = resolve_goal_poi("Go on to reach the second nearest Store A.", DUP, asker, rng)
    assert second.id == "store-a-e"


def test_resolve_ignores_landmarks_before_marker():
    text = "Go straight for 20 meters past City Office, turn left to reach Store A."
    poi = resolve_goal_poi(text, DUP, (20.0, 20.0), derive_rng(1, 0))
    assert poi.name == "Store A"

    text = "Head east past Store A to reach City Office."
    poi = resolve_goal_poi(text, DUP, (20.0, 20.0), derive_rng(1, 0))
    assert poi.id == "office-1"


def test_resolve_without_marker_prefers_longest_name():
    # no "to reach": fall back to scanning the whole text
    poi = resolve_goal_poi("Try the Corner Cafe around the block.", DUP, (30, 4),
                           derive_rng(1, 0))
    assert poi.id == "cafe-1"


def test_resolve_unqualified_duplicate_is_a_seeded_coin_flip():
    picks = set()
    for k in range(60):
        poi = resolve_goal_poi("Walk on to reach Store A.", DUP, (20.0, 20.0),
                               derive_rng(7, k))
        picks.add(poi.id)
    assert picks == {"store-a-w", "store-a-e"}
    a = resolve_goal_poi("Walk on to reach Store A.", DUP, (20.0, 20.0), derive_rng(7, 3))
    b = resolve_goal_poi("Walk on to reach Store A.", DUP, (20.0, 20.0), derive_rng(7, 3))
    assert a.id == b.id


def test_compose_then_resolve_round_trip_by_rank():
    candidates = sorted(DUP.pois_by_name("Store A"),
                        key=lambda p: (math.hypot(p.position[0] - 20.0,
                                                  p.position[1] - 20.0), p.id))
    for rank, expected in enumerate(candidates):
        text = compose_instruction(STRAIGHT_50, ROUTE_PRECISE_SHORT,
                                   goal_rank=(rank, len(candidates)))
        poi = resolve_goal_poi(text, DUP, (20.0, 20.0), derive_rng(1, rank))
        assert poi.id == expected.id


# --- external text provider -------------------------------------------------------

class _Responder(http.server.BaseHTTPRequestHandler):
    payload: bytes = b'{"text": "Take the canal shortcut."}'

    def do_POST(self):
        self.rfile.read(int(self.headers.get("Content-Length", 0)))
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(self.payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def fake_endpoint():
    server = http.server.HTTPServer(("127.0.0.1", 0), _Responder)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/"
    server.shutdown()
    thread.join()


def test_http_provider_uses_endpoint_text(fake_endpoint):
    _Responder.payload = b'{"text": "Take the canal shortcut."}'
    provider = HttpTextProvider(fake_endpoint)
    assert provider.generate(STRAIGHT_50, ROUTE_PRECISE_SHORT) == "Take the canal shortcut."


def test_http_provider_falls_back_on_malformed_reply(fake_endpoint):
    _Responder.payload = b"not json at all"
    provider = HttpTextProvider(fake_endpoint)
    assert provider.generate(STRAIGHT_50, ROUTE_PRECISE_SHORT) == (
        "Go straight for 50 meters to reach Store A.")
    _Responder.payload = b'{"text": ""}'
    assert provider.generate(STRAIGHT_50, ROUTE_PRECISE_SHORT) == (
        "Go straight for 50 meters to reach Store A.")


def test_http_provider_falls_back_when_unreachable():
    provider = HttpTextProvider("http://127.0.0.1:9/", timeout_s=0.2)
    assert provider.generate(STRAIGHT_50, ROUTE_PRECISE_SHORT) == (
        "Go straight for 50 meters to reach Store A.")


def test_default_provider_switches_on_env(monkeypatch):
    monkeypatch.delenv(LLM_ENDPOINT_ENV, raising=False)
    assert isinstance(default_provider(), TemplateProvider)
    monkeypatch.setenv(LLM_ENDPOINT_ENV, "http://127.0.0.1:9/")
    provider = default_provider()
    assert isinstance(provider, HttpTextProvider)
    assert provider.endpoint == "http://127.0.0.1:9/"


# --- instruction text properties ----------------------------------------------------

_LANDMARK_POOL = [None] + [p for p in DUP.pois if p.name != "Store A"]
_TURNS = [None, "turn_left", "turn_right", "bear_left", "bear_right"]


@st.composite
def sketches(draw):
    n = draw(st.integers(1, 4))
    segments = []
    x, y = 0.0, 0.0
    for i in range(n):
        heading = draw(st.sampled_from([k * math.pi / 6 for k in range(-5, 7)]))
        length = draw(st.floats(6.0, 150.0, allow_nan=False))
        end = (x + length * math.cos(heading), y + length * math.sin(heading))
        turn = None if i == 0 else draw(st.sampled_from(_TURNS[1:]))
        landmark = draw(st.sampled_from(_LANDMARK_POOL))
        segments.append(RouteSegment(start=(x, y), end=end, length=length,
                                     heading=heading, turn_in=turn, landmark=landmark))
        x, y = end
    return sketch(*segments)


@st.composite
def styles(draw):
    perspective, direction = draw(st.sampled_from(
        [("survey", "cardinal"), ("route", "egocentric"), ("route", "cardinal")]))
    return NavStyle(perspective, direction,
                    draw(st.sampled_from(["precise", "vague"])),
                    draw(st.sampled_from([0.2, 0.8])),
                    draw(st.integers(0, 2)))


def _words(text: str, vocabulary: tuple[str, ...]) -> set[str]:
    found = set()
    for word in vocabulary:
        if re.search(rf"\b{word}\b", text):
            found.add(word)
    return found


@settings(max_examples=150, deadline=None)
@given(sk=sketches(), style=styles())
def test_direction_vocabulary_is_exclusive(sk, style):
    text = compose_instruction(sk, style)
    if style.direction_type == "cardinal":
        assert not _words(text, EGOCENTRIC_WORDS)
    else:
        assert not _words(text, CARDINAL_WORDS)


@settings(max_examples=150, deadline=None)
@given(sk=sketches(), style=styles())
def test_distance_phrasing_matches_style(sk, style):
    text = compose_instruction(sk, style)
    numbers = re.findall(r"\d+", text)
    if style.distance_description == "vague":
        assert numbers == []
    else:
        assert len(numbers) == len(sk.segments)
        assert all(int(n) >= 5 and int(n) % 5 == 0 for n in numbers)


@settings(max_examples=150, deadline=None)
@given(sk=sketches(), style=styles())
def test_goal_name_always_present_and_text_well_formed(sk, style):
    text = compose_instruction(sk, style)
    assert "Store A" in text
    assert text.endswith(".")
    assert text[0].isupper()


@settings(max_examples=100, deadline=None)
@given(sk=sketches(), style=styles())
def test_longer_levels_never_shorten(sk, style):
    lengths = [len(compose_instruction(sk, NavStyle(
        style.perspective, style.direction_type, style.distance_description,
        style.landmark_use, level))) for level in (0, 1, 2)]
    assert lengths[0] <= lengths[1] <= lengths[2]


@settings(max_examples=100, deadline=None)
@given(sk=sketches(), style=styles())
def test_mentioned_landmarks_are_scene_pois(sk, style):
    text = compose_instruction(sk, style)
    for mention in re.findall(r" past (.+?)(?:,| to reach|\.)", text):
        assert mention in {p.name for p in DUP.pois}
