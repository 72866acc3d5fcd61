"""Motion layer: grid path planning, social-force walking, road vehicles.

Walking bodies follow the classic circular-repulsion social force model with
semi-implicit Euler integration. Paths come from 8-connected A* over an
inflated occupancy grid. Vehicles ride fixed road-graph edges at constant
speed and yield to nearby pedestrians.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy import ndimage

from . import geometry

if TYPE_CHECKING:
    from .scene import OccupancyGrid

# Social force defaults (Helbing-style pedestrian dynamics).
TAU = 0.5            # relaxation time, s
BODY_A = 2000.0      # body repulsion strength, N
BODY_B = 0.08        # body repulsion range, m
WALL_A = 2000.0      # wall repulsion strength, N
WALL_B = 0.08        # wall repulsion range, m
MASS = 80.0          # kg
V_DESIRED = 1.34     # m/s
V_MAX = 1.8          # m/s
SUBSTEP_DT = 0.1     # s
FORCE_CAP = 2.0e4    # N; keeps deep-overlap exponentials from exploding

PLAN_MARGIN = 0.1    # m added to body radius when inflating the grid

LANE_HALF_WIDTH = 1.5   # m, vehicle yield corridor half-width
YIELD_LOOKAHEAD = 2.0   # s of travel scanned ahead for pedestrians
VEHICLE_LENGTH = 4.5    # m
VEHICLE_WIDTH = 1.8     # m


@dataclass
class Body:
    """A walking disc. Mutable; step_bodies advances it in place."""

    id: str
    position: np.ndarray           # (2,) m
    velocity: np.ndarray           # (2,) m/s
    radius: float = 0.25
    v_desired: float = V_DESIRED
    v_max: float = V_MAX
    mass: float = MASS
    tau: float = TAU
    goal: tuple[float, float] | None = None

    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))


@dataclass(frozen=True)
class RouteEdge:
    id: str
    a: str
    b: str


@dataclass
class RouteGraph:
    nodes: dict[str, tuple[float, float]] = field(default_factory=dict)
    edges: list[RouteEdge] = field(default_factory=list)

    def validate(self) -> None:
        from .scene import SceneValidationError

        seen: set[str] = set()
        for edge in self.edges:
            if edge.id in seen:
                raise SceneValidationError(f"road_graph edge id {edge.id!r} is not unique")
            seen.add(edge.id)
            for node_id in (edge.a, edge.b):
                if node_id not in self.nodes:
                    raise SceneValidationError(f"road_graph edge {edge.id!r} references unknown node {node_id!r}")

    def edge_by_id(self, edge_id: str) -> RouteEdge:
        for edge in self.edges:
            if edge.id == edge_id:
                return edge
        raise KeyError(f"no road edge with id {edge_id!r}")

    def edge_points(self, edge: RouteEdge) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.nodes[edge.a], dtype=float), np.asarray(self.nodes[edge.b], dtype=float)

    def edge_length(self, edge: RouteEdge) -> float:
        a, b = self.edge_points(edge)
        return float(np.linalg.norm(b - a))

    @classmethod
    def from_dict(cls, data: dict) -> RouteGraph:
        from .scene import SceneFormatError, _parse_xy

        nodes: dict[str, tuple[float, float]] = {}
        for i, entry in enumerate(data.get("nodes", [])):
            node_id = entry.get("id")
            if not isinstance(node_id, str):
                raise SceneFormatError(f"road_graph.nodes[{i}].id: expected str")
            if node_id in nodes:
                raise SceneFormatError(f"road_graph.nodes[{i}]: duplicate node id {node_id!r}")
            nodes[node_id] = _parse_xy(entry.get("pos"), f"road_graph.nodes[{i}].pos")
        edges = []
        for i, entry in enumerate(data.get("edges", [])):
            edge_id = entry.get("id", f"e{i}")
            a, b = entry.get("from"), entry.get("to")
            if not (isinstance(edge_id, str) and isinstance(a, str) and isinstance(b, str)):
                raise SceneFormatError(f"road_graph.edges[{i}]: expected string id/from/to")
            edges.append(RouteEdge(id=edge_id, a=a, b=b))
        return cls(nodes=nodes, edges=edges)

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": nid, "pos": list(pos)} for nid, pos in self.nodes.items()],
            "edges": [{"id": e.id, "from": e.a, "to": e.b} for e in self.edges],
        }


@dataclass
class Vehicle:
    """Rides route edges in order, wrapping at the end of its route."""

    id: str
    route: tuple[str, ...]         # edge ids, traversed cyclically
    edge_index: int = 0
    arclength: float = 0.0         # m along the current edge
    cruise_speed: float = 6.0      # m/s
    speed: float = 0.0             # m/s actually driven last step
    length: float = VEHICLE_LENGTH
    width: float = VEHICLE_WIDTH

    def pose(self, graph: RouteGraph) -> tuple[np.ndarray, float]:
        """Center position and heading on the current edge."""
        edge = graph.edge_by_id(self.route[self.edge_index])
        a, b = graph.edge_points(edge)
        span = b - a
        length = float(np.linalg.norm(span))
        t = 0.0 if length == 0.0 else min(1.0, self.arclength / length)
        return a + span * t, math.atan2(span[1], span[0])

    def footprint(self, graph: RouteGraph) -> np.ndarray:
        center, heading = self.pose(graph)
        return geometry.oriented_rect((center[0], center[1]), heading, self.length, self.width)


def step_vehicles(vehicles: list[Vehicle], graph: RouteGraph, dt: float,
                  bodies: list[Body] | None = None) -> None:
    """Advance vehicles along their routes; full stop while a body blocks.

    A body blocks when it sits within LANE_HALF_WIDTH plus its radius of the
    lane segment from the vehicle to YIELD_LOOKAHEAD seconds of travel ahead.
    """
    bodies = bodies or []
    for vehicle in vehicles:
        edge = graph.edge_by_id(vehicle.route[vehicle.edge_index])
        a, b = graph.edge_points(edge)
        edge_len = float(np.linalg.norm(b - a))
        pos, _ = vehicle.pose(graph)
        ahead = vehicle.cruise_speed * YIELD_LOOKAHEAD + vehicle.length / 2.0
        direction = (b - a) / edge_len if edge_len > 0 else np.zeros(2)
        scan_end = pos + direction * ahead
        segment = (float(pos[0]), float(pos[1]), float(scan_end[0]), float(scan_end[1]))
        blocked = any(
            geometry.segment_distance(body.position, segment) <= LANE_HALF_WIDTH + body.radius
            for body in bodies
        )
        if blocked:
            vehicle.speed = 0.0
            continue
        vehicle.speed = vehicle.cruise_speed
        vehicle.arclength += vehicle.speed * dt
        # hop edges until the leftover arclength fits the current edge
        while vehicle.arclength >= edge_len and edge_len > 0:
            vehicle.arclength -= edge_len
            vehicle.edge_index = (vehicle.edge_index + 1) % len(vehicle.route)
            edge = graph.edge_by_id(vehicle.route[vehicle.edge_index])
            edge_len = graph.edge_length(edge)


def _social_forces(pos: np.ndarray, vel: np.ndarray, radii: np.ndarray,
                   goals: np.ndarray, has_goal: np.ndarray, masses: np.ndarray,
                   v_desired: np.ndarray, taus: np.ndarray, n_moving: int,
                   walls: np.ndarray) -> np.ndarray:
    """Forces on the first n_moving bodies; the rest only repel.

    pos/vel (N, 2), radii/masses/... (N,). Exactly coincident bodies repel
    along x, signed by index order, so the force is defined and the pair
    actually separates.
    """
    moving = slice(0, n_moving)
    to_goal = goals[moving] - pos[moving]
    dist = np.linalg.norm(to_goal, axis=1)
    safe = np.where(dist > 1e-9, dist, 1.0)
    e = np.where((has_goal[moving] & (dist > 1e-9))[:, None], to_goal / safe[:, None], 0.0)
    force = masses[moving, None] * (v_desired[moving, None] * e - vel[moving]) / taus[moving, None]

    diff = pos[moving, None, :] - pos[None, :, :]          # (n, N, 2)
    d = np.linalg.norm(diff, axis=2)
    self_mask = np.zeros_like(d, dtype=bool)
    self_mask[np.arange(n_moving), np.arange(n_moving)] = True
    row = np.arange(n_moving)[:, None]
    col = np.arange(pos.shape[0])[None, :]
    fallback = np.stack([np.where(row > col, 1.0, -1.0), np.zeros_like(d)], axis=2)
    n_hat = np.where((d > 1e-9)[:, :, None], diff / np.where(d > 1e-9, d, 1.0)[:, :, None],
                     fallback)
    strength = BODY_A * np.exp((radii[moving, None] + radii[None, :] - d) / BODY_B)
    strength[self_mask] = 0.0
    force += (strength[:, :, None] * n_hat).sum(axis=1)

    if walls.size:
        closest = geometry.batch_segments_closest(pos[moving], walls)   # (n, S, 2)
        wdiff = pos[moving, None, :] - closest
        wd = np.linalg.norm(wdiff, axis=2)
        wn = np.where((wd > 1e-9)[:, :, None], wdiff / np.where(wd > 1e-9, wd, 1.0)[:, :, None],
                      np.array([1.0, 0.0]))
        wstrength = WALL_A * np.exp((radii[moving, None] - wd) / WALL_B)
        force += (wstrength[:, :, None] * wn).sum(axis=1)

    magnitude = np.linalg.norm(force, axis=1)
    over = magnitude > FORCE_CAP
    if over.any():
        force[over] *= (FORCE_CAP / magnitude[over])[:, None]
    return force


def step_bodies(bodies: list[Body], dt: float, walls: np.ndarray | None = None,
                others: list[Body] | None = None) -> None:
    """Advance all bodies by dt using social forces, in place.

    walls: (S, 4) segment array; others: bodies that repel but are not
    stepped here (e.g. an externally driven actor). Integration is
    semi-implicit Euler in SUBSTEP_DT slices with speed clamped to v_max.
    """
    if not bodies:
        return
    walls = walls if walls is not None else np.zeros((0, 4))
    everyone = list(bodies) + list(others or [])
    n_moving = len(bodies)
    pos = np.array([b.position for b in everyone], dtype=float)
    vel = np.array([b.velocity for b in everyone], dtype=float)
    radii = np.array([b.radius for b in everyone], dtype=float)
    masses = np.array([b.mass for b in everyone], dtype=float)
    v_des = np.array([b.v_desired for b in everyone], dtype=float)
    v_max = np.array([b.v_max for b in bodies], dtype=float)
    taus = np.array([b.tau for b in everyone], dtype=float)
    has_goal = np.array([b.goal is not None for b in everyone], dtype=bool)
    goals = np.array([b.goal if b.goal is not None else (0.0, 0.0) for b in everyone], dtype=float)

    remaining = dt
    while remaining > 1e-12:
        h = min(SUBSTEP_DT, remaining)
        remaining -= h
        force = _social_forces(pos, vel, radii, goals, has_goal, masses, v_des, taus,
                               n_moving, walls)
        vel[:n_moving] += (force / masses[:n_moving, None]) * h
        speed = np.linalg.norm(vel[:n_moving], axis=1)
        fast = speed > v_max
        if fast.any():
            vel[:n_moving][fast] *= (v_max[fast] / speed[fast])[:, None]
        pos[:n_moving] += vel[:n_moving] * h

    for i, body in enumerate(bodies):
        body.position = pos[i].copy()
        body.velocity = vel[i].copy()


def inflate(binary: np.ndarray, resolution: float, radius: float) -> np.ndarray:
    """Blocked mask after growing occupied cells by radius (center metric)."""
    if radius <= 0:
        return binary.copy()
    if not binary.any():
        return binary.copy()
    dist_cells = ndimage.distance_transform_edt(~binary)
    return dist_cells * resolution <= radius + 1e-12


def plan_path(grid: OccupancyGrid, start: tuple[float, float], goal: tuple[float, float],
              body_radius: float = 0.3) -> list[tuple[float, float]] | None:
    """A* over the inflated grid; returns world-coordinate cell centers.

    8-connected moves cost resolution (orthogonal) or sqrt(2) * resolution;
    heuristic is Euclidean, so paths are optimal. Diagonal moves are refused
    when either flanking orthogonal cell is blocked (no corner cutting).
    Ties in f break on lower g, then lower row-major cell index. Returns None
    when no path exists or the goal cell is blocked. A start inside the
    inflation zone snaps to the nearest free cell within a short radius.
    """
    blocked = inflate(grid.binary, grid.resolution, body_radius + PLAN_MARGIN)
    width, height = grid.width, grid.height

    def clamp_cell(p) -> tuple[int, int]:
        ix, iy = grid.world_to_cell(p)
        return min(max(ix, 0), width - 1), min(max(iy, 0), height - 1)

    start_cell = clamp_cell(start)
    goal_cell = clamp_cell(goal)
    if blocked[goal_cell[1], goal_cell[0]]:
        return None
    if blocked[start_cell[1], start_cell[0]]:
        start_cell = _nearest_free(blocked, start_cell, max_rings=8)
        if start_cell is None:
            return None

    def h(cell: tuple[int, int]) -> float:
        return math.hypot(cell[0] - goal_cell[0], cell[1] - goal_cell[1])

    g_cost: dict[tuple[int, int], float] = {start_cell: 0.0}
    parent: dict[tuple[int, int], tuple[int, int]] = {}
    open_heap: list[tuple[float, float, int, tuple[int, int]]] = []
    heapq.heappush(open_heap, (h(start_cell), 0.0, start_cell[1] * width + start_cell[0], start_cell))
    closed: set[tuple[int, int]] = set()
    moves = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]

    found = False
    while open_heap:
        _, g, _, cell = heapq.heappop(open_heap)
        if cell in closed:
            continue
        closed.add(cell)
        if cell == goal_cell:
            found = True
            break
        cx, cy = cell
        for dx, dy in moves:
            nx, ny = cx + dx, cy + dy
            if not (0 <= nx < width and 0 <= ny < height) or blocked[ny, nx]:
                continue
            if dx != 0 and dy != 0:
                if blocked[cy, cx + dx] or blocked[cy + dy, cx]:
                    continue
            step = math.sqrt(2.0) if dx != 0 and dy != 0 else 1.0
            ng = g + step
            neighbor = (nx, ny)
            if neighbor in closed or ng >= g_cost.get(neighbor, math.inf):
                continue
            g_cost[neighbor] = ng
            parent[neighbor] = cell
            heapq.heappush(open_heap, (ng + h(neighbor), ng, ny * width + nx, neighbor))
    if not found:
        return None

    cells = [goal_cell]
    while cells[-1] != start_cell:
        cells.append(parent[cells[-1]])
    cells.reverse()
    return [grid.cell_center(ix, iy) for ix, iy in cells]


def _nearest_free(blocked: np.ndarray, cell: tuple[int, int], max_rings: int) -> tuple[int, int] | None:
    height, width = blocked.shape
    cx, cy = cell
    best: tuple[float, int, tuple[int, int]] | None = None
    for ring in range(1, max_rings + 1):
        for iy in range(max(0, cy - ring), min(height, cy + ring + 1)):
            for ix in range(max(0, cx - ring), min(width, cx + ring + 1)):
                if blocked[iy, ix]:
                    continue
                d = math.hypot(ix - cx, iy - cy)
                key = (d, iy * width + ix, (ix, iy))
                if best is None or key < best:
                    best = key
        if best is not None:
            return best[2]
    return None


def path_length(waypoints: list[tuple[float, float]]) -> float:
    """Sum of segment lengths along a waypoint polyline."""
    total = 0.0
    for (ax, ay), (bx, by) in zip(waypoints, waypoints[1:]):
        total += math.hypot(bx - ax, by - ay)
    return total
