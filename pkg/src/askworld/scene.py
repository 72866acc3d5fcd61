"""Scene definition, loading, geometric queries, and occupancy map generation.

A scene is static: extruded convex-polygon obstacles (prisms), named points of
interest, a road graph for vehicles, spawn regions, and scalar condition tags.
Occupancy maps are produced by Monte-Carlo collision sampling over a voxel
grid, projected to 2D, and cleaned with a fixed filter pipeline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
from scipy import ndimage

from . import geometry
from .seeding import column_rng

if TYPE_CHECKING:
    from .motion import RouteGraph

# Fixed 16-label vocabulary for POI categories.
POI_CATEGORIES = (
    "store", "supermarket", "pharmacy", "cafe", "restaurant", "park",
    "plaza", "office", "bank", "school", "library", "museum", "gym",
    "hotel", "station", "clinic",
)

WEATHER_KINDS = ("clear", "rain", "fog")

# Cells beyond this are refused outright; a grid this size is a config typo.
MAX_GRID_CELLS = 100_000_000


class SceneError(Exception):
    """Base for scene loading and validation failures."""


class SceneFormatError(SceneError):
    """The file does not parse as the scene schema; message names the field."""


class SceneValidationError(SceneError):
    """A scene invariant is violated; message names the invariant."""


class OccupancyError(SceneError):
    """Occupancy generation preconditions not met."""


@dataclass(frozen=True)
class ConditionTags:
    """Scalar environment tags; no rendering is attached to them."""

    time_of_day: float = 10.0  # hours in [0, 24)
    weather: str = "clear"
    visibility_m: float = 40.0

    def validate(self) -> None:
        if not 0.0 <= self.time_of_day < 24.0:
            raise SceneValidationError("condition.time_of_day must be in [0, 24)")
        if self.weather not in WEATHER_KINDS:
            raise SceneValidationError(f"condition.weather must be one of {WEATHER_KINDS}")
        if self.visibility_m <= 0.0:
            raise SceneValidationError("condition.visibility_m must be > 0")

    def to_dict(self) -> dict:
        return {"time_of_day": self.time_of_day, "weather": self.weather, "visibility_m": self.visibility_m}


@dataclass(frozen=True)
class Poi:
    id: str
    name: str
    category: str
    position: tuple[float, float]
    approach_radius: float = 2.0


@dataclass(frozen=True)
class Prism:
    """Extruded convex polygon: footprint vertices (CCW, meters) and a z range."""

    footprint: np.ndarray  # (N, 2)
    z_min: float
    z_max: float

    def bbox(self) -> tuple[float, float, float, float]:
        return (
            float(self.footprint[:, 0].min()), float(self.footprint[:, 1].min()),
            float(self.footprint[:, 0].max()), float(self.footprint[:, 1].max()),
        )

    def edges(self) -> np.ndarray:
        """(E, 4) array of footprint edge segments [ax, ay, bx, by]."""
        nxt = np.roll(self.footprint, -1, axis=0)
        return np.hstack([self.footprint, nxt])


@dataclass(frozen=True)
class Rect:
    min_xy: tuple[float, float]
    max_xy: tuple[float, float]

    def contains(self, p) -> bool:
        return (self.min_xy[0] <= p[0] <= self.max_xy[0]) and (self.min_xy[1] <= p[1] <= self.max_xy[1])

    @property
    def size(self) -> tuple[float, float]:
        return (self.max_xy[0] - self.min_xy[0], self.max_xy[1] - self.min_xy[1])

    def as_polygon(self) -> np.ndarray:
        return geometry.rect_to_polygon(self.min_xy, self.max_xy)


@dataclass
class Scene:
    id: str
    bounds: Rect
    obstacles: list[Prism] = field(default_factory=list)
    pois: list[Poi] = field(default_factory=list)
    road_graph: "RouteGraph" = None  # type: ignore[assignment]
    spawn_regions: list[Rect] = field(default_factory=list)
    condition: ConditionTags = field(default_factory=ConditionTags)

    def poi_by_id(self, poi_id: str) -> Poi:
        for poi in self.pois:
            if poi.id == poi_id:
                return poi
        raise KeyError(f"no POI with id {poi_id!r}")

    def pois_by_name(self, name: str) -> list[Poi]:
        return [p for p in self.pois if p.name == name]

    def wall_segments(self) -> np.ndarray:
        """All obstacle footprint edges, (E, 4); used by motion and raycasts."""
        if not self.obstacles:
            return np.zeros((0, 4))
        return np.vstack([prism.edges() for prism in self.obstacles])

    def boundary_segments(self) -> np.ndarray:
        """The four bounds edges as segments, (4, 4)."""
        poly = self.bounds.as_polygon()
        nxt = np.roll(poly, -1, axis=0)
        return np.hstack([poly, nxt])

    def validate(self) -> None:
        from .motion import RouteGraph

        if self.bounds.max_xy[0] <= self.bounds.min_xy[0] or self.bounds.max_xy[1] <= self.bounds.min_xy[1]:
            raise SceneValidationError("bounds must have positive extent")
        for i, prism in enumerate(self.obstacles):
            if len(prism.footprint) < 3:
                raise SceneValidationError(f"obstacles[{i}]: footprint needs >= 3 vertices")
            if not geometry.is_convex_ccw(prism.footprint):
                raise SceneValidationError(f"obstacles[{i}]: footprint must be simple, convex, CCW")
            if prism.z_max <= prism.z_min:
                raise SceneValidationError(f"obstacles[{i}]: z_max must exceed z_min")
            for v in prism.footprint:
                if not self.bounds.contains(v):
                    raise SceneValidationError(f"obstacles[{i}]: footprint leaves scene bounds")
        seen_ids: set[str] = set()
        for poi in self.pois:
            if poi.id in seen_ids:
                raise SceneValidationError(f"POI id {poi.id!r} is not unique")
            seen_ids.add(poi.id)
            if not self.bounds.contains(poi.position):
                raise SceneValidationError(f"POI {poi.id!r} position lies outside bounds")
            if poi.approach_radius <= 0:
                raise SceneValidationError(f"POI {poi.id!r} approach_radius must be > 0")
            if poi.category not in POI_CATEGORIES:
                raise SceneValidationError(f"POI {poi.id!r} category {poi.category!r} not in the 16-label vocabulary")
        for i, region in enumerate(self.spawn_regions):
            for corner in ((region.min_xy), (region.max_xy)):
                if not self.bounds.contains(corner):
                    raise SceneValidationError(f"spawn_regions[{i}] leaves scene bounds")
            for j, prism in enumerate(self.obstacles):
                if geometry.convex_polygons_overlap(region.as_polygon(), prism.footprint):
                    raise SceneValidationError(f"spawn_regions[{i}] intersects obstacles[{j}] footprint")
        self.condition.validate()
        if self.road_graph is None:
            self.road_graph = RouteGraph()
        self.road_graph.validate()

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "bounds": {"min": list(self.bounds.min_xy), "max": list(self.bounds.max_xy)},
            "obstacles": [
                {"footprint": [[float(x), float(y)] for x, y in p.footprint], "z": [p.z_min, p.z_max]}
                for p in self.obstacles
            ],
            "pois": [
                {"id": p.id, "name": p.name, "category": p.category,
                 "pos": list(p.position), "approach_radius": p.approach_radius}
                for p in self.pois
            ],
            "road_graph": self.road_graph.to_dict() if self.road_graph is not None else {"nodes": [], "edges": []},
            "spawn_regions": [{"min": list(r.min_xy), "max": list(r.max_xy)} for r in self.spawn_regions],
            "condition": self.condition.to_dict(),
        }


def _expect(mapping: dict, key: str, kind, path: str):
    if not isinstance(mapping, dict) or key not in mapping:
        raise SceneFormatError(f"{path}: missing field {key!r}")
    value = mapping[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SceneFormatError(f"{path}.{key}: expected a number")
        return float(value)
    if not isinstance(value, kind):
        raise SceneFormatError(f"{path}.{key}: expected {kind.__name__}")
    return value


def _parse_xy(value, path: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise SceneFormatError(f"{path}: expected [x, y]")
    return (float(value[0]), float(value[1]))


def scene_from_dict(data: dict, scene_id: str | None = None) -> Scene:
    """Build and validate a Scene from its JSON-schema dict."""
    from .motion import RouteGraph

    if not isinstance(data, dict):
        raise SceneFormatError("top level: expected an object")
    bounds_raw = _expect(data, "bounds", dict, "top level")
    bounds = Rect(_parse_xy(bounds_raw.get("min"), "bounds.min"), _parse_xy(bounds_raw.get("max"), "bounds.max"))

    obstacles = []
    for i, entry in enumerate(data.get("obstacles", [])):
        footprint_raw = _expect(entry, "footprint", list, f"obstacles[{i}]")
        footprint = np.array([_parse_xy(v, f"obstacles[{i}].footprint[{j}]") for j, v in enumerate(footprint_raw)])
        z_raw = _expect(entry, "z", list, f"obstacles[{i}]")
        if len(z_raw) != 2:
            raise SceneFormatError(f"obstacles[{i}].z: expected [z_min, z_max]")
        obstacles.append(Prism(footprint=footprint, z_min=float(z_raw[0]), z_max=float(z_raw[1])))

    pois = []
    for i, entry in enumerate(data.get("pois", [])):
        pois.append(Poi(
            id=_expect(entry, "id", str, f"pois[{i}]"),
            name=_expect(entry, "name", str, f"pois[{i}]"),
            category=_expect(entry, "category", str, f"pois[{i}]"),
            position=_parse_xy(entry.get("pos"), f"pois[{i}].pos"),
            approach_radius=_expect(entry, "approach_radius", float, f"pois[{i}]"),
        ))

    spawn_regions = []
    for i, entry in enumerate(data.get("spawn_regions", [])):
        spawn_regions.append(Rect(
            _parse_xy(entry.get("min"), f"spawn_regions[{i}].min"),
            _parse_xy(entry.get("max"), f"spawn_regions[{i}].max"),
        ))

    condition_raw = data.get("condition", {})
    condition = ConditionTags(
        time_of_day=float(condition_raw.get("time_of_day", 10.0)),
        weather=condition_raw.get("weather", "clear"),
        visibility_m=float(condition_raw.get("visibility_m", 40.0)),
    )

    scene = Scene(
        id=scene_id or _expect(data, "id", str, "top level"),
        bounds=bounds,
        obstacles=obstacles,
        pois=pois,
        road_graph=RouteGraph.from_dict(data.get("road_graph", {})),
        spawn_regions=spawn_regions,
        condition=condition,
    )
    scene.validate()
    return scene


def load_scene(path: str | Path) -> Scene:
    """Load a scene JSON file, raising parse errors with line/field context."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SceneFormatError(f"cannot read scene file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneFormatError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return scene_from_dict(data)


def point_in_obstacle(scene: Scene, p) -> bool:
    """True iff the 3D point lies inside some prism.

    Footprint edges count as inside; the z interval is half-open [z_min, z_max).
    """
    x, y, z = float(p[0]), float(p[1]), float(p[2])
    for prism in scene.obstacles:
        if prism.z_min <= z < prism.z_max and geometry.point_in_convex_polygon((x, y), prism.footprint):
            return True
    return False


@dataclass(frozen=True)
class OccupancyConfig:
    resolution: float = 0.25       # meters per 2D cell
    voxel_size: float = 0.25       # target z-slab height (band split into equal slabs)
    z_band: tuple[float, float] = (0.1, 2.0)
    samples_per_voxel: int = 64
    rounds: int = 4
    threshold: float = 0.5
    min_component_cells: int = 4
    seed: int = 0

    def validate(self) -> None:
        if self.voxel_size <= 0 or self.resolution <= 0:
            raise OccupancyError("voxel_size and resolution must be > 0")
        if self.samples_per_voxel < 1 or self.rounds < 1:
            raise OccupancyError("samples_per_voxel and rounds must be >= 1")
        if self.z_band[1] <= self.z_band[0]:
            raise OccupancyError("empty z-band")


@dataclass(frozen=True)
class OccupancyGrid:
    origin: tuple[float, float]    # world position of cell (0, 0) corner
    resolution: float
    width: int                     # cells along x
    height: int                    # cells along y
    soft: np.ndarray               # (height, width) float in [0, 1]
    binary: np.ndarray             # (height, width) bool, True = occupied
    threshold: float = 0.5

    def world_to_cell(self, p) -> tuple[int, int]:
        ix = int(math.floor((p[0] - self.origin[0]) / self.resolution))
        iy = int(math.floor((p[1] - self.origin[1]) / self.resolution))
        return ix, iy

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return (
            self.origin[0] + (ix + 0.5) * self.resolution,
            self.origin[1] + (iy + 0.5) * self.resolution,
        )

    def in_grid(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height


def _grid_shape(scene: Scene, resolution: float) -> tuple[int, int]:
    width = max(1, int(math.ceil((scene.bounds.max_xy[0] - scene.bounds.min_xy[0]) / resolution - 1e-9)))
    height = max(1, int(math.ceil((scene.bounds.max_xy[1] - scene.bounds.min_xy[1]) / resolution - 1e-9)))
    return width, height


def sample_soft_grid(scene: Scene, cfg: OccupancyConfig) -> np.ndarray:
    """Raw Monte-Carlo soft occupancy, before any filtering.

    Per 2D cell: the z band is split into equal slabs; each slab is sampled
    samples_per_voxel times per round with jittered-stratified xy positions
    (uniform marginally, far lower variance than plain sampling) and uniform z.
    The cell's value is the max over slabs of the round-averaged inside
    fraction. Columns that cannot intersect any prism are exactly zero.
    """
    cfg.validate()
    width, height = _grid_shape(scene, cfg.resolution)
    if width * height > MAX_GRID_CELLS:
        raise OccupancyError(f"grid would have {width * height} cells (> {MAX_GRID_CELLS})")
    soft = np.zeros((height, width), dtype=float)
    if not scene.obstacles:
        return soft

    z0, z1 = cfg.z_band
    n_z = max(1, round((z1 - z0) / cfg.voxel_size))
    slab_h = (z1 - z0) / n_z
    n = cfg.samples_per_voxel
    k = int(math.isqrt(n))
    n_jitter = k * k
    ox, oy = scene.bounds.min_xy

    # restrict sampling to columns that overlap some prism bbox
    bboxes = [p.bbox() for p in scene.obstacles]
    candidate = np.zeros((height, width), dtype=bool)
    col_prisms: dict[tuple[int, int], list[Prism]] = {}
    for prism, (bx0, by0, bx1, by1) in zip(scene.obstacles, bboxes):
        if prism.z_max <= z0 or prism.z_min >= z1:
            continue
        ix0 = max(0, int(math.floor((bx0 - ox) / cfg.resolution)))
        iy0 = max(0, int(math.floor((by0 - oy) / cfg.resolution)))
        ix1 = min(width - 1, int(math.floor((bx1 - ox) / cfg.resolution)))
        iy1 = min(height - 1, int(math.floor((by1 - oy) / cfg.resolution)))
        for iy in range(iy0, iy1 + 1):
            for ix in range(ix0, ix1 + 1):
                candidate[iy, ix] = True
                col_prisms.setdefault((ix, iy), []).append(prism)

    slab_lo = z0 + slab_h * np.arange(n_z)
    for (ix, iy), prisms in sorted(col_prisms.items(), key=lambda item: item[0][1] * width + item[0][0]):
        rng = column_rng(cfg.seed, iy * width + ix)
        x_lo = ox + ix * cfg.resolution
        y_lo = oy + iy * cfg.resolution
        # one draw block per column, fixed order: jittered xy, plain xy, z
        u = rng.random((cfg.rounds, n_z, n_jitter, 2))
        strata = np.stack(np.meshgrid(np.arange(k), np.arange(k), indexing="ij"), axis=-1).reshape(-1, 2)
        xy = (strata[None, None, :, :] + u) / k
        if n_jitter < n:
            xy = np.concatenate([xy, rng.random((cfg.rounds, n_z, n - n_jitter, 2))], axis=2)
        xs = x_lo + xy[..., 0] * cfg.resolution
        ys = y_lo + xy[..., 1] * cfg.resolution
        zs = slab_lo[None, :, None] + rng.random((cfg.rounds, n_z, n)) * slab_h

        inside = np.zeros(xs.shape, dtype=bool)
        pts = np.stack([xs.ravel(), ys.ravel()], axis=1)
        for prism in prisms:
            in_xy = geometry.points_in_convex_polygon(pts, prism.footprint).reshape(xs.shape)
            inside |= in_xy & (zs >= prism.z_min) & (zs < prism.z_max)
        per_slab = inside.mean(axis=(0, 2))  # average over rounds and samples
        soft[iy, ix] = float(per_slab.max())
    return soft


def generate_occupancy(scene: Scene, cfg: OccupancyConfig | None = None) -> OccupancyGrid:
    """Monte-Carlo occupancy with the fixed cleanup pipeline.

    Pipeline order: 3x3 median filter, 3x3 grayscale closing, removal of
    occupied connected components (8-connectivity) smaller than
    cfg.min_component_cells. Cells beyond the map border are treated as free.
    Deterministic for a given (scene, cfg) including cfg.seed.
    """
    cfg = cfg or OccupancyConfig()
    soft = sample_soft_grid(scene, cfg)
    soft = ndimage.median_filter(soft, size=3, mode="constant", cval=0.0)
    soft = ndimage.grey_closing(soft, size=(3, 3), mode="constant", cval=0.0)
    mask = soft >= cfg.threshold
    labels, n_labels = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    if n_labels:
        sizes = ndimage.sum_labels(np.ones_like(soft), labels, index=np.arange(1, n_labels + 1))
        for label_idx, size in enumerate(sizes, start=1):
            if size < cfg.min_component_cells:
                soft[labels == label_idx] = 0.0
    binary = soft >= cfg.threshold
    width, height = _grid_shape(scene, cfg.resolution)
    return OccupancyGrid(
        origin=(float(scene.bounds.min_xy[0]), float(scene.bounds.min_xy[1])),
        resolution=cfg.resolution,
        width=width,
        height=height,
        soft=soft,
        binary=binary,
        threshold=cfg.threshold,
    )


def export_heatmap(grid: OccupancyGrid, path: str | Path, mode: str = "heatmap") -> Path:
    """Write the grid as binary PGM (P5) plus a JSON sidecar.

    heatmap mode stores round(soft * 255); binary mode stores {0, 255} with
    255 = occupied. Row 0 of the image is the minimum-y row of the grid.
    Returns the sidecar path.
    """
    if mode not in ("heatmap", "binary"):
        raise ValueError(f"mode must be 'heatmap' or 'binary', got {mode!r}")
    path = Path(path)
    if mode == "heatmap":
        pixels = np.rint(grid.soft * 255.0).astype(np.uint8)
    else:
        pixels = np.where(grid.binary, 255, 0).astype(np.uint8)
    header = f"P5\n{grid.width} {grid.height}\n255\n".encode("ascii")
    path.write_bytes(header + pixels.tobytes())
    sidecar = path.with_suffix(".json")
    sidecar.write_text(json.dumps({
        "origin": [grid.origin[0], grid.origin[1]],
        "resolution": grid.resolution,
        "width": grid.width,
        "height": grid.height,
        "threshold": grid.threshold,
        "mode": mode,
        "row0_y": "min",
    }, sort_keys=True), encoding="utf-8")
    return sidecar


def _rect_obstacle(x0: float, y0: float, x1: float, y1: float, z0: float, z1: float) -> dict:
    return {"footprint": [[x0, y0], [x1, y0], [x1, y1], [x0, y1]], "z": [z0, z1]}


# Built-in scenes used by the bundled benchmarks and the CLI.
_BUILTIN_SCENES: dict[str, dict] = {
    # Two stores share one name on opposite sides of a twin-building court;
    # the briefing never says which, so only asking removes the coin flip.
    "duplicate-stores": {
        "id": "duplicate-stores",
        "bounds": {"min": [0, 0], "max": [60, 40]},
        "obstacles": [
            _rect_obstacle(10, 14, 22, 26, 0, 10),
            _rect_obstacle(38, 14, 50, 26, 0, 10),
        ],
        "pois": [
            {"id": "store-a-w", "name": "Store A", "category": "store", "pos": [8.5, 20], "approach_radius": 2.0},
            {"id": "store-a-e", "name": "Store A", "category": "store", "pos": [51.5, 20], "approach_radius": 2.0},
            {"id": "cafe-1", "name": "Corner Cafe", "category": "cafe", "pos": [30, 36], "approach_radius": 2.0},
            {"id": "park-1", "name": "Linden Court", "category": "park", "pos": [5, 36], "approach_radius": 2.0},
            {"id": "plaza-1", "name": "Old Plaza", "category": "plaza", "pos": [55, 36], "approach_radius": 2.0},
            {"id": "office-1", "name": "City Office", "category": "office", "pos": [18, 6], "approach_radius": 2.0},
            {"id": "bank-1", "name": "Cedar Bank", "category": "bank", "pos": [42, 6], "approach_radius": 2.0},
        ],
        "spawn_regions": [
            {"min": [1, 1], "max": [59, 12]},
            {"min": [1, 28], "max": [59, 39]},
            {"min": [23, 13], "max": [37, 27]},
        ],
        "condition": {"time_of_day": 10.0, "weather": "clear", "visibility_m": 40.0},
    },
    # Three axis-aligned blocks whose footprints land exactly on 0.25 m grid
    # lines, so the analytic occupancy mask has no partial cells.
    "three-buildings": {
        "id": "three-buildings",
        "bounds": {"min": [0, 0], "max": [40, 30]},
        "obstacles": [
            _rect_obstacle(4, 4, 14, 12, 0, 8),
            _rect_obstacle(20, 4, 32, 12, 0, 8),
            _rect_obstacle(8, 18, 28, 24, 0, 8),
        ],
        "pois": [
            {"id": "cafe-1", "name": "Gable Cafe", "category": "cafe", "pos": [36, 27], "approach_radius": 2.0},
        ],
        "spawn_regions": [{"min": [33, 1], "max": [39, 29]}],
        "condition": {"time_of_day": 10.0, "weather": "clear", "visibility_m": 40.0},
    },
    # A rectangular road loop around a single block; pedestrians walking to
    # the north POIs cross the road and force vehicle yields.
    "vehicle-loop": {
        "id": "vehicle-loop",
        "bounds": {"min": [0, 0], "max": [50, 30]},
        "obstacles": [_rect_obstacle(20, 12, 30, 18, 0, 6)],
        "pois": [
            {"id": "cafe-1", "name": "Canal Cafe", "category": "cafe", "pos": [10, 27], "approach_radius": 2.0},
            {"id": "store-1", "name": "Corner Store", "category": "store", "pos": [40, 27], "approach_radius": 2.0},
        ],
        "road_graph": {
            "nodes": [
                {"id": "n0", "pos": [5, 5]}, {"id": "n1", "pos": [45, 5]},
                {"id": "n2", "pos": [45, 25]}, {"id": "n3", "pos": [5, 25]},
            ],
            "edges": [
                {"id": "e0", "from": "n0", "to": "n1"}, {"id": "e1", "from": "n1", "to": "n2"},
                {"id": "e2", "from": "n2", "to": "n3"}, {"id": "e3", "from": "n3", "to": "n0"},
            ],
        },
        "spawn_regions": [{"min": [8, 7], "max": [42, 10]}],
        "condition": {"time_of_day": 10.0, "weather": "clear", "visibility_m": 40.0},
    },
}


def builtin_scene_names() -> tuple[str, ...]:
    return tuple(sorted(_BUILTIN_SCENES))


def builtin_scene(name: str) -> Scene:
    """One of the bundled scenes, parsed and validated like a loaded file."""
    if name not in _BUILTIN_SCENES:
        raise KeyError(f"unknown built-in scene {name!r}; have {builtin_scene_names()}")
    return scene_from_dict(json.loads(json.dumps(_BUILTIN_SCENES[name])))


def load_scene_or_builtin(ref: str | Path) -> Scene:
    """Treat ref as a built-in name first, then as a JSON file path."""
    if isinstance(ref, str) and ref in _BUILTIN_SCENES:
        return builtin_scene(ref)
    return load_scene(ref)


def load_pgm(path: str | Path) -> tuple[np.ndarray, dict | None]:
    """Read a P5 PGM written by export_heatmap; returns (pixels, sidecar)."""
    path = Path(path)
    raw = path.read_bytes()
    if not raw.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    parts = raw.split(b"\n", 3)
    if len(parts) < 4:
        raise ValueError(f"{path}: truncated PGM header")
    width, height = (int(tok) for tok in parts[1].split())
    pixels = np.frombuffer(parts[3][: width * height], dtype=np.uint8).reshape(height, width)
    sidecar_path = path.with_suffix(".json")
    sidecar = json.loads(sidecar_path.read_text(encoding="utf-8")) if sidecar_path.exists() else None
    return pixels, sidecar
