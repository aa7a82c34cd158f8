"""Procedural indoor floor plans and navigation episodes.

BSP room splitting with one door per split wall guarantees a connected
free space by construction; furniture placement re-checks connectivity
after every piece so a cluttered room can never seal off a region.
Everything is a pure function of (spec, seed).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import gridmap
from .gridmap import FREE, OCCUPIED, LabelMapGrid

_CROSS = ndimage.generate_binary_structure(2, 1)  # 4-connectivity


class InfeasibleScene(ValueError):
    """Raised when a spec cannot be realized after the retry budget."""


@dataclass(frozen=True)
class SceneSpec:
    seed: int
    height: int = 240
    width: int = 240
    cell_size: float = 0.05
    room_count: tuple[int, int] = (4, 7)
    min_room_side: int = 36
    door_width: int = 9
    furniture_density: float = 0.12
    n_categories: int = 10
    object_side: tuple[int, int] = (4, 9)  # sampled footprint side range

    def __post_init__(self):
        if self.room_count[0] < 2:
            raise ValueError("room_count must allow at least 2 rooms")
        if self.min_room_side < self.door_width + 4:
            raise ValueError("min_room_side too small for the door width")


@dataclass(frozen=True)
class Rect:
    row0: int
    col0: int
    height: int
    width: int

    @property
    def area(self) -> int:
        return self.height * self.width


@dataclass(frozen=True)
class ObjectInstance:
    category: int
    row0: int
    col0: int
    height: int
    width: int


@dataclass
class FloorPlan:
    grid: LabelMapGrid  # fully explored ground truth
    rooms: list[Rect]
    objects: list[ObjectInstance]
    doors: list[tuple[int, int]]  # carved door cells
    seed: int
    n_categories: int

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "n_categories": self.n_categories,
            "cell_size": self.grid.cell_size,
            "rooms": [[r.row0, r.col0, r.height, r.width] for r in self.rooms],
            "objects": [
                [o.category, o.row0, o.col0, o.height, o.width] for o in self.objects
            ],
        }


@dataclass(frozen=True)
class EpisodeSpec:
    scene_seed: int
    episode_seed: int
    goal_category: int
    starts: tuple  # ((row, col, heading_rad), ...) one per robot
    robot_count: int = 1
    success_radius: float = 0.2  # meters
    max_steps: int = 500

    def to_json(self) -> dict:
        return {
            "scene_seed": self.scene_seed,
            "episode_seed": self.episode_seed,
            "goal_category": self.goal_category,
            "starts": [list(s) for s in self.starts],
            "robot_count": self.robot_count,
            "success_radius": self.success_radius,
            "max_steps": self.max_steps,
        }


def generate_scene(spec: SceneSpec, max_attempts: int = 32) -> FloorPlan:
    """Deterministically build a floor plan; retries internally on the rare
    infeasible draw and rejects after `max_attempts`."""
    for attempt in range(max_attempts):
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, attempt]))
        try:
            return _build_plan(spec, rng)
        except InfeasibleScene:
            continue
    raise InfeasibleScene(f"scene seed {spec.seed} infeasible after {max_attempts} tries")


def _build_plan(spec: SceneSpec, rng: np.random.Generator) -> FloorPlan:
    h, w = spec.height, spec.width
    obstacle = np.full((h, w), FREE, dtype=np.uint8)
    obstacle[0, :] = OCCUPIED
    obstacle[-1, :] = OCCUPIED
    obstacle[:, 0] = OCCUPIED
    obstacle[:, -1] = OCCUPIED

    interior = Rect(1, 1, h - 2, w - 2)
    leaves, splits = _bsp_split(interior, spec, rng)
    for axis, line, rect in splits:
        if axis == 0:  # horizontal wall, spans the rect's columns
            obstacle[line, rect.col0 : rect.col0 + rect.width] = OCCUPIED
        else:
            obstacle[rect.row0 : rect.row0 + rect.height, line] = OCCUPIED

    doors = _carve_doors(obstacle, splits, spec, rng)
    if _free_components(obstacle) != 1:
        raise InfeasibleScene("disconnected after door carving")

    semantic = np.full((h, w), gridmap.NO_SEMANTIC, dtype=np.int16)
    objects = _place_furniture(obstacle, semantic, leaves, doors, spec, rng)

    grid = LabelMapGrid(
        obstacle=obstacle,
        semantic=semantic,
        explored=np.ones((h, w), dtype=bool),
        predicted=np.zeros((h, w), dtype=bool),
        cell_size=spec.cell_size,
    )
    return FloorPlan(
        grid=grid,
        rooms=leaves,
        objects=objects,
        doors=doors,
        seed=spec.seed,
        n_categories=spec.n_categories,
    )


def _bsp_split(interior: Rect, spec: SceneSpec, rng) -> tuple[list[Rect], list]:
    lo, hi = spec.room_count
    target = int(rng.integers(lo, hi + 1))
    mside = spec.min_room_side
    leaves = [interior]
    splits = []
    while len(leaves) < target:
        candidates = [
            i
            for i, r in enumerate(leaves)
            if max(r.height, r.width) >= 2 * mside + 1
        ]
        if not candidates:
            break
        idx = max(candidates, key=lambda i: leaves[i].area)
        rect = leaves.pop(idx)
        if rect.height >= rect.width:
            off = int(rng.integers(mside, rect.height - mside))
            line = rect.row0 + off
            a = Rect(rect.row0, rect.col0, off, rect.width)
            b = Rect(line + 1, rect.col0, rect.height - off - 1, rect.width)
            splits.append((0, line, rect))
        else:
            off = int(rng.integers(mside, rect.width - mside))
            line = rect.col0 + off
            a = Rect(rect.row0, rect.col0, rect.height, off)
            b = Rect(rect.row0, line + 1, rect.height, rect.width - off - 1)
            splits.append((1, line, rect))
        leaves.extend([a, b])
    if len(leaves) < lo:
        raise InfeasibleScene("could not reach the minimum room count")
    return leaves, splits


def _carve_doors(obstacle, splits, spec: SceneSpec, rng) -> list[tuple[int, int]]:
    """One door per split wall, placed where both wall sides are open."""
    dw = spec.door_width
    doors: list[tuple[int, int]] = []
    for axis, line, rect in splits:
        if axis == 0:
            spans = range(rect.col0, rect.col0 + rect.width - dw + 1)
            valid = [
                s
                for s in spans
                if np.all(obstacle[line - 1, s : s + dw] == FREE)
                and np.all(obstacle[line + 1, s : s + dw] == FREE)
            ]
            if not valid:
                raise InfeasibleScene("no valid door position")
            s = valid[int(rng.integers(len(valid)))]
            obstacle[line, s : s + dw] = FREE
            doors.extend((line, c) for c in range(s, s + dw))
        else:
            spans = range(rect.row0, rect.row0 + rect.height - dw + 1)
            valid = [
                s
                for s in spans
                if np.all(obstacle[s : s + dw, line - 1] == FREE)
                and np.all(obstacle[s : s + dw, line + 1] == FREE)
            ]
            if not valid:
                raise InfeasibleScene("no valid door position")
            s = valid[int(rng.integers(len(valid)))]
            obstacle[s : s + dw, line] = FREE
            doors.extend((r, line) for r in range(s, s + dw))
    return doors


def _free_components(obstacle) -> int:
    _, count = ndimage.label(obstacle == FREE, structure=_CROSS)
    return count


def _place_furniture(obstacle, semantic, rooms, doors, spec: SceneSpec, rng):
    """Axis-aligned furniture rectangles; each placement keeps free space
    connected and stays out of the door clearance zone."""
    h, w = obstacle.shape
    door_zone = np.zeros((h, w), dtype=bool)
    for r, c in doors:
        door_zone[max(r - 4, 0) : r + 5, max(c - 4, 0) : c + 5] = True

    order = rng.permutation(spec.n_categories)
    placed = 0
    objects: list[ObjectInstance] = []
    s_lo, s_hi = spec.object_side
    for room in rooms:
        budget = spec.furniture_density * room.area
        used = 0
        tries = 0
        while used < budget and tries < 96:
            tries += 1
            oh = int(rng.integers(s_lo, s_hi + 1))
            ow = int(rng.integers(s_lo, s_hi + 1))
            if room.height < oh + 2 or room.width < ow + 2:
                continue
            r0 = room.row0 + 1 + int(rng.integers(room.height - oh - 1))
            c0 = room.col0 + 1 + int(rng.integers(room.width - ow - 1))
            foot = (slice(r0, r0 + oh), slice(c0, c0 + ow))
            halo = (
                slice(max(r0 - 1, 0), min(r0 + oh + 1, h)),
                slice(max(c0 - 1, 0), min(c0 + ow + 1, w)),
            )
            if np.any(obstacle[halo] != FREE) or np.any(door_zone[foot]):
                continue
            obstacle[foot] = OCCUPIED
            if _free_components(obstacle) != 1:
                obstacle[foot] = FREE
                continue
            cat = int(order[placed % spec.n_categories])
            semantic[foot] = cat
            objects.append(ObjectInstance(cat, r0, c0, oh, ow))
            placed += 1
            used += oh * ow
    return objects


def sample_episode(
    plan: FloorPlan,
    seed: int,
    goal_category: int,
    robot_count: int = 1,
    success_radius: float | None = None,
    max_steps: int = 500,
    min_geodesic_m: float = 2.0,
) -> EpisodeSpec:
    """Uniform start pose(s) over free cells at a geodesic distance of at
    least `min_geodesic_m` from the nearest goal instance."""
    from .planner import navigation_blocked, solve_eikonal

    if robot_count < 1:
        raise ValueError("robot_count must be >= 1")
    goal_mask = plan.grid.semantic == goal_category
    if not goal_mask.any():
        raise ValueError(f"goal category {goal_category} not present in scene")
    rng = np.random.default_rng(np.random.SeedSequence([plan.seed, seed]))

    sources = np.argwhere(goal_mask)
    raw_blocked = plan.grid.obstacle == OCCUPIED
    dist = solve_eikonal(raw_blocked, sources, source_init_radius=0.5).dist
    nav_blocked = navigation_blocked(plan.grid.obstacle)

    min_cells = min_geodesic_m / plan.grid.cell_size
    ok = (
        (plan.grid.obstacle == FREE)
        & np.isfinite(dist)
        & (dist >= min_cells)
        & ~nav_blocked
    )
    cells = np.argwhere(ok)
    if len(cells) < robot_count:
        raise ValueError("no valid start cell satisfies the distance constraint")
    picks = rng.choice(len(cells), size=robot_count, replace=False)
    starts = []
    for k in np.sort(picks):
        r, c = (int(v) for v in cells[k])
        heading = float(int(rng.integers(12)) * math.pi / 6.0)
        starts.append((r, c, heading))

    if success_radius is None:
        success_radius = 0.2 if robot_count == 1 else 0.1
    return EpisodeSpec(
        scene_seed=plan.seed,
        episode_seed=seed,
        goal_category=goal_category,
        starts=tuple(starts),
        robot_count=robot_count,
        success_radius=success_radius,
        max_steps=max_steps,
    )


def save_plan(plan: FloorPlan, png_path, json_path, palette, config_hash=None) -> None:
    raster = gridmap.encode(plan.grid, "label", palette)
    text = {"config_hash": config_hash} if config_hash else None
    gridmap.save_raster_png(raster, png_path, text=text)
    sidecar = plan.to_json()
    if config_hash:
        sidecar["config_hash"] = config_hash
    with open(json_path, "w") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
        f.write("\n")
