"""Discrete-time grid robot: raycast sensing, movement, success rules.

The robot pose is a continuous (row, col) position in cell units plus a
heading in radians; moves advance 0.25 m (5 cells) along the heading and
turns rotate 30 degrees, so headings stay on a 12-spoke wheel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import gridmap
from ._kernels import raycast, supercover_blocked

FORWARD_CELLS = 5.0  # 0.25 m at 0.05 m/cell
TURN_RADIANS = math.pi / 6.0  # 30 degrees
DEFAULT_MAX_STEPS = 500


class Action(str, Enum):
    MOVE_FORWARD = "move_forward"
    TURN_LEFT = "turn_left"
    TURN_RIGHT = "turn_right"
    STOP = "stop"


RUNNING = "running"
SUCCESS = "success"
FAILURE = "failure"


@dataclass(frozen=True)
class SensorConfig:
    hfov_deg: float = 79.0
    ray_count: int = 160
    max_range_m: float = 5.0
    semantic_noise_rate: float = 0.0


@dataclass(frozen=True)
class RobotState:
    pos_r: float
    pos_c: float
    heading: float  # radians in [0, 2*pi)
    steps_taken: int = 0
    stopped: bool = False

    @property
    def cell(self) -> tuple[int, int]:
        return int(math.floor(self.pos_r)), int(math.floor(self.pos_c))

    @classmethod
    def at_cell(cls, cell: tuple[int, int], heading: float) -> "RobotState":
        return cls(pos_r=cell[0] + 0.5, pos_c=cell[1] + 0.5, heading=heading % (2 * math.pi))


@dataclass
class StepOutcome:
    state: RobotState
    collision: bool
    grid: gridmap.LabelMapGrid
    status: str  # RUNNING / SUCCESS / FAILURE
    failure_reason: str | None = None


def observe(
    plan,
    state: RobotState,
    cfg: SensorConfig,
    grid: gridmap.LabelMapGrid,
    rng: np.random.Generator | None = None,
) -> gridmap.LabelMapGrid:
    """Cast the sensor fan and fuse the hits into the robot's map in place.

    Cells crossed before a hit become Free, the first occupied cell on each
    ray becomes Occupied with its ground-truth category (optionally
    corrupted), and every touched cell loses its predicted flag: direct
    observation always wins.
    """
    occ = plan.grid.obstacle == gridmap.OCCUPIED
    n = cfg.ray_count
    if cfg.semantic_noise_rate > 0.0:
        if rng is None:
            raise ValueError("semantic noise requires an rng")
        noise_u = rng.random(n)
        noise_cat = rng.integers(0, max(plan.n_categories - 1, 1), size=n).astype(np.int16)
    else:
        noise_u = np.ones(n)
        noise_cat = np.zeros(n, dtype=np.int16)
    raycast(
        occ,
        plan.grid.semantic,
        state.pos_r,
        state.pos_c,
        state.heading,
        math.radians(cfg.hfov_deg),
        n,
        cfg.max_range_m / grid.cell_size,
        grid.obstacle,
        grid.semantic,
        grid.explored,
        grid.predicted,
        noise_u,
        noise_cat,
        cfg.semantic_noise_rate,
        plan.n_categories,
    )
    return grid


def step(
    plan,
    state: RobotState,
    action: Action,
    grid: gridmap.LabelMapGrid,
    episode,
) -> StepOutcome:
    """Apply one action. Forward moves blocked by any occupied cell along
    the 5-cell path leave the pose unchanged and raise the collision flag."""
    if state.stopped:
        raise RuntimeError("robot already issued Stop")
    collision = False
    new_state = state
    occ = plan.grid.obstacle == gridmap.OCCUPIED

    if action is Action.MOVE_FORWARD:
        tr = state.pos_r + FORWARD_CELLS * math.sin(state.heading)
        tc = state.pos_c + FORWARD_CELLS * math.cos(state.heading)
        h, w = occ.shape
        out_of_bounds = not (0.0 <= tr < h and 0.0 <= tc < w)
        if out_of_bounds or supercover_blocked(occ, state.pos_r, state.pos_c, tr, tc):
            collision = True
        else:
            new_state = replace(state, pos_r=tr, pos_c=tc)
            grid.robot_trace.append(new_state.cell)
    elif action is Action.TURN_LEFT:
        new_state = replace(state, heading=(state.heading + TURN_RADIANS) % (2 * math.pi))
    elif action is Action.TURN_RIGHT:
        new_state = replace(state, heading=(state.heading - TURN_RADIANS) % (2 * math.pi))
    elif action is Action.STOP:
        new_state = replace(state, stopped=True)
    else:
        raise ValueError(f"unknown action {action}")

    new_state = replace(new_state, steps_taken=state.steps_taken + 1)

    status = RUNNING
    reason = None
    if action is Action.STOP:
        if check_success(plan, [new_state], episode):
            status = SUCCESS
        else:
            status = FAILURE
            reason = "stopped_outside_radius"
    elif new_state.steps_taken >= episode.max_steps:
        status = FAILURE
        reason = "max_steps"
    return StepOutcome(state=new_state, collision=collision, grid=grid, status=status, failure_reason=reason)


def goal_cells(plan, goal_category: int) -> np.ndarray:
    """(K, 2) array of cells carrying the goal category in ground truth."""
    rows, cols = np.nonzero(plan.grid.semantic == goal_category)
    return np.stack([rows, cols], axis=1)


def check_success(plan, states, episode) -> bool:
    """True iff any stopped robot's cell center lies within the success
    radius of the nearest goal-category cell center."""
    cells = goal_cells(plan, episode.goal_category)
    if cells.size == 0:
        return False
    cell_size = plan.grid.cell_size
    for st in states:
        if not st.stopped:
            continue
        cr, cc = st.cell
        d2 = (cells[:, 0] - cr) ** 2 + (cells[:, 1] - cc) ** 2
        if math.sqrt(float(d2.min())) * cell_size <= episode.success_radius:
            return True
    return False
