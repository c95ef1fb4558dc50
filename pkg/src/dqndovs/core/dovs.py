"""Dynamic Object Velocity Space: grid classification and state assembly.

Each of the 20x20 candidate velocities is followed along its constant-(v, w)
arc for the time horizon, together with every visible obstacle along its own
estimated arc. A candidate is unsafe when the robot point enters an enlarged
obstacle disc at any sample time. Inadmissible cells are marked unsafe too,
so the grid stays a single +/-1 channel.
"""

import logging
import math

import numpy as np

from dqndovs.core.kinematics import admissible, arc_positions, wrap_angle
from dqndovs.core.models import (
    GRID_SIZE,
    STATE_SIZE,
    KinodynamicLimits,
    ObstacleEstimate,
    Pose,
    RobotSituation,
    StateVector,
    Velocity,
    VelocityGrid,
    World,
)

logger = logging.getLogger("dqndovs.dovs")

DEFAULT_HORIZON = 3.0
DEFAULT_FINE_DT = 0.02
DEFAULT_D_NORM = 11.4


def cell_to_velocity(i: int, j: int, v_max: float, w_max: float) -> Velocity:
    """Velocity at the center of grid cell (row i, column j).

    Raises:
        IndexError: If either index is outside 0..19.
    """
    if not (0 <= i < GRID_SIZE and 0 <= j < GRID_SIZE):
        raise IndexError(f"cell ({i}, {j}) outside the {GRID_SIZE}x{GRID_SIZE} grid")
    v = v_max * (2 * GRID_SIZE - 1 - 2 * i) / (2 * GRID_SIZE)
    w = w_max * (2 * j - (GRID_SIZE - 1)) / GRID_SIZE
    return Velocity(v, w)


def velocity_to_cell(vel: Velocity, v_max: float, w_max: float) -> tuple[int, int]:
    """Grid cell containing a velocity; out-of-range values clamp to the border."""
    i = math.floor((1.0 - vel.v / v_max) * GRID_SIZE)
    j = math.floor((vel.w + w_max) / (2.0 * w_max) * GRID_SIZE)
    return min(max(i, 0), GRID_SIZE - 1), min(max(j, 0), GRID_SIZE - 1)


def grid_velocities(v_max: float, w_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Cell-center velocities as two 20x20 arrays (v, w)."""
    rows = np.arange(GRID_SIZE)
    v = v_max * (2 * GRID_SIZE - 1 - 2 * rows) / (2 * GRID_SIZE)
    w = w_max * (2 * rows - (GRID_SIZE - 1)) / GRID_SIZE
    return np.repeat(v[:, None], GRID_SIZE, axis=1), np.repeat(w[None, :], GRID_SIZE, axis=0)


def admissible_mask(lim: KinodynamicLimits) -> np.ndarray:
    """Boolean 20x20 mask of cells whose center lies in the kinematic triangle."""
    mask = np.zeros((GRID_SIZE, GRID_SIZE), dtype=bool)
    for i in range(GRID_SIZE):
        for j in range(GRID_SIZE):
            mask[i, j] = admissible(cell_to_velocity(i, j, lim.v_max, lim.w_max), lim)
    return mask


def sample_times(horizon: float, fine_dt: float) -> np.ndarray:
    """Sample instants fine_dt, 2*fine_dt, ... up to the horizon."""
    count = int(math.floor(horizon / fine_dt + 1e-9))
    return fine_dt * np.arange(1, count + 1, dtype=np.float64)


def to_robot_frame(robot: Pose, obs: ObstacleEstimate) -> ObstacleEstimate:
    """Express a world-frame estimate in the robot frame."""
    if obs.frame == "robot":
        return obs
    c, s = math.cos(robot.theta), math.sin(robot.theta)
    dx, dy = obs.x - robot.x, obs.y - robot.y
    return ObstacleEstimate(
        x=c * dx + s * dy,
        y=-s * dx + c * dy,
        radius=obs.radius,
        heading=wrap_angle(obs.heading - robot.theta),
        v=obs.v,
        w=obs.w,
        visible=obs.visible,
        frame="robot",
    )


def _first_collision(
    robot_x: np.ndarray,
    robot_y: np.ndarray,
    obs: ObstacleEstimate,
    times: np.ndarray,
) -> np.ndarray:
    """Earliest sample time inside the obstacle disc, per candidate (inf if none)."""
    ox, oy = arc_positions(obs.x, obs.y, obs.heading, obs.v, obs.w, times)
    inside = (robot_x - ox) ** 2 + (robot_y - oy) ** 2 < obs.radius * obs.radius
    hit = inside.any(axis=-1)
    first = np.argmax(inside, axis=-1)
    return np.where(hit, times[first], np.inf)


def velocity_unsafe(
    cand: Velocity,
    robot: Pose,
    obs: ObstacleEstimate,
    horizon: float = DEFAULT_HORIZON,
    fine_dt: float = DEFAULT_FINE_DT,
) -> float | None:
    """Time of the first sampled collision for one candidate, or None."""
    rel = to_robot_frame(robot, obs)
    times = sample_times(horizon, fine_dt)
    rx, ry = arc_positions(0.0, 0.0, 0.0, cand.v, cand.w, times)
    t = float(_first_collision(rx, ry, rel, times))
    return None if math.isinf(t) else t


def build_velocity_grid(
    robot: Pose,
    cur: Velocity,
    obstacles: list[ObstacleEstimate],
    lim: KinodynamicLimits,
    horizon: float = DEFAULT_HORIZON,
    fine_dt: float = DEFAULT_FINE_DT,
) -> VelocityGrid:
    """Classify every cell center as free (+1) or unsafe/inadmissible (-1).

    ``cur`` does not influence the classification; it is accepted so callers
    pass the full robot state. Occluded estimates are skipped.
    """
    times = sample_times(horizon, fine_dt)
    v, w = grid_velocities(lim.v_max, lim.w_max)
    rx, ry = arc_positions(0.0, 0.0, 0.0, v, w, times)

    ttc = np.full((GRID_SIZE, GRID_SIZE), np.inf)
    for obs in obstacles:
        if not obs.visible:
            continue
        ttc = np.minimum(ttc, _first_collision(rx, ry, to_robot_frame(robot, obs), times))

    free = admissible_mask(lim) & np.isinf(ttc)
    cells = np.where(free, 1, -1).astype(np.int8)
    return VelocityGrid(cells=cells, v_max=lim.v_max, w_max=lim.w_max, time_to_collision=ttc)


def _clamp_unit(x: float) -> float:
    return min(max(x, -1.0), 1.0)


def robot_situation(
    world: World,
    estimates: list[ObstacleEstimate],
    lim: KinodynamicLimits,
    d_norm: float = DEFAULT_D_NORM,
) -> RobotSituation:
    """Normalized goal, motion and closest-obstacle variables.

    Obstacle boundary distance uses the enlarged radius, so it is the gap
    between the robot disc and the obstacle disc as the tracker sees it.
    """
    robot = world.robot
    gx, gy = world.goal[0] - robot.x, world.goal[1] - robot.y
    goal_bearing = wrap_angle(math.atan2(gy, gx) - robot.theta)

    closest = None
    closest_gap = math.inf
    for obs in estimates:
        if not obs.visible:
            continue
        rel = to_robot_frame(robot, obs)
        gap = math.hypot(rel.x, rel.y) - rel.radius
        if gap < closest_gap:
            closest, closest_gap = rel, gap

    if closest is None:
        obstacle = (1.0, 0.0, 0.0, 0.0)
    else:
        obstacle = (
            _clamp_unit(closest_gap / d_norm),
            math.atan2(closest.y, closest.x) / math.pi,
            _clamp_unit(closest.v / lim.v_max),
            closest.heading / math.pi,
        )

    return RobotSituation(
        goal_distance=_clamp_unit(math.hypot(gx, gy) / d_norm),
        goal_bearing=goal_bearing / math.pi,
        linear_velocity=_clamp_unit(world.velocity.v / lim.v_max),
        angular_velocity=_clamp_unit(world.velocity.w / lim.w_max),
        obstacle_distance=obstacle[0],
        obstacle_bearing=obstacle[1],
        obstacle_speed=obstacle[2],
        obstacle_heading=obstacle[3],
    )


def build_state_vector(grid: VelocityGrid, sit: RobotSituation) -> StateVector:
    """Concatenate the row-major grid and the 8 situation scalars."""
    values = np.empty(STATE_SIZE, dtype=np.float64)
    values[: GRID_SIZE * GRID_SIZE] = grid.cells.reshape(-1)
    values[GRID_SIZE * GRID_SIZE :] = sit.as_array()
    return StateVector(values)


def grid_to_csv(grid: VelocityGrid) -> str:
    """20 lines of 20 comma-separated +/-1 values, row 0 = highest v."""
    return "\n".join(",".join(str(int(c)) for c in row) for row in grid.cells) + "\n"


def grid_to_pgm(grid: VelocityGrid, cell_pixels: int = 8) -> bytes:
    """Binary portable graymap: free cells white, unsafe cells black."""
    image = np.where(grid.cells > 0, 255, 0).astype(np.uint8)
    image = np.kron(image, np.ones((cell_pixels, cell_pixels), dtype=np.uint8))
    height, width = image.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    return header + image.tobytes()


def ttc_to_csv(grid: VelocityGrid) -> str:
    """Earliest sampled collision time per cell, two decimals; ``inf`` when free."""
    if grid.time_to_collision is None:
        raise ValueError("grid carries no time-to-collision layer")
    return "\n".join(
        ",".join("inf" if np.isinf(t) else f"{t:.2f}" for t in row) for row in grid.time_to_collision
    ) + "\n"
