"""Seeded 2-D world: arena, disc obstacles, sensing emulation and reward.

The arena is the square [0, size] x [0, size]. Obstacles keep the velocity
drawn at spawn for the whole episode and bounce specularly off the walls;
they never react to the robot. Worlds are treated as values: ``step_world``
returns a new World and leaves its argument untouched.
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from dqndovs.core.errors import CommandOutOfEnvelope, EpisodeFinished, SpawnFailure
from dqndovs.core.kinematics import (
    admissible,
    propagate_unicycle,
    within_envelope,
    wrap_angle,
)
from dqndovs.core.models import (
    EpisodeStatus,
    KinodynamicLimits,
    ObstacleBody,
    ObstacleEstimate,
    ObstacleKind,
    ObstacleMix,
    Pose,
    RewardParams,
    SensorConfig,
    StageConfig,
    Velocity,
    World,
)

logger = logging.getLogger("dqndovs.simulator")

MAX_SPAWN_ATTEMPTS = 10_000
COLLISION_SUBSAMPLES = 5


@dataclass(frozen=True)
class SimParams:
    """Physical constants of the simulated world."""

    arena_size: float = 8.0
    robot_radius: float = 0.18
    obstacle_radius_min: float = 0.1
    obstacle_radius_max: float = 0.3
    obstacle_v_min: float = 0.1
    obstacle_v_max: float = 0.6
    obstacle_w_max: float = 0.5
    spawn_clearance: float = 0.1
    max_steps: int = 500


def spawn_scenario(
    stage: StageConfig,
    seed: int,
    params: SimParams | None = None,
) -> World:
    """Place robot, goal and obstacles by rejection sampling.

    Raises:
        SpawnFailure: If 10,000 attempts are used up.
    """
    params = params or SimParams()
    rng = np.random.default_rng(seed)
    size = params.arena_size
    rr = params.robot_radius
    gap = params.spawn_clearance
    attempts = 0

    def draw_point(margin: float) -> tuple[float, float]:
        return (
            float(rng.uniform(margin, size - margin)),
            float(rng.uniform(margin, size - margin)),
        )

    def spend() -> None:
        nonlocal attempts
        attempts += 1
        if attempts > MAX_SPAWN_ATTEMPTS:
            raise SpawnFailure(
                f"could not place scenario after {MAX_SPAWN_ATTEMPTS} attempts "
                f"({stage.obstacle_count} obstacles)"
            )

    rx, ry = draw_point(rr + gap)
    robot = Pose(rx, ry, wrap_angle(float(rng.uniform(-math.pi, math.pi))))

    d_max = min(stage.goal_distance_max, size * math.sqrt(2.0))
    while True:
        spend()
        dist = float(rng.uniform(stage.goal_distance_min, max(d_max, stage.goal_distance_min)))
        bearing = float(rng.uniform(-math.pi, math.pi))
        gx = rx + dist * math.cos(bearing)
        gy = ry + dist * math.sin(bearing)
        margin = rr + gap
        if margin <= gx <= size - margin and margin <= gy <= size - margin:
            goal = (gx, gy)
            break

    kinds = _obstacle_kinds(stage, rng)
    obstacles: list[ObstacleBody] = []
    for kind in kinds:
        while True:
            spend()
            radius = float(rng.uniform(params.obstacle_radius_min, params.obstacle_radius_max))
            ox, oy = draw_point(radius + gap)
            if math.hypot(ox - rx, oy - ry) - radius - rr < gap:
                continue
            if math.hypot(ox - goal[0], oy - goal[1]) - radius - rr < gap:
                continue
            if any(
                math.hypot(ox - o.pose.x, oy - o.pose.y) - radius - o.radius < gap
                for o in obstacles
            ):
                continue
            break
        heading = wrap_angle(float(rng.uniform(-math.pi, math.pi)))
        if kind is ObstacleKind.dynamic:
            commanded = Velocity(
                float(rng.uniform(params.obstacle_v_min, params.obstacle_v_max)),
                float(rng.uniform(-params.obstacle_w_max, params.obstacle_w_max)),
            )
        else:
            commanded = Velocity(0.0, 0.0)
        obstacles.append(ObstacleBody(Pose(ox, oy, heading), radius, commanded, kind))

    logger.debug("Spawned scenario seed=%s after %d attempts", seed, attempts)
    return World(
        robot=robot,
        velocity=Velocity(0.0, 0.0),
        goal=goal,
        obstacles=obstacles,
        robot_radius=rr,
        arena_size=size,
        seed=seed,
    )


def _obstacle_kinds(stage: StageConfig, rng: np.random.Generator) -> list[ObstacleKind]:
    if stage.obstacle_mix is ObstacleMix.none or stage.obstacle_count <= 0:
        return []
    if stage.obstacle_mix is ObstacleMix.static:
        return [ObstacleKind.static] * stage.obstacle_count
    if stage.obstacle_mix is ObstacleMix.dynamic:
        return [ObstacleKind.dynamic] * stage.obstacle_count
    return [
        ObstacleKind.dynamic if rng.random() < stage.dynamic_fraction else ObstacleKind.static
        for _ in range(stage.obstacle_count)
    ]


def advance_obstacle(body: ObstacleBody, dt: float, arena_size: float) -> ObstacleBody:
    """Move an obstacle along its arc and reflect it off the walls."""
    pose = propagate_unicycle(body.pose, body.commanded, dt)
    x, y, theta = pose.x, pose.y, pose.theta
    lo, hi = body.radius, arena_size - body.radius
    if x < lo:
        x, theta = 2 * lo - x, math.pi - theta
    elif x > hi:
        x, theta = 2 * hi - x, math.pi - theta
    if y < lo:
        y, theta = 2 * lo - y, -theta
    elif y > hi:
        y, theta = 2 * hi - y, -theta
    return replace(body, pose=Pose(x, y, wrap_angle(theta)))


def in_collision(
    robot: Pose,
    robot_radius: float,
    obstacles: list[ObstacleBody],
    arena_size: float,
) -> bool:
    """Disc overlap with any obstacle or with a wall."""
    if (
        robot.x - robot_radius < 0.0
        or robot.y - robot_radius < 0.0
        or robot.x + robot_radius > arena_size
        or robot.y + robot_radius > arena_size
    ):
        return True
    return any(
        math.hypot(robot.x - o.pose.x, robot.y - o.pose.y) < robot_radius + o.radius
        for o in obstacles
    )


def step_world(
    world: World,
    command: Velocity,
    lim: KinodynamicLimits,
    rewards: RewardParams | None = None,
    max_steps: int = 500,
) -> tuple[World, EpisodeStatus]:
    """Advance the world by one control period under ``command``.

    Raises:
        EpisodeFinished: If the episode already ended.
        CommandOutOfEnvelope: If the command is inadmissible or not reachable
            from the current velocity within one period.
    """
    rewards = rewards or RewardParams()
    if world.status.is_terminal:
        raise EpisodeFinished(f"episode already ended ({world.status.value})")
    if not admissible(command, lim) or not within_envelope(world.velocity, command, lim):
        raise CommandOutOfEnvelope(
            f"command (v={command.v:.4f}, w={command.w:.4f}) unreachable from "
            f"(v={world.velocity.v:.4f}, w={world.velocity.w:.4f})"
        )

    size = world.arena_size
    collided = False
    for k in range(1, COLLISION_SUBSAMPLES + 1):
        frac = lim.dt * k / COLLISION_SUBSAMPLES
        robot = propagate_unicycle(world.robot, command, frac)
        obstacles = [advance_obstacle(o, frac, size) for o in world.obstacles]
        if in_collision(robot, world.robot_radius, obstacles, size):
            collided = True
            break
    robot = propagate_unicycle(world.robot, command, lim.dt)
    obstacles = [advance_obstacle(o, lim.dt, size) for o in world.obstacles]

    new_world = replace(
        world,
        robot=robot,
        velocity=command,
        obstacles=obstacles,
        step_count=world.step_count + 1,
    )
    new_world.status = episode_status(new_world, collided, rewards, max_steps)
    return new_world, new_world.status


def episode_status(
    world: World,
    collided: bool,
    rewards: RewardParams,
    max_steps: int,
) -> EpisodeStatus:
    """Outcome after a step; collision outranks success, success outranks timeout."""
    if collided:
        return EpisodeStatus.collision
    if (
        world.goal_distance < rewards.goal_distance_threshold
        and world.velocity.v < rewards.goal_speed_threshold
    ):
        return EpisodeStatus.success
    if world.step_count >= max_steps:
        return EpisodeStatus.timeout
    return EpisodeStatus.running


def _occluded(world: World, index: int) -> bool:
    """Whether the sight line from the robot to obstacle ``index`` crosses another disc."""
    target = world.obstacles[index].pose
    px, py = world.robot.x, world.robot.y
    dx, dy = target.x - px, target.y - py
    seg_len2 = dx * dx + dy * dy
    for k, other in enumerate(world.obstacles):
        if k == index:
            continue
        ox, oy = other.pose.x - px, other.pose.y - py
        t = 0.0 if seg_len2 == 0.0 else min(max((ox * dx + oy * dy) / seg_len2, 0.0), 1.0)
        cx, cy = t * dx - ox, t * dy - oy
        if cx * cx + cy * cy < other.radius * other.radius:
            return True
    return False


def sense(world: World, cfg: SensorConfig, rng: np.random.Generator) -> list[ObstacleEstimate]:
    """Emulate the obstacle tracker.

    Visible obstacles get zero-mean Gaussian noise on position, heading, linear
    and angular velocity; occluded ones are returned with ``visible=False`` and
    their true kinematics. Radii are enlarged by the robot radius.
    """
    estimates = []
    for k, body in enumerate(world.obstacles):
        visible = not (cfg.occlusion_enabled and _occluded(world, k))
        x, y, heading = body.pose.x, body.pose.y, body.pose.theta
        v, w = body.commanded.v, body.commanded.w
        if visible:
            x += cfg.position_noise_sigma * float(rng.standard_normal())
            y += cfg.position_noise_sigma * float(rng.standard_normal())
            heading = wrap_angle(heading + cfg.heading_noise_sigma * float(rng.standard_normal()))
            v += cfg.velocity_noise_sigma * float(rng.standard_normal())
            w += cfg.angular_noise_sigma * float(rng.standard_normal())
        estimates.append(
            ObstacleEstimate(
                x=x,
                y=y,
                radius=body.radius + world.robot_radius,
                heading=heading,
                v=v,
                w=w,
                visible=visible,
            )
        )
    return estimates


def obstacle_clearance(world: World) -> float:
    """Gap between the robot disc and the closest obstacle disc (inf if none)."""
    gaps = [
        math.hypot(world.robot.x - o.pose.x, world.robot.y - o.pose.y)
        - world.robot_radius
        - o.radius
        for o in world.obstacles
    ]
    return min(gaps, default=math.inf)


def safedist_term(d_obs: float, params: RewardParams | None = None) -> float:
    """Penalty for being closer than the safe distance to an obstacle."""
    params = params or RewardParams()
    if d_obs < params.safe_distance:
        return -params.safe_coefficient * abs(params.safe_distance - d_obs)
    return 0.0


def reward(
    prev_world: World,
    new_world: World,
    status: EpisodeStatus,
    params: RewardParams | None = None,
) -> float:
    """Terminal payoff, or progress toward the goal plus the proximity penalty.

    Timeouts take the non-terminal branch.
    """
    params = params or RewardParams()
    if status is EpisodeStatus.success:
        return params.r_goal
    if status is EpisodeStatus.collision:
        return params.r_collision
    delta = new_world.goal_distance - prev_world.goal_distance
    d_obs = max(obstacle_clearance(new_world), 0.0)
    return -params.r_dist * delta + safedist_term(d_obs, params)


def world_to_dict(world: World) -> dict:
    """JSON-ready scenario description; floats keep full precision."""
    return {
        "robot": [world.robot.x, world.robot.y, world.robot.theta],
        "velocity": [world.velocity.v, world.velocity.w],
        "goal": list(world.goal),
        "robot_radius": world.robot_radius,
        "arena_size": world.arena_size,
        "step_count": world.step_count,
        "status": world.status.value,
        "seed": world.seed,
        "obstacles": [
            {
                "pose": [o.pose.x, o.pose.y, o.pose.theta],
                "radius": o.radius,
                "commanded": [o.commanded.v, o.commanded.w],
                "kind": o.kind.value,
            }
            for o in world.obstacles
        ],
    }


def world_from_dict(data: dict) -> World:
    """Inverse of ``world_to_dict``."""
    return World(
        robot=Pose(*data["robot"]),
        velocity=Velocity(*data.get("velocity", (0.0, 0.0))),
        goal=tuple(data["goal"]),
        obstacles=[
            ObstacleBody(
                pose=Pose(*o["pose"]),
                radius=o["radius"],
                commanded=Velocity(*o["commanded"]),
                kind=ObstacleKind(o.get("kind", "static")),
            )
            for o in data.get("obstacles", [])
        ],
        robot_radius=data.get("robot_radius", 0.18),
        arena_size=data.get("arena_size", 8.0),
        step_count=data.get("step_count", 0),
        status=EpisodeStatus(data.get("status", "running")),
        seed=data.get("seed"),
    )
