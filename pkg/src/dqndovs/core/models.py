"""Data models shared across the planner, simulator and learner."""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from dqndovs.core.errors import ConfigError

GRID_SIZE = 20
NUM_SITUATION = 8
STATE_SIZE = GRID_SIZE * GRID_SIZE + NUM_SITUATION
NUM_ACTIONS = 8


@dataclass(frozen=True)
class Pose:
    """Planar configuration; theta is kept wrapped to (-pi, pi]."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0


@dataclass(frozen=True)
class Velocity:
    """Differential-drive command: linear v (m/s) and angular w (rad/s)."""

    v: float = 0.0
    w: float = 0.0


@dataclass(frozen=True)
class KinodynamicLimits:
    """Velocity and acceleration bounds of the robot plus the control period."""

    v_max: float = 0.7
    w_max: float = 1.5
    a_v_max: float = 0.7
    a_w_max: float = 2.0
    dt: float = 0.2
    v_min: float = 0.0

    def __post_init__(self):
        for name in ("v_max", "w_max", "a_v_max", "a_w_max", "dt"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.v_min != 0.0:
            raise ConfigError("reverse motion is not supported (v_min must be 0)")


@dataclass(frozen=True)
class DynamicWindow:
    """Rhombus of velocities reachable in one control period.

    Vertices are stored already projected onto the admissible set. Walking
    ``vertices`` gives the polygon in order top, right, bottom, left in the
    (w, v) plane.
    """

    center: Velocity
    v_plus: Velocity
    v_minus: Velocity
    w_plus: Velocity
    w_minus: Velocity

    @property
    def vertices(self) -> tuple[Velocity, Velocity, Velocity, Velocity]:
        return (self.v_plus, self.w_plus, self.v_minus, self.w_minus)


class ArcKind(str, Enum):
    """Shape of the constant-velocity path that reaches the goal."""

    straight = "straight"
    arc_left = "arc-left"
    arc_right = "arc-right"


@dataclass(frozen=True)
class GoalArc:
    """Circle through the robot, tangent to its heading, passing the goal.

    ``radius`` is signed (positive when the goal is to the left) and infinite
    for the straight case. ``goal`` is the goal position in the robot frame.
    """

    kind: ArcKind
    radius: float
    goal: tuple[float, float]

    @property
    def distance(self) -> float:
        return math.hypot(*self.goal)

    @property
    def bearing(self) -> float:
        return math.atan2(self.goal[1], self.goal[0])

    def contains(self, vel: Velocity, tol: float = 1e-9) -> bool:
        """Whether a command lies on the goal line v = R*w."""
        if self.kind is ArcKind.straight:
            return abs(vel.w) <= tol
        return abs(vel.v - self.radius * vel.w) <= tol * max(1.0, abs(self.radius))


@dataclass(frozen=True)
class ObstacleEstimate:
    """Tracker output for one obstacle.

    ``radius`` is enlarged by the robot radius when produced by the sensing
    emulator, so the robot can be treated as a point.
    """

    x: float
    y: float
    radius: float
    heading: float
    v: float
    w: float
    visible: bool = True
    frame: str = "world"  # 'world' or 'robot'


@dataclass
class VelocityGrid:
    """20x20 rasterization of the velocity space.

    Row 0 holds the highest linear velocity, column 0 the most negative
    angular velocity. Cells are +1 (free) or -1 (unsafe or inadmissible).
    """

    cells: np.ndarray
    v_max: float
    w_max: float
    time_to_collision: np.ndarray | None = None

    def __post_init__(self):
        if self.cells.shape != (GRID_SIZE, GRID_SIZE):
            raise ValueError(f"grid must be {GRID_SIZE}x{GRID_SIZE}, got {self.cells.shape}")

    def value_at(self, vel: Velocity) -> int:
        from dqndovs.core.dovs import velocity_to_cell

        i, j = velocity_to_cell(vel, self.v_max, self.w_max)
        return int(self.cells[i, j])

    def ttc_at(self, vel: Velocity) -> float:
        from dqndovs.core.dovs import velocity_to_cell

        if self.time_to_collision is None:
            return math.inf
        i, j = velocity_to_cell(vel, self.v_max, self.w_max)
        return float(self.time_to_collision[i, j])


@dataclass(frozen=True)
class RobotSituation:
    """The 8 scalar state variables, each normalized to [-1, 1]."""

    goal_distance: float = 0.0
    goal_bearing: float = 0.0
    linear_velocity: float = 0.0
    angular_velocity: float = 0.0
    obstacle_distance: float = 1.0
    obstacle_bearing: float = 0.0
    obstacle_speed: float = 0.0
    obstacle_heading: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.goal_distance,
                self.goal_bearing,
                self.linear_velocity,
                self.angular_velocity,
                self.obstacle_distance,
                self.obstacle_bearing,
                self.obstacle_speed,
                self.obstacle_heading,
            ],
            dtype=np.float64,
        )


@dataclass
class StateVector:
    """408-element network input: row-major grid followed by the situation."""

    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (STATE_SIZE,):
            raise ValueError(f"state vector must have {STATE_SIZE} entries")

    @property
    def grid(self) -> np.ndarray:
        return self.values[: GRID_SIZE * GRID_SIZE].reshape(GRID_SIZE, GRID_SIZE)

    @property
    def situation(self) -> np.ndarray:
        return self.values[GRID_SIZE * GRID_SIZE :]


@dataclass
class ActionTable:
    """Commands for the 8 action slots and which of them are selectable."""

    commands: tuple[Velocity, ...]
    mask: np.ndarray

    def __post_init__(self):
        if len(self.commands) != NUM_ACTIONS or self.mask.shape != (NUM_ACTIONS,):
            raise ValueError(f"action table must have {NUM_ACTIONS} slots")

    @property
    def valid_actions(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.mask)]


class EpisodeStatus(str, Enum):
    """Episode outcome; every value other than running is absorbing."""

    running = "running"
    success = "success"
    collision = "collision"
    timeout = "timeout"

    @property
    def is_terminal(self) -> bool:
        return self is not EpisodeStatus.running


class ObstacleKind(str, Enum):
    static = "static"
    dynamic = "dynamic"


@dataclass(frozen=True)
class ObstacleBody:
    """Ground-truth disc obstacle with a velocity fixed for the episode."""

    pose: Pose
    radius: float
    commanded: Velocity
    kind: ObstacleKind = ObstacleKind.static


@dataclass
class World:
    """Ground-truth simulation state inside the square walled arena."""

    robot: Pose
    velocity: Velocity
    goal: tuple[float, float]
    obstacles: list[ObstacleBody] = field(default_factory=list)
    robot_radius: float = 0.18
    arena_size: float = 8.0
    step_count: int = 0
    status: EpisodeStatus = EpisodeStatus.running
    seed: int | None = None

    @property
    def goal_distance(self) -> float:
        return math.hypot(self.goal[0] - self.robot.x, self.goal[1] - self.robot.y)


@dataclass(frozen=True)
class SensorConfig:
    """Noise and occlusion settings of the tracker emulator."""

    position_noise_sigma: float = 0.03
    velocity_noise_sigma: float = 0.05
    heading_noise_sigma: float = 0.05
    angular_noise_sigma: float = 0.05
    occlusion_enabled: bool = True

    def __post_init__(self):
        for name in (
            "position_noise_sigma",
            "velocity_noise_sigma",
            "heading_noise_sigma",
            "angular_noise_sigma",
        ):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")

    @classmethod
    def exact(cls) -> "SensorConfig":
        """Noiseless, occlusion-free sensing."""
        return cls(0.0, 0.0, 0.0, 0.0, False)


@dataclass(frozen=True)
class RewardParams:
    """Terminal payoffs and shaping coefficients."""

    r_goal: float = 15.0
    r_collision: float = -15.0
    r_dist: float = 2.5
    goal_distance_threshold: float = 0.15
    goal_speed_threshold: float = 0.2
    safe_distance: float = 0.2
    safe_coefficient: float = 0.1


@dataclass
class Transition:
    """Replay record; ``reward`` may already be an n-step discounted sum.

    ``next_mask`` is the validity mask at ``next_state`` (True = selectable)
    and ``steps`` is the number of environment steps folded in.
    """

    state: StateVector
    action: int
    reward: float
    next_state: StateVector
    terminal: bool
    next_mask: np.ndarray
    steps: int = 1


@dataclass(frozen=True)
class Hyperparams:
    """Learner settings."""

    gamma: float = 0.97
    n_step: int = 5
    target_sync_period: int = 100
    batch_size: int = 64
    lr_start: float = 3e-4
    lr_end: float = 1e-4
    replay_capacity: int = 100_000
    warmup: int = 1_000
    epsilon_floor: float = 0.05
    per_alpha: float = 0.6
    per_epsilon: float = 0.01
    per_beta_start: float = 0.4
    per_beta_end: float = 1.0
    huber_delta: float = 1.0
    train_every: int = 1
    total_train_steps: int | None = None  # None = estimate from the curriculum


class ObstacleMix(str, Enum):
    none = "none"
    static = "static"
    dynamic = "dynamic"
    mixed = "mixed"


class EpsilonMode(str, Enum):
    decay = "decay"
    fixed = "fixed"


@dataclass(frozen=True)
class CurriculumStage:
    """One row of the training curriculum.

    With ``ramp_obstacles`` the obstacle count grows linearly from
    ``obstacles_min`` to ``obstacles_max`` across the stage; otherwise each
    episode draws it uniformly from that range. When
    ``goal_distance_max_start`` is set the maximum goal distance ramps from it
    up to ``goal_distance_max`` (capped at the arena diagonal).
    """

    name: str
    episodes: int
    epsilon_mode: EpsilonMode
    obstacle_mix: ObstacleMix
    obstacles_min: int = 0
    obstacles_max: int = 0
    ramp_obstacles: bool = False
    goal_distance_min: float = 1.0
    goal_distance_max: float = math.inf
    goal_distance_max_start: float | None = None
    dynamic_fraction: float = 0.85


@dataclass(frozen=True)
class StageConfig:
    """Concrete spawn settings for a single episode."""

    obstacle_count: int = 0
    obstacle_mix: ObstacleMix = ObstacleMix.none
    goal_distance_min: float = 1.0
    goal_distance_max: float = math.inf
    dynamic_fraction: float = 0.85


@dataclass
class BenchmarkConfig:
    """Evaluation protocol settings."""

    obstacle_counts: list[int] = field(default_factory=lambda: list(range(1, 16)))
    episodes: int = 200
    dynamic_fraction: float = 0.85
    checkpoint: str | None = None
    seed: int = 0
    planners: list[str] = field(default_factory=lambda: ["dqn-dovs"])
    reference_planner: str = "dqn-dovs"

    def __post_init__(self):
        if self.episodes <= 0:
            raise ConfigError("episodes must be positive")
        if not 0.0 <= self.dynamic_fraction <= 1.0:
            raise ConfigError("dynamic_fraction must be in [0, 1]")


@dataclass(frozen=True)
class MetricsRow:
    """Aggregated outcome of one planner at one obstacle count."""

    planner: str
    obstacles: int
    success_rate: float
    collision_rate: float
    timeout_rate: float
    mean_time_s: float | None
    time_rate: float | None


@dataclass(frozen=True)
class EpisodeRecord:
    """One evaluated episode as stored in the results database."""

    planner: str
    obstacles: int
    episode: int
    world_hash: str
    outcome: EpisodeStatus
    steps: int
    time_s: float
    total_return: float
