"""Observation pipeline and episode driver shared by training, evaluation and replay."""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import numpy as np

from dqndovs.core.actions import action_to_command, enumerate_actions
from dqndovs.core.dovs import (
    DEFAULT_D_NORM,
    DEFAULT_FINE_DT,
    DEFAULT_HORIZON,
    build_state_vector,
    build_velocity_grid,
    robot_situation,
)
from dqndovs.core.errors import MalformedTrace
from dqndovs.core.kinematics import dynamic_window, goal_arc
from dqndovs.core.models import (
    ActionTable,
    DynamicWindow,
    EpisodeStatus,
    GoalArc,
    KinodynamicLimits,
    RewardParams,
    SensorConfig,
    StateVector,
    Velocity,
    VelocityGrid,
    World,
)
from dqndovs.core.simulator import (
    SimParams,
    reward,
    sense,
    step_world,
    world_from_dict,
    world_to_dict,
)

logger = logging.getLogger("dqndovs.episode")

TRACE_VERSION = 1


@dataclass(frozen=True)
class EnvParams:
    """Everything needed to turn a World into observations and steps."""

    limits: KinodynamicLimits = field(default_factory=KinodynamicLimits)
    sim: SimParams = field(default_factory=SimParams)
    sensor: SensorConfig = field(default_factory=SensorConfig)
    rewards: RewardParams = field(default_factory=RewardParams)
    horizon: float = DEFAULT_HORIZON
    fine_dt: float = DEFAULT_FINE_DT
    d_norm: float = DEFAULT_D_NORM


@dataclass
class Observation:
    """What a planner sees at one step."""

    state: StateVector
    table: ActionTable
    window: DynamicWindow
    arc: GoalArc
    grid: VelocityGrid


class Policy(Protocol):
    def __call__(self, obs: Observation) -> int: ...


def goal_in_robot_frame(world: World) -> tuple[float, float]:
    dx = world.goal[0] - world.robot.x
    dy = world.goal[1] - world.robot.y
    c, s = math.cos(world.robot.theta), math.sin(world.robot.theta)
    return c * dx + s * dy, -s * dx + c * dy


def observe(world: World, env: EnvParams, rng: np.random.Generator) -> Observation:
    """Sense the world and build the grid, state vector and action table."""
    estimates = sense(world, env.sensor, rng)
    grid = build_velocity_grid(
        world.robot, world.velocity, estimates, env.limits, env.horizon, env.fine_dt
    )
    sit = robot_situation(world, estimates, env.limits, env.d_norm)
    window = dynamic_window(world.velocity, env.limits)
    gx, gy = goal_in_robot_frame(world)
    if math.hypot(gx, gy) <= 1e-9:
        # Standing on the goal: nudge so the arc is defined; any slot 0-4 still works.
        gx = 1e-6
    arc = goal_arc((gx, gy))
    table = enumerate_actions(window, arc)
    return Observation(build_state_vector(grid, sit), table, window, arc, grid)


@dataclass
class StepRecord:
    """One trace line."""

    step: int
    robot: tuple[float, float, float]
    velocity: tuple[float, float]
    obstacles: list[tuple[float, float, float]]
    action: int
    command: tuple[float, float]
    reward: float
    status: str

    def to_dict(self) -> dict:
        return {
            "type": "step",
            "step": self.step,
            "robot": list(self.robot),
            "velocity": list(self.velocity),
            "obstacles": [list(o) for o in self.obstacles],
            "action": self.action,
            "command": list(self.command),
            "reward": self.reward,
            "status": self.status,
        }


@dataclass
class EpisodeResult:
    """Outcome of a finished episode."""

    status: EpisodeStatus
    steps: int
    total_return: float
    time_s: float
    initial_world: World
    final_world: World
    dt: float = 0.2
    records: list[StepRecord] = field(default_factory=list)

    def trace(self) -> list[dict]:
        """Header record followed by one record per step."""
        header = {
            "type": "scenario",
            "version": TRACE_VERSION,
            "dt": self.dt,
            "world": world_to_dict(self.initial_world),
        }
        return [header] + [r.to_dict() for r in self.records]


StepHook = Callable[[Observation, int, float, World, EpisodeStatus], None]


def run_episode(
    world: World,
    policy: Policy,
    env: EnvParams,
    sense_rng: np.random.Generator,
    on_step: StepHook | None = None,
    record: bool = False,
) -> EpisodeResult:
    """Drive one episode until success, collision or timeout.

    ``on_step`` receives (observation, action, reward, new world, status)
    after every step and is how the learner collects transitions.
    """
    initial = world
    total = 0.0
    records: list[StepRecord] = []
    status = world.status
    while not status.is_terminal:
        obs = observe(world, env, sense_rng)
        action = int(policy(obs))
        command = action_to_command(action, obs.table)
        new_world, status = step_world(world, command, env.limits, env.rewards, env.sim.max_steps)
        r = reward(world, new_world, status, env.rewards)
        total += r
        if record:
            records.append(_record(new_world, action, command, r, status))
        if on_step is not None:
            on_step(obs, action, r, new_world, status)
        world = new_world
    return EpisodeResult(
        status=status,
        steps=world.step_count - initial.step_count,
        total_return=total,
        time_s=(world.step_count - initial.step_count) * env.limits.dt,
        initial_world=initial,
        final_world=world,
        dt=env.limits.dt,
        records=records,
    )


def _record(world: World, action: int, command: Velocity, r: float, status: EpisodeStatus):
    return StepRecord(
        step=world.step_count,
        robot=(world.robot.x, world.robot.y, world.robot.theta),
        velocity=(world.velocity.v, world.velocity.w),
        obstacles=[(o.pose.x, o.pose.y, o.radius) for o in world.obstacles],
        action=action,
        command=(command.v, command.w),
        reward=r,
        status=status.value,
    )


def write_trace(records: list[dict], path: Path) -> None:
    """Write trace records as JSON lines."""
    with open(path, "w") as f:
        for rec in records:
            f.write(json.dumps(rec, separators=(",", ":")) + "\n")


def read_trace(path: Path) -> list[dict]:
    """Read a JSON-lines trace and check its shape.

    Raises:
        MalformedTrace: If the header or any step record is missing fields.
    """
    try:
        with open(path) as f:
            records = [json.loads(line) for line in f if line.strip()]
    except json.JSONDecodeError as e:
        raise MalformedTrace(f"{path}: {e}") from e
    validate_trace(records)
    return records


def validate_trace(records: list[dict]) -> None:
    if not records or records[0].get("type") != "scenario" or "world" not in records[0]:
        raise MalformedTrace("trace must start with a scenario record")
    required = {"step", "robot", "velocity", "obstacles", "command", "reward", "status"}
    for rec in records[1:]:
        missing = required - rec.keys()
        if missing:
            raise MalformedTrace(f"step record missing {sorted(missing)}")


def replay_trace(records: list[dict], env: EnvParams) -> list[float]:
    """Re-simulate a trace's commands from its scenario and return the rewards."""
    validate_trace(records)
    world = world_from_dict(records[0]["world"])
    rewards = []
    for rec in records[1:]:
        command = Velocity(*rec["command"])
        new_world, status = step_world(world, command, env.limits, env.rewards, env.sim.max_steps)
        rewards.append(reward(world, new_world, status, env.rewards))
        world = new_world
    return rewards
