"""Evaluation harness: planners, shared scenario sets, metrics and reports.

Every planner is run on the same worlds: the scenario seed of episode i at
obstacle count n depends only on (benchmark seed, n, i). Sensing noise is
seeded the same way, so planners also start from identical first
observations.
"""

import csv
import io
import json
import logging
import math
from dataclasses import asdict
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Protocol

import numpy as np

from dqndovs.core.agent import masked_argmax
from dqndovs.core.checkpoint import load_weights
from dqndovs.core.database import ResultsDatabase
from dqndovs.core.episode import Observation, run_episode, write_trace
from dqndovs.core.errors import ConfigError, EmptyMask, EmptyReport
from dqndovs.core.kinematics import propagate_unicycle, wrap_angle
from dqndovs.core.models import (
    BenchmarkConfig,
    EpisodeRecord,
    KinodynamicLimits,
    MetricsRow,
    ObstacleMix,
    Pose,
    RewardParams,
    StageConfig,
    Velocity,
)
from dqndovs.core.network import ArchitectureConfig, QNetwork
from dqndovs.core.simulator import spawn_scenario
from dqndovs.utils import compute_file_hash, derive_seed, world_hash

if TYPE_CHECKING:
    from dqndovs.config import Config

logger = logging.getLogger("dqndovs.benchmark")

PLANNERS = ("dqn-dovs", "goal-greedy", "random")
REPORT_COLUMNS = (
    "planner",
    "obstacles",
    "success_rate",
    "collision_rate",
    "timeout_rate",
    "mean_time_s",
    "time_rate",
)
BRAKE_MARGIN = 0.1
BRAKE_WEIGHT = 10.0
GOAL_LINE_SLOTS = (5, 6, 7)
MAX_V_SLOT = 0
TURN_LEFT_SLOT = 2
TURN_RIGHT_SLOT = 3


class Planner(Protocol):
    name: str

    def reset(self, seed: int) -> None: ...

    def __call__(self, obs: Observation) -> int: ...


class DqnPlanner:
    """Greedy policy of a trained Q-network over the selectable actions."""

    name = "dqn-dovs"

    def __init__(self, net: QNetwork, checkpoint_sha256: str | None = None):
        self.net = net
        self.checkpoint_sha256 = checkpoint_sha256

    @classmethod
    def from_checkpoint(cls, path: Path | str, arch: ArchitectureConfig | None = None) -> "DqnPlanner":
        net = load_weights(path, arch).online
        digest = compute_file_hash(Path(path))
        logger.info("Loaded %s (sha256 %s)", path, digest)
        return cls(net, digest)

    def reset(self, seed: int) -> None:
        pass

    def __call__(self, obs: Observation) -> int:
        q, _ = self.net.forward(obs.state.values)
        return int(masked_argmax(q, obs.table.mask))


def _goal_cost(cmd: Velocity, goal: tuple[float, float], lim: KinodynamicLimits, rewards: RewardParams) -> float:
    """Estimated time to goal after one step under ``cmd``, zero if it reaches the goal."""
    pose = propagate_unicycle(Pose(), cmd, lim.dt)
    dx, dy = goal[0] - pose.x, goal[1] - pose.y
    d = math.hypot(dx, dy)
    if d < rewards.goal_distance_threshold and cmd.v < rewards.goal_speed_threshold:
        return 0.0
    bearing = wrap_angle(math.atan2(dy, dx) - pose.theta)
    v_allow = math.sqrt(2.0 * lim.a_v_max * max(d - BRAKE_MARGIN, 0.0))
    return d / lim.v_max + abs(bearing) / lim.w_max + BRAKE_WEIGHT * max(cmd.v - v_allow, 0.0)


def _preference(slot: int, goal: tuple[float, float]) -> int:
    """Rank of a slot: goal line first, then the max-v vertex and the turn toward the goal."""
    if slot in GOAL_LINE_SLOTS:
        return 0
    toward = TURN_LEFT_SLOT if goal[1] > 0.0 else TURN_RIGHT_SLOT if goal[1] < 0.0 else None
    if slot in (MAX_V_SLOT, toward):
        return 1
    return 2


def baseline_goal_greedy(
    obs: Observation,
    lim: KinodynamicLimits | None = None,
    rewards: RewardParams | None = None,
) -> int:
    """Drive toward the goal with a command the grid marks safe.

    Safe goal-line slots are taken first, then the max-v vertex or the vertex
    turning toward the goal, then the rest; within a rank the one-step
    time-to-goal estimate decides. With no safe slot, the one whose collision
    is predicted latest is taken.
    """
    lim = lim or KinodynamicLimits()
    rewards = rewards or RewardParams()
    valid = obs.table.valid_actions
    if not valid:
        raise EmptyMask("no selectable action")
    cmds = obs.table.commands
    safe = [a for a in valid if obs.grid.value_at(cmds[a]) > 0]
    if not safe:
        return max(valid, key=lambda a: (obs.grid.ttc_at(cmds[a]), -a))
    return min(
        safe,
        key=lambda a: (
            _preference(a, obs.arc.goal),
            round(_goal_cost(cmds[a], obs.arc.goal, lim, rewards), 9),
            a,
        ),
    )


def baseline_random(mask: np.ndarray, rng: np.random.Generator) -> int:
    """Uniform choice among selectable actions."""
    valid = np.flatnonzero(mask)
    if valid.size == 0:
        raise EmptyMask("no selectable action")
    return int(valid[rng.integers(valid.size)])


class GoalGreedyPlanner:
    name = "goal-greedy"

    def __init__(self, lim: KinodynamicLimits | None = None, rewards: RewardParams | None = None):
        self.lim = lim or KinodynamicLimits()
        self.rewards = rewards or RewardParams()

    def reset(self, seed: int) -> None:
        pass

    def __call__(self, obs: Observation) -> int:
        return baseline_goal_greedy(obs, self.lim, self.rewards)


class RandomPlanner:
    name = "random"

    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)

    def reset(self, seed: int) -> None:
        self.rng = np.random.default_rng(seed)

    def __call__(self, obs: Observation) -> int:
        return baseline_random(obs.table.mask, self.rng)


def make_planner(name: str, config: "Config", checkpoint: Path | str | None = None) -> Planner:
    """Build a planner by id.

    Raises:
        ConfigError: On an unknown id, or dqn-dovs without a checkpoint.
    """
    if name == "dqn-dovs":
        if checkpoint is None:
            raise ConfigError("planner dqn-dovs needs a checkpoint")
        return DqnPlanner.from_checkpoint(checkpoint, config.network)
    if name == "goal-greedy":
        return GoalGreedyPlanner(config.limits, config.reward)
    if name == "random":
        return RandomPlanner()
    raise ConfigError(f"unknown planner {name!r} (choose from {', '.join(PLANNERS)})")


def scenario_stage(count: int, dynamic_fraction: float) -> StageConfig:
    return StageConfig(
        obstacle_count=count,
        obstacle_mix=ObstacleMix.mixed if count > 0 else ObstacleMix.none,
        goal_distance_min=1.0,
        goal_distance_max=math.inf,
        dynamic_fraction=dynamic_fraction,
    )


EpisodeHook = Callable[[EpisodeRecord], None]


def run_benchmark(
    cfg: BenchmarkConfig,
    config: "Config | None" = None,
    planners: dict[str, Planner] | None = None,
    db: ResultsDatabase | None = None,
    on_episode: EpisodeHook | None = None,
    trace_dir: Path | None = None,
) -> list[MetricsRow]:
    """Run every planner on the shared scenario set and aggregate the outcomes.

    Episode rows are only written to ``db`` once every episode has finished,
    so a failure leaves no partial results behind. With ``trace_dir`` each
    episode is also logged as ``{planner}-n{count}-e{episode}.jsonl``.
    """
    if config is None:
        from dqndovs.config import Config

        config = Config()
    env = config.env_params()
    if planners is None:
        planners = {name: make_planner(name, config, cfg.checkpoint) for name in cfg.planners}
    if not planners:
        raise ConfigError("no planners to evaluate")
    if trace_dir is not None:
        trace_dir = Path(trace_dir)
        trace_dir.mkdir(parents=True, exist_ok=True)

    records: list[EpisodeRecord] = []
    for name, planner in planners.items():
        for count in cfg.obstacle_counts:
            stage = scenario_stage(count, cfg.dynamic_fraction)
            for i in range(cfg.episodes):
                world = spawn_scenario(stage, derive_seed(cfg.seed, "scenario", count, i), env.sim)
                planner.reset(derive_seed(cfg.seed, "planner", name, count, i))
                sense_rng = np.random.default_rng(derive_seed(cfg.seed, "sense", count, i))
                result = run_episode(world, planner, env, sense_rng, record=trace_dir is not None)
                if trace_dir is not None:
                    write_trace(result.trace(), trace_dir / f"{name}-n{count}-e{i}.jsonl")
                record = EpisodeRecord(
                    planner=name,
                    obstacles=count,
                    episode=i,
                    world_hash=world_hash(world),
                    outcome=result.status,
                    steps=result.steps,
                    time_s=result.time_s,
                    total_return=result.total_return,
                )
                records.append(record)
                if on_episode is not None:
                    on_episode(record)
            logger.info("%s with %d obstacles done", name, count)

    own_db = db is None
    db = db or ResultsDatabase()
    try:
        with db.transaction():
            for name in planners:
                db.clear(name)
            db.insert_episodes_batch(records)
        return db.metrics(cfg.reference_planner, list(planners))
    finally:
        if own_db:
            db.close()


def _csv_value(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def format_report(rows: list[MetricsRow], fmt: str = "csv") -> str:
    """Render metrics rows as CSV (4 decimals) or JSON (full precision).

    Raises:
        EmptyReport: If there are no rows.
        ValueError: On an unknown format.
    """
    if not rows:
        raise EmptyReport("no metrics rows to report")
    if fmt == "json":
        return json.dumps([asdict(r) for r in rows], indent=2) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown report format {fmt!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in rows:
        writer.writerow([_csv_value(getattr(row, c)) for c in REPORT_COLUMNS])
    return buf.getvalue()


def emit_report(rows: list[MetricsRow], fmt: str, path: Path | str) -> Path:
    """Write the report file; nothing is written when rendering fails."""
    text = format_report(rows, fmt)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
