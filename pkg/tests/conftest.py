"""Test fixtures for dqndovs."""

import tempfile
from pathlib import Path

import numpy as np
import pytest

from dqndovs.config import Config
from dqndovs.core.benchmark import GoalGreedyPlanner
from dqndovs.core.curriculum import CurriculumConfig
from dqndovs.core.database import ResultsDatabase
from dqndovs.core.episode import EnvParams, run_episode, write_trace
from dqndovs.core.models import (
    CurriculumStage,
    EpsilonMode,
    Hyperparams,
    KinodynamicLimits,
    ObstacleBody,
    ObstacleKind,
    ObstacleMix,
    Pose,
    SensorConfig,
    Velocity,
    World,
)
from dqndovs.core.network import ArchitectureConfig
from dqndovs.core.simulator import SimParams


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def temp_db(temp_dir):
    """Create a temporary results database."""
    db = ResultsDatabase(temp_dir / "results.duckdb")
    # Trigger lazy connection to create the database file
    _ = db.conn
    yield db
    db.close()


@pytest.fixture
def limits():
    """Default kinodynamic limits."""
    return KinodynamicLimits()


@pytest.fixture
def exact_env():
    """Environment with noiseless, occlusion-free sensing."""
    return EnvParams(sensor=SensorConfig.exact())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_arch():
    """A network small enough for finite differences and quick training."""
    return ArchitectureConfig(
        conv1_filters=2,
        conv2_filters=3,
        situation_units=4,
        trunk_units=8,
        head_units=6,
    )


@pytest.fixture
def empty_world():
    """Robot in the middle of the arena facing +x, goal 2 m ahead, no obstacles."""
    return World(robot=Pose(3.0, 4.0, 0.0), velocity=Velocity(0.0, 0.0), goal=(5.0, 4.0))


@pytest.fixture
def blocked_world():
    """Static obstacle sitting on the straight line to the goal."""
    return World(
        robot=Pose(2.0, 4.0, 0.0),
        velocity=Velocity(0.0, 0.0),
        goal=(6.0, 4.0),
        obstacles=[ObstacleBody(Pose(3.0, 4.0, 0.0), 0.2, Velocity(0.0, 0.0), ObstacleKind.static)],
    )


@pytest.fixture
def tiny_config(tiny_arch):
    """A configuration whose curriculum finishes in seconds."""
    return Config(
        sim=SimParams(max_steps=30),
        agent=Hyperparams(
            n_step=3,
            batch_size=8,
            warmup=16,
            replay_capacity=512,
            target_sync_period=10,
            total_train_steps=200,
        ),
        network=tiny_arch,
        curriculum=CurriculumConfig(
            stages=[
                CurriculumStage(
                    "goal-reaching", 2, EpsilonMode.decay, ObstacleMix.none,
                    goal_distance_max_start=1.5,
                ),
                CurriculumStage(
                    "static", 2, EpsilonMode.fixed, ObstacleMix.static,
                    obstacles_min=0, obstacles_max=3, ramp_obstacles=True,
                ),
            ]
        ),
    )


@pytest.fixture
def trace_records(empty_world, exact_env):
    """Trace of a goal-greedy run in the empty world."""
    result = run_episode(
        empty_world,
        GoalGreedyPlanner(exact_env.limits, exact_env.rewards),
        exact_env,
        np.random.default_rng(0),
        record=True,
    )
    return result.trace()


@pytest.fixture
def trace_file(temp_dir, trace_records):
    path = temp_dir / "episode.jsonl"
    write_trace(trace_records, path)
    return path
