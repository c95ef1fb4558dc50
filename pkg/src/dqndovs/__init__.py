"""dqndovs - learned velocity-space motion planning for differential-drive robots."""

__version__ = "0.1.0"

import logging
from pathlib import Path

import numpy as np

# Configure library logger - users can adjust level via logging.getLogger("dqndovs")
logger = logging.getLogger("dqndovs")
logger.addHandler(logging.NullHandler())

from dqndovs.config import Config
from dqndovs.core.benchmark import DqnPlanner
from dqndovs.core.checkpoint import load_weights
from dqndovs.core.episode import EpisodeResult, Observation, observe, run_episode
from dqndovs.core.errors import DovsError
from dqndovs.core.models import (
    KinodynamicLimits,
    MetricsRow,
    Pose,
    StateVector,
    Velocity,
    VelocityGrid,
    World,
)
from dqndovs.core.network import QNetwork


class DovsPlanner:
    """Main interface: a trained network plus the observation pipeline."""

    def __init__(self, net: QNetwork, config: Config | None = None):
        """Initialize the planner.

        Args:
            net: Q-network whose greedy policy drives the robot
            config: Run configuration (limits, sensing, rewards); defaults if None
        """
        self.config = config or Config()
        self.env = self.config.env_params()
        self.policy = DqnPlanner(net)

    @classmethod
    def load(cls, checkpoint: Path | str, config: Config | None = None) -> "DovsPlanner":
        """Load a planner from a checkpoint file.

        Args:
            checkpoint: Path written by training
            config: Configuration the network was trained with

        Returns:
            DovsPlanner instance
        """
        config = config or Config()
        return cls(load_weights(checkpoint, config.network).online, config)

    def observe(self, world: World, rng: np.random.Generator) -> Observation:
        """Sense the world and build the velocity grid, state and action table."""
        return observe(world, self.env, rng)

    def act(self, obs: Observation) -> int:
        """Greedy action slot for an observation."""
        return self.policy(obs)

    def command(self, obs: Observation) -> Velocity:
        """Velocity command of the greedy action."""
        return obs.table.commands[self.act(obs)]

    def run_episode(self, world: World, seed: int = 0, record: bool = False) -> EpisodeResult:
        """Drive one episode to its end.

        Args:
            world: Starting world
            seed: Seed of the sensing noise
            record: Keep per-step records for a trace

        Returns:
            EpisodeResult with outcome, return and optional records
        """
        return run_episode(world, self.policy, self.env, np.random.default_rng(seed), record=record)


__all__ = [
    "__version__",
    "Config",
    "DovsError",
    "DovsPlanner",
    "EpisodeResult",
    "KinodynamicLimits",
    "MetricsRow",
    "Observation",
    "Pose",
    "StateVector",
    "Velocity",
    "VelocityGrid",
    "World",
]
