"""Core components for dqndovs."""

from dqndovs.core.agent import DqnAgent, double_dqn_target, select_action
from dqndovs.core.benchmark import emit_report, run_benchmark
from dqndovs.core.checkpoint import load_weights, save_weights
from dqndovs.core.curriculum import default_stages, epsilon_schedule, run_curriculum
from dqndovs.core.database import ResultsDatabase
from dqndovs.core.dovs import build_state_vector, build_velocity_grid, robot_situation
from dqndovs.core.episode import EnvParams, Observation, observe, run_episode
from dqndovs.core.network import Adam, ArchitectureConfig, QNetwork
from dqndovs.core.replay import NStepBuffer, PrioritizedReplay, nstep_accumulate
from dqndovs.core.simulator import sense, spawn_scenario, step_world

__all__ = [
    "Adam",
    "ArchitectureConfig",
    "DqnAgent",
    "EnvParams",
    "NStepBuffer",
    "Observation",
    "PrioritizedReplay",
    "QNetwork",
    "ResultsDatabase",
    "build_state_vector",
    "build_velocity_grid",
    "default_stages",
    "double_dqn_target",
    "emit_report",
    "epsilon_schedule",
    "load_weights",
    "nstep_accumulate",
    "observe",
    "robot_situation",
    "run_benchmark",
    "run_curriculum",
    "run_episode",
    "save_weights",
    "select_action",
    "sense",
    "spawn_scenario",
    "step_world",
]
