"""Staged training schedule and the training loop that runs it.

The default schedule has six stages: goal reaching without obstacles,
static obstacles (explore, then refine), dynamic obstacles (explore, then
refine) and a final mixed stage with a random obstacle count. Within the
growing stages the obstacle count ramps linearly from 0 to 12 over the
stage's episodes; in the first stage the maximum goal distance ramps from
1.5 m up to the whole arena.
"""

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import TYPE_CHECKING, Callable

import numpy as np

from dqndovs.core.agent import DqnAgent
from dqndovs.core.checkpoint import load_weights, save_weights
from dqndovs.core.episode import EnvParams, Observation, observe, run_episode
from dqndovs.core.models import (
    CurriculumStage,
    EpisodeStatus,
    EpsilonMode,
    ObstacleMix,
    StageConfig,
    Transition,
    World,
)
from dqndovs.core.simulator import spawn_scenario
from dqndovs.utils import derive_seed

if TYPE_CHECKING:
    from dqndovs.config import Config

logger = logging.getLogger("dqndovs.curriculum")

STEPS_PER_EPISODE_ESTIMATE = 100


def default_stages() -> list[CurriculumStage]:
    """The six training stages with their full episode counts."""
    return [
        CurriculumStage(
            "goal-reaching", 1000, EpsilonMode.decay, ObstacleMix.none,
            goal_distance_max_start=1.5,
        ),
        CurriculumStage(
            "static-explore", 1000, EpsilonMode.decay, ObstacleMix.static,
            obstacles_min=0, obstacles_max=12, ramp_obstacles=True,
        ),
        CurriculumStage(
            "static-refine", 1000, EpsilonMode.fixed, ObstacleMix.static,
            obstacles_min=0, obstacles_max=12, ramp_obstacles=True,
        ),
        CurriculumStage(
            "dynamic-explore", 1000, EpsilonMode.decay, ObstacleMix.dynamic,
            obstacles_min=0, obstacles_max=12, ramp_obstacles=True,
        ),
        CurriculumStage(
            "dynamic-refine", 1000, EpsilonMode.fixed, ObstacleMix.dynamic,
            obstacles_min=0, obstacles_max=12, ramp_obstacles=True,
        ),
        CurriculumStage(
            "mixed", 2500, EpsilonMode.fixed, ObstacleMix.mixed,
            obstacles_min=1, obstacles_max=15,
        ),
    ]


def scale_stages(stages: list[CurriculumStage], fraction: float) -> list[CurriculumStage]:
    """Shrink every stage's episode count (at least one episode each)."""
    return [replace(s, episodes=max(1, round(s.episodes * fraction))) for s in stages]


@dataclass
class CurriculumConfig:
    """Stage list plus the exploration schedule."""

    stages: list[CurriculumStage] = field(default_factory=default_stages)
    epsilon_start: float = 1.0
    epsilon_floor: float = 0.05
    decay_fraction: float = 0.8
    scale: float = 1.0

    def schedule(self) -> list[CurriculumStage]:
        return scale_stages(self.stages, self.scale) if self.scale != 1.0 else list(self.stages)


def epsilon_schedule(
    stage: CurriculumStage,
    episode_in_stage: int,
    start: float = 1.0,
    floor: float = 0.05,
    decay_fraction: float = 0.8,
) -> float:
    """Exploration rate for one episode of a stage.

    Decay stages fall linearly from ``start`` to ``floor`` over the first
    ``decay_fraction`` of their episodes; fixed stages stay at ``floor``.

    Raises:
        ValueError: If the episode index is outside the stage.
    """
    if not 0 <= episode_in_stage < stage.episodes:
        raise ValueError(f"episode {episode_in_stage} outside stage of {stage.episodes}")
    if stage.epsilon_mode is EpsilonMode.fixed:
        return floor
    span = decay_fraction * stage.episodes
    if span <= 0 or episode_in_stage >= span:
        return floor
    return start + (floor - start) * episode_in_stage / span


def _ramp(lo: float, hi: float, episode: int, episodes: int) -> float:
    if episodes <= 1:
        return hi
    return lo + (hi - lo) * episode / (episodes - 1)


def stage_config_for_episode(
    stage: CurriculumStage,
    episode_in_stage: int,
    rng: np.random.Generator,
    arena_diagonal: float = 8.0 * math.sqrt(2.0),
) -> StageConfig:
    """Concrete spawn settings for one episode of a stage."""
    if stage.obstacle_mix is ObstacleMix.none:
        count = 0
    elif stage.ramp_obstacles:
        count = round(
            _ramp(stage.obstacles_min, stage.obstacles_max, episode_in_stage, stage.episodes)
        )
    else:
        count = int(rng.integers(stage.obstacles_min, stage.obstacles_max + 1))

    d_max = stage.goal_distance_max
    if stage.goal_distance_max_start is not None:
        d_max = _ramp(
            stage.goal_distance_max_start,
            min(stage.goal_distance_max, arena_diagonal),
            episode_in_stage,
            stage.episodes,
        )
    return StageConfig(
        obstacle_count=count,
        obstacle_mix=stage.obstacle_mix,
        goal_distance_min=stage.goal_distance_min,
        goal_distance_max=d_max,
        dynamic_fraction=stage.dynamic_fraction,
    )


class _Learner:
    """Policy wrapper that turns consecutive observations into transitions.

    The transition of a step is completed when the next observation arrives,
    so the stored next state and mask are exactly what the agent saw.
    """

    def __init__(self, agent: DqnAgent, epsilon: float, train_every: int):
        self.agent = agent
        self.epsilon = epsilon
        self.train_every = max(train_every, 1)
        self.pending: tuple[Observation, int, float, bool] | None = None
        self.losses: list[float] = []

    def __call__(self, obs: Observation) -> int:
        self._complete(obs, episode_end=False)
        return self.agent.act(obs.state, obs.table.mask, self.epsilon)

    def on_step(
        self, obs: Observation, action: int, r: float, world: World, status: EpisodeStatus
    ) -> None:
        terminal = status in (EpisodeStatus.success, EpisodeStatus.collision)
        self.pending = (obs, action, r, terminal)
        if self.agent.ready() and self.agent.env_steps % self.train_every == 0:
            self.losses.append(self.agent.train_step())

    def finish(self, final_obs: Observation) -> None:
        self._complete(final_obs, episode_end=True)
        self.agent.end_episode()

    def _complete(self, next_obs: Observation, episode_end: bool) -> None:
        if self.pending is None:
            return
        obs, action, r, terminal = self.pending
        self.pending = None
        self.agent.remember(
            Transition(
                state=obs.state,
                action=action,
                reward=r,
                next_state=next_obs.state,
                terminal=terminal,
                next_mask=obs.table.mask.copy() if terminal else next_obs.table.mask.copy(),
            ),
            episode_end=episode_end,
        )


@dataclass
class CurriculumResult:
    """Files produced by a training run."""

    final_checkpoint: Path
    log_path: Path
    checkpoint_sha256: str
    episodes: int
    stage_checkpoints: list[Path] = field(default_factory=list)


EpisodeHook = Callable[[dict], None]


def run_curriculum(
    config: "Config",
    seed: int,
    out_dir: Path,
    resume_from: Path | None = None,
    on_episode: EpisodeHook | None = None,
) -> CurriculumResult:
    """Train through every stage, logging each episode and checkpointing each stage.

    Writes ``train.jsonl`` (one record per episode), ``stage{k}.ckpt`` after
    stage k and ``final.ckpt`` into ``out_dir``. A run resumed from a stage
    checkpoint continues with the following stage and appends to the log.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    env = config.env_params()
    stages = config.curriculum.schedule()
    cur = config.curriculum
    total_episodes = sum(s.episodes for s in stages)
    hyper = config.agent
    estimate = total_episodes * STEPS_PER_EPISODE_ESTIMATE // max(hyper.train_every, 1)

    agent = DqnAgent(hyper, config.network, seed=seed, total_train_steps=estimate)
    first_stage = 0
    global_episode = 0
    if resume_from is not None:
        first_stage, global_episode = _restore(agent, Path(resume_from), config)

    log_path = out_dir / "train.jsonl"
    stage_rng = np.random.default_rng(derive_seed(seed, "stages"))
    sense_rng = np.random.default_rng(derive_seed(seed, "sense"))
    arena_diagonal = env.sim.arena_size * math.sqrt(2.0)
    checkpoints: list[Path] = []

    with open(log_path, "a" if resume_from is not None else "w") as log:
        for k in range(first_stage, len(stages)):
            stage = stages[k]
            logger.info("Stage %d (%s): %d episodes", k + 1, stage.name, stage.episodes)
            for e in range(stage.episodes):
                eps = epsilon_schedule(
                    stage, e, cur.epsilon_start, cur.epsilon_floor, cur.decay_fraction
                )
                spawn = stage_config_for_episode(stage, e, stage_rng, arena_diagonal)
                world = spawn_scenario(spawn, derive_seed(seed, "train", global_episode), env.sim)
                record = _train_episode(agent, world, env, sense_rng, eps, hyper.train_every)
                record.update(
                    stage=k + 1,
                    stage_name=stage.name,
                    episode=global_episode,
                    episode_in_stage=e,
                    epsilon=eps,
                    obstacles=spawn.obstacle_count,
                )
                log.write(json.dumps(record, sort_keys=True) + "\n")
                global_episode += 1
                if on_episode is not None:
                    on_episode(record)
            log.flush()
            path = out_dir / f"stage{k + 1}.ckpt"
            _save(agent, path, config, seed, k + 1, global_episode)
            checkpoints.append(path)

    final = out_dir / "final.ckpt"
    digest = _save(agent, final, config, seed, len(stages), global_episode)
    logger.info("Training finished after %d episodes", global_episode)
    return CurriculumResult(final, log_path, digest, global_episode, checkpoints)


def _train_episode(
    agent: DqnAgent,
    world: World,
    env: EnvParams,
    sense_rng: np.random.Generator,
    epsilon: float,
    train_every: int,
) -> dict:
    learner = _Learner(agent, epsilon, train_every)
    result = run_episode(world, learner, env, sense_rng, on_step=learner.on_step)
    learner.finish(observe(result.final_world, env, sense_rng))
    return {
        "return": result.total_return,
        "outcome": result.status.value,
        "steps": result.steps,
        "train_steps": agent.train_steps,
        "loss": float(np.mean(learner.losses)) if learner.losses else None,
    }


def _save(agent: DqnAgent, path: Path, config: "Config", seed: int, stage: int, episode: int) -> str:
    meta = {
        "stage": stage,
        "episode": episode,
        "seed": seed,
        "train_steps": agent.train_steps,
        "env_steps": agent.env_steps,
        "config_digest": config.digest(),
    }
    return save_weights(path, agent.online, agent.optimizer, agent.target, meta)


def _restore(agent: DqnAgent, path: Path, config: "Config") -> tuple[int, int]:
    ckpt = load_weights(path, config.network)
    agent.online = ckpt.online
    agent.target = ckpt.target if ckpt.target is not None else ckpt.online.copy()
    if ckpt.optimizer is not None:
        agent.optimizer = ckpt.optimizer
    agent.train_steps = int(ckpt.meta.get("train_steps", 0))
    agent.env_steps = int(ckpt.meta.get("env_steps", 0))
    logger.info("Resuming after stage %s from %s", ckpt.meta.get("stage"), path)
    return int(ckpt.meta.get("stage", 0)), int(ckpt.meta.get("episode", 0))
