"""Tests for the simulated world."""

import math
from dataclasses import replace

import numpy as np
import pytest

from dqndovs.core.benchmark import RandomPlanner
from dqndovs.core.episode import EnvParams, run_episode
from dqndovs.core.errors import CommandOutOfEnvelope, EpisodeFinished, SpawnFailure
from dqndovs.core.models import (
    EpisodeStatus,
    ObstacleBody,
    ObstacleKind,
    ObstacleMix,
    Pose,
    SensorConfig,
    StageConfig,
    Velocity,
    World,
)
from dqndovs.core.simulator import (
    SimParams,
    advance_obstacle,
    in_collision,
    obstacle_clearance,
    reward,
    safedist_term,
    sense,
    spawn_scenario,
    step_world,
    world_from_dict,
    world_to_dict,
)


def _static(x: float, y: float, radius: float = 0.2) -> ObstacleBody:
    return ObstacleBody(Pose(x, y, 0.0), radius, Velocity(0.0, 0.0), ObstacleKind.static)


class TestSpawnScenario:
    """Tests for scenario placement."""

    def test_goal_only_stage(self):
        stage = StageConfig(0, ObstacleMix.none, goal_distance_min=1.0, goal_distance_max=1.5)
        for seed in range(20):
            world = spawn_scenario(stage, seed)
            assert world.obstacles == []
            assert 1.0 <= world.goal_distance <= 1.5
            assert world.velocity == Velocity(0.0, 0.0)
            assert world.status is EpisodeStatus.running

    def test_same_seed_same_world(self):
        stage = StageConfig(8, ObstacleMix.mixed)
        assert world_to_dict(spawn_scenario(stage, 42)) == world_to_dict(spawn_scenario(stage, 42))

    def test_different_seeds_differ(self):
        stage = StageConfig(3, ObstacleMix.mixed)
        assert world_to_dict(spawn_scenario(stage, 1)) != world_to_dict(spawn_scenario(stage, 2))

    def test_static_obstacles_separated(self):
        params = SimParams()
        world = spawn_scenario(StageConfig(12, ObstacleMix.static), 7, params)
        assert len(world.obstacles) == 12
        for k, a in enumerate(world.obstacles):
            assert a.kind is ObstacleKind.static
            assert a.commanded == Velocity(0.0, 0.0)
            robot_gap = math.hypot(a.pose.x - world.robot.x, a.pose.y - world.robot.y)
            assert robot_gap - a.radius - world.robot_radius >= params.spawn_clearance
            for b in world.obstacles[k + 1 :]:
                gap = math.hypot(a.pose.x - b.pose.x, a.pose.y - b.pose.y) - a.radius - b.radius
                assert gap >= params.spawn_clearance

    def test_dynamic_obstacles_move(self):
        params = SimParams()
        world = spawn_scenario(StageConfig(5, ObstacleMix.dynamic), 3, params)
        for body in world.obstacles:
            assert body.kind is ObstacleKind.dynamic
            assert params.obstacle_v_min <= body.commanded.v <= params.obstacle_v_max

    def test_inside_arena(self):
        world = spawn_scenario(StageConfig(10, ObstacleMix.mixed), 11)
        assert not in_collision(world.robot, world.robot_radius, world.obstacles, world.arena_size)
        for body in world.obstacles:
            assert body.radius <= body.pose.x <= world.arena_size - body.radius
            assert body.radius <= body.pose.y <= world.arena_size - body.radius

    def test_overfull_arena_fails(self):
        params = SimParams(arena_size=2.0)
        with pytest.raises(SpawnFailure):
            spawn_scenario(StageConfig(60, ObstacleMix.static), 0, params)


class TestStepWorld:
    """Tests for one control period."""

    def test_success(self, limits):
        world = World(robot=Pose(4.0, 4.0, 0.0), velocity=Velocity(0.1, 0.0), goal=(4.12, 4.0))
        new_world, status = step_world(world, Velocity(0.1, 0.0), limits)
        assert status is EpisodeStatus.success
        assert new_world.robot.x == pytest.approx(4.02)
        assert new_world.step_count == 1

    def test_obstacle_collision(self, limits):
        world = World(
            robot=Pose(4.0, 4.0, 0.0),
            velocity=Velocity(0.0, 0.0),
            goal=(7.0, 4.0),
            obstacles=[_static(4.4, 4.0)],
        )
        _, status = step_world(world, Velocity(0.14, 0.0), limits)
        assert status is EpisodeStatus.collision

    def test_wall_collision(self, limits):
        world = World(robot=Pose(0.2, 4.0, math.pi), velocity=Velocity(0.0, 0.0), goal=(4.0, 4.0))
        _, status = step_world(world, Velocity(0.14, 0.0), limits)
        assert status is EpisodeStatus.collision

    def test_collision_outranks_success(self, limits):
        world = World(
            robot=Pose(4.0, 4.0, 0.0),
            velocity=Velocity(0.1, 0.0),
            goal=(4.1, 4.0),
            obstacles=[_static(4.35, 4.0)],
        )
        _, status = step_world(world, Velocity(0.1, 0.0), limits)
        assert status is EpisodeStatus.collision

    def test_timeout(self, limits):
        world = World(
            robot=Pose(1.0, 1.0, 0.0), velocity=Velocity(0.0, 0.0), goal=(7.0, 7.0), step_count=499
        )
        _, status = step_world(world, Velocity(0.0, 0.0), limits)
        assert status is EpisodeStatus.timeout

    def test_custom_step_cap(self, limits):
        world = World(robot=Pose(1.0, 1.0, 0.0), velocity=Velocity(0.0, 0.0), goal=(7.0, 7.0), step_count=9)
        _, status = step_world(world, Velocity(0.0, 0.0), limits, max_steps=10)
        assert status is EpisodeStatus.timeout

    def test_finished_episode(self, limits, empty_world):
        done = replace(empty_world, status=EpisodeStatus.success)
        with pytest.raises(EpisodeFinished):
            step_world(done, Velocity(0.0, 0.0), limits)

    def test_unreachable_command(self, limits, empty_world):
        with pytest.raises(CommandOutOfEnvelope):
            step_world(empty_world, Velocity(0.5, 0.0), limits)

    def test_inadmissible_command(self, limits, empty_world):
        fast = replace(empty_world, velocity=Velocity(0.6, 0.0))
        with pytest.raises(CommandOutOfEnvelope):
            step_world(fast, Velocity(0.6, 0.4), limits)

    def test_argument_untouched(self, limits, empty_world):
        before = world_to_dict(empty_world)
        step_world(empty_world, Velocity(0.14, 0.0), limits)
        assert world_to_dict(empty_world) == before

    def test_deterministic_rollout(self, limits):
        world = spawn_scenario(StageConfig(6, ObstacleMix.mixed), 99)
        commands = [Velocity(0.14, 0.0), Velocity(0.28, 0.2), Velocity(0.3, 0.4), Velocity(0.3, 0.2)]

        def rollout():
            w = world
            trail = []
            for cmd in commands:
                if w.status.is_terminal:
                    break
                w, status = step_world(w, cmd, limits)
                trail.append((world_to_dict(w), status))
            return trail

        assert rollout() == rollout()


class TestObstacles:
    """Tests for obstacle motion and contact checks."""

    def test_wall_bounce(self):
        body = ObstacleBody(Pose(7.75, 4.0, 0.0), 0.2, Velocity(0.5, 0.0), ObstacleKind.dynamic)
        moved = advance_obstacle(body, 0.2, 8.0)
        assert moved.pose.x == pytest.approx(7.75)
        assert abs(moved.pose.theta) == pytest.approx(math.pi)

    def test_static_stays(self):
        body = _static(3.0, 3.0)
        assert advance_obstacle(body, 0.2, 8.0) == body

    def test_clearance(self, empty_world):
        world = replace(empty_world, obstacles=[_static(4.0, 4.0), _static(3.0, 6.0)])
        assert obstacle_clearance(world) == pytest.approx(1.0 - 0.18 - 0.2)
        assert math.isinf(obstacle_clearance(empty_world))


class TestSense:
    """Tests for the tracker emulator."""

    def test_exact_sensing(self, rng):
        world = spawn_scenario(StageConfig(5, ObstacleMix.dynamic), 4)
        estimates = sense(world, SensorConfig.exact(), rng)
        for est, body in zip(estimates, world.obstacles):
            assert est.visible
            assert (est.x, est.y, est.heading) == (body.pose.x, body.pose.y, body.pose.theta)
            assert (est.v, est.w) == (body.commanded.v, body.commanded.w)
            assert est.radius == pytest.approx(body.radius + world.robot_radius)

    def test_occluded_behind(self, rng):
        world = World(
            robot=Pose(1.0, 4.0, 0.0),
            velocity=Velocity(0.0, 0.0),
            goal=(7.0, 1.0),
            obstacles=[_static(3.0, 4.0, 0.3), _static(5.0, 4.0, 0.3)],
        )
        cfg = SensorConfig(0.0, 0.0, 0.0, 0.0, True)
        front, back = sense(world, cfg, rng)
        assert front.visible
        assert not back.visible

    def test_position_noise_spread(self, rng):
        world = World(
            robot=Pose(1.0, 1.0, 0.0),
            velocity=Velocity(0.0, 0.0),
            goal=(7.0, 7.0),
            obstacles=[_static(4.0, 4.0)],
        )
        cfg = SensorConfig(0.05, 0.0, 0.0, 0.0, False)
        errors = np.array([sense(world, cfg, rng)[0].x - 4.0 for _ in range(10_000)])
        assert np.std(errors) == pytest.approx(0.05, abs=0.005)

    def test_same_generator_state_same_estimates(self):
        world = spawn_scenario(StageConfig(4, ObstacleMix.dynamic), 8)
        first = sense(world, SensorConfig(), np.random.default_rng(3))
        second = sense(world, SensorConfig(), np.random.default_rng(3))
        assert first == second


class TestReward:
    """Tests for reward shaping."""

    def test_terminal_payoffs(self, empty_world):
        assert reward(empty_world, empty_world, EpisodeStatus.success) == 15.0
        assert reward(empty_world, empty_world, EpisodeStatus.collision) == -15.0

    def test_progress(self, empty_world):
        moved = replace(
            empty_world,
            robot=Pose(3.06, 4.0, 0.0),
            obstacles=[_static(3.06, 4.88)],
        )
        assert obstacle_clearance(moved) == pytest.approx(0.5)
        assert reward(empty_world, moved, EpisodeStatus.running) == pytest.approx(0.15)

    def test_timeout_uses_shaping(self, empty_world):
        assert reward(empty_world, empty_world, EpisodeStatus.timeout) == pytest.approx(0.0)

    def test_proximity_penalty(self, empty_world):
        near = replace(empty_world, obstacles=[_static(3.0, 4.48)])
        assert obstacle_clearance(near) == pytest.approx(0.1)
        assert reward(empty_world, near, EpisodeStatus.running) == pytest.approx(-0.01)

    def test_shaping_bounds(self, limits):
        """Non-terminal rewards stay within the progress range plus the proximity floor."""
        env = EnvParams(limits=limits, sim=SimParams(max_steps=60))
        progress = env.rewards.r_dist * limits.v_max * limits.dt
        floor = env.rewards.safe_coefficient * env.rewards.safe_distance
        seen = []

        def on_step(obs, action, r, new_world, status):
            if status not in (EpisodeStatus.success, EpisodeStatus.collision):
                seen.append(r)

        for seed in range(30):
            world = spawn_scenario(StageConfig(6, ObstacleMix.mixed), seed)
            run_episode(world, RandomPlanner(seed), env, np.random.default_rng(seed), on_step=on_step)
        assert len(seen) > 30
        for r in seen:
            assert -progress - floor - 1e-12 <= r <= progress + 1e-12

    @pytest.mark.parametrize("d_obs, expected", [(0.1, -0.01), (0.2, 0.0), (1.0, 0.0)])
    def test_safedist_term(self, d_obs, expected):
        assert safedist_term(d_obs) == pytest.approx(expected)


class TestWorldDict:
    def test_round_trip(self):
        world = spawn_scenario(StageConfig(4, ObstacleMix.mixed), 21)
        assert world_to_dict(world_from_dict(world_to_dict(world))) == world_to_dict(world)
