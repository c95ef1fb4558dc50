"""Tests for the evaluation harness."""

import json
from dataclasses import replace

import numpy as np
import pytest

from dqndovs.config import Config
from dqndovs.core.benchmark import (
    REPORT_COLUMNS,
    DqnPlanner,
    GoalGreedyPlanner,
    RandomPlanner,
    baseline_goal_greedy,
    baseline_random,
    emit_report,
    format_report,
    make_planner,
    run_benchmark,
    scenario_stage,
)
from dqndovs.core.checkpoint import save_weights
from dqndovs.core.dovs import velocity_to_cell
from dqndovs.core.episode import observe, read_trace
from dqndovs.core.errors import ConfigError, EmptyMask, EmptyReport
from dqndovs.core.models import (
    BenchmarkConfig,
    MetricsRow,
    ObstacleMix,
    Pose,
    StageConfig,
    Velocity,
    VelocityGrid,
    World,
)
from dqndovs.core.network import QNetwork
from dqndovs.core.simulator import spawn_scenario


def _rows():
    return [
        MetricsRow("dqn-dovs", 3, 0.9, 0.05, 0.05, 12.34567, None),
        MetricsRow("goal-greedy", 3, 0.5, 0.5, 0.0, None, 1.25),
    ]


def _bench(**kwargs) -> BenchmarkConfig:
    defaults = dict(
        obstacle_counts=[0, 2],
        episodes=2,
        planners=["goal-greedy", "random"],
        reference_planner="goal-greedy",
        seed=11,
    )
    defaults.update(kwargs)
    return BenchmarkConfig(**defaults)


class TestPlanners:
    """Tests for the baseline and learned planners."""

    def test_goal_greedy_drives_at_goal(self, empty_world, exact_env, rng):
        obs = observe(empty_world, exact_env, rng)
        slot = GoalGreedyPlanner(exact_env.limits, exact_env.rewards)(obs)
        assert slot == 5
        assert obs.table.commands[slot].v == pytest.approx(0.14)
        assert obs.table.commands[slot].w == 0.0

    def test_goal_greedy_picks_selectable(self, blocked_world, exact_env, rng):
        obs = observe(blocked_world, exact_env, rng)
        assert obs.table.mask[GoalGreedyPlanner()(obs)]

    def test_random_reset_repeats(self, blocked_world, exact_env, rng):
        obs = observe(blocked_world, exact_env, rng)
        planner = RandomPlanner()
        planner.reset(5)
        first = [planner(obs) for _ in range(20)]
        planner.reset(5)
        assert [planner(obs) for _ in range(20)] == first
        assert all(obs.table.mask[a] for a in first)

    def test_random_uniform_over_valid(self):
        mask = np.array([1, 1, 1, 1, 1, 0, 1, 0], dtype=bool)
        rng = np.random.default_rng(17)
        draws = np.array([baseline_random(mask, rng) for _ in range(10_000)])
        freq = np.bincount(draws, minlength=8) / draws.size
        assert freq[5] == 0.0 and freq[7] == 0.0
        for slot in np.flatnonzero(mask):
            assert freq[slot] == pytest.approx(1.0 / 6.0, abs=0.02)

    def test_random_single_valid(self, rng):
        mask = np.zeros(8, dtype=bool)
        mask[6] = True
        assert {baseline_random(mask, rng) for _ in range(50)} == {6}

    def test_goal_greedy_picks_safe_cell(self, exact_env, rng):
        planner = GoalGreedyPlanner(exact_env.limits, exact_env.rewards)
        checked = 0
        for seed in range(40):
            obs = observe(spawn_scenario(StageConfig(8, ObstacleMix.mixed), seed), exact_env, rng)
            cmds = obs.table.commands
            if not any(obs.grid.value_at(cmds[a]) == 1 for a in obs.table.valid_actions):
                continue
            assert obs.grid.value_at(cmds[planner(obs)]) == 1
            checked += 1
        assert checked > 0

    def test_goal_greedy_vertex_when_goal_line_blocked(self, exact_env, rng):
        world = World(robot=Pose(3.0, 4.0, 0.0), velocity=Velocity(0.3, 0.0), goal=(5.0, 5.0))
        obs = observe(world, exact_env, rng)
        assert obs.table.mask[5] and obs.table.mask[6]
        cmds = obs.table.commands
        lim = exact_env.limits
        cells = np.ones((20, 20), dtype=np.int8)
        blocked = {velocity_to_cell(cmds[a], lim.v_max, lim.w_max) for a in obs.table.valid_actions if a >= 5}
        for cell in blocked:
            cells[cell] = -1
        obs = replace(obs, grid=VelocityGrid(cells, lim.v_max, lim.w_max))
        slot = baseline_goal_greedy(obs, lim, exact_env.rewards)
        assert slot < 5
        assert obs.grid.value_at(cmds[slot]) == 1
        # goal is to the left, so the max-v vertex or the left turn come first
        preferred = [a for a in (0, 2) if obs.grid.value_at(cmds[a]) == 1]
        if preferred:
            assert slot in preferred

    def test_goal_greedy_latest_collision_fallback(self, exact_env, rng):
        world = World(robot=Pose(3.0, 4.0, 0.0), velocity=Velocity(0.3, 0.0), goal=(6.0, 4.0))
        obs = observe(world, exact_env, rng)
        lim = exact_env.limits
        target = velocity_to_cell(obs.table.commands[3], lim.v_max, lim.w_max)
        others = {
            velocity_to_cell(obs.table.commands[a], lim.v_max, lim.w_max)
            for a in obs.table.valid_actions
            if a != 3
        }
        assert target not in others
        ttc = np.full((20, 20), 1.0)
        ttc[target] = 2.5
        unsafe = VelocityGrid(-np.ones((20, 20), dtype=np.int8), lim.v_max, lim.w_max, ttc)
        obs = replace(obs, grid=unsafe)
        assert baseline_goal_greedy(obs, lim, exact_env.rewards) == 3

    def test_random_empty_mask(self, rng):
        with pytest.raises(EmptyMask):
            baseline_random(np.zeros(8, dtype=bool), rng)

    def test_dqn_planner_respects_mask(self, temp_dir, tiny_arch, blocked_world, exact_env, rng):
        path = temp_dir / "net.ckpt"
        digest = save_weights(path, QNetwork(tiny_arch, seed=2))
        planner = DqnPlanner.from_checkpoint(path, tiny_arch)
        assert planner.checkpoint_sha256 == digest
        obs = observe(blocked_world, exact_env, rng)
        q, _ = planner.net.forward(obs.state.values)
        slot = planner(obs)
        assert obs.table.mask[slot]
        assert q[slot] == max(q[a] for a in obs.table.valid_actions)


class TestMakePlanner:
    """Tests for planner construction by id."""

    def test_baselines(self):
        config = Config()
        assert isinstance(make_planner("goal-greedy", config), GoalGreedyPlanner)
        assert isinstance(make_planner("random", config), RandomPlanner)

    def test_dqn_needs_checkpoint(self):
        with pytest.raises(ConfigError):
            make_planner("dqn-dovs", Config())

    def test_unknown(self):
        with pytest.raises(ConfigError, match="unknown planner"):
            make_planner("oracle", Config())


class TestScenarioStage:
    def test_mixed_with_obstacles(self):
        stage = scenario_stage(4, 0.85)
        assert stage.obstacle_count == 4
        assert stage.obstacle_mix is ObstacleMix.mixed
        assert stage.dynamic_fraction == 0.85

    def test_empty(self):
        assert scenario_stage(0, 0.85).obstacle_mix is ObstacleMix.none


class TestRunBenchmark:
    """Tests for the evaluation loop."""

    def test_rows(self, tiny_config, temp_db):
        seen = []
        rows = run_benchmark(_bench(), tiny_config, db=temp_db, on_episode=seen.append)
        assert [(r.planner, r.obstacles) for r in rows] == [
            ("goal-greedy", 0),
            ("goal-greedy", 2),
            ("random", 0),
            ("random", 2),
        ]
        assert len(seen) == 8
        for row in rows:
            assert row.success_rate + row.collision_rate + row.timeout_rate == pytest.approx(1.0)
        for row in rows[:2]:
            assert row.time_rate is None or row.time_rate == pytest.approx(1.0)

    def test_shared_scenarios(self, tiny_config, temp_db):
        run_benchmark(_bench(), tiny_config, db=temp_db)
        for count in (0, 2):
            hashes = temp_db.world_hashes("goal-greedy", count)
            assert len(hashes) == 2
            assert hashes == temp_db.world_hashes("random", count)
        assert temp_db.world_hashes("goal-greedy", 2)[0] != temp_db.world_hashes("goal-greedy", 2)[1]

    def test_seed_changes_scenarios(self, tiny_config, temp_db):
        run_benchmark(_bench(planners=["goal-greedy"]), tiny_config, db=temp_db)
        first = temp_db.world_hashes("goal-greedy", 2)
        run_benchmark(_bench(planners=["goal-greedy"], seed=12), tiny_config, db=temp_db)
        assert temp_db.world_hashes("goal-greedy", 2) != first

    def test_deterministic(self, tiny_config):
        assert run_benchmark(_bench(), tiny_config) == run_benchmark(_bench(), tiny_config)

    def test_rerun_replaces_rows(self, tiny_config, temp_db):
        run_benchmark(_bench(), tiny_config, db=temp_db)
        run_benchmark(_bench(), tiny_config, db=temp_db)
        assert temp_db.get_stats()["total_episodes"] == 8

    def test_traces(self, tiny_config, temp_dir):
        trace_dir = temp_dir / "traces"
        run_benchmark(_bench(planners=["random"], reference_planner="random"), tiny_config, trace_dir=trace_dir)
        names = sorted(p.name for p in trace_dir.iterdir())
        assert names == [
            "random-n0-e0.jsonl",
            "random-n0-e1.jsonl",
            "random-n2-e0.jsonl",
            "random-n2-e1.jsonl",
        ]
        records = read_trace(trace_dir / "random-n2-e0.jsonl")
        assert records[0]["type"] == "scenario"
        assert len(records[0]["world"]["obstacles"]) == 2
        assert records[-1]["status"] in ("success", "collision", "timeout")

    def test_explicit_planners(self, tiny_config):
        rows = run_benchmark(
            _bench(reference_planner="greedy"),
            tiny_config,
            planners={"greedy": GoalGreedyPlanner(tiny_config.limits, tiny_config.reward)},
        )
        assert {r.planner for r in rows} == {"greedy"}

    def test_no_planners(self, tiny_config):
        with pytest.raises(ConfigError):
            run_benchmark(_bench(), tiny_config, planners={})


class TestReport:
    """Tests for report rendering."""

    def test_csv(self):
        lines = format_report(_rows(), "csv").splitlines()
        assert lines[0] == ",".join(REPORT_COLUMNS)
        assert lines[1] == "dqn-dovs,3,0.9000,0.0500,0.0500,12.3457,"
        assert lines[2] == "goal-greedy,3,0.5000,0.5000,0.0000,,1.2500"

    def test_json_full_precision(self):
        data = json.loads(format_report(_rows(), "json"))
        assert data[0]["mean_time_s"] == 12.34567
        assert data[0]["time_rate"] is None
        assert list(data[1]) == list(REPORT_COLUMNS)

    def test_empty(self):
        with pytest.raises(EmptyReport):
            format_report([], "csv")

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            format_report(_rows(), "xlsx")

    def test_emit(self, temp_dir):
        path = emit_report(_rows(), "csv", temp_dir / "out" / "report.csv")
        assert path.read_text() == format_report(_rows(), "csv")

    def test_emit_nothing_on_failure(self, temp_dir):
        path = temp_dir / "report.csv"
        with pytest.raises(EmptyReport):
            emit_report([], "csv", path)
        assert not path.exists()
