"""Dovs-dump command for dqndovs CLI."""

import json
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np
import typer

from dqndovs.cli.formatters import GridFormat, get_config, print_error, write_output
from dqndovs.core.benchmark import scenario_stage
from dqndovs.core.dovs import build_velocity_grid, grid_to_csv, grid_to_pgm, ttc_to_csv
from dqndovs.core.errors import DovsError
from dqndovs.core.simulator import sense, spawn_scenario, world_from_dict
from dqndovs.core.models import World
from dqndovs.utils import parse_pose


def _load_scenario(path: Path) -> World:
    """World from a scenario JSON file or from the header of a trace."""
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        # trace: JSON lines, scenario header first
        data = json.loads(text.splitlines()[0])
    if isinstance(data, dict) and data.get("type") == "scenario":
        data = data["world"]
    return world_from_dict(data)


def dovs_dump_cmd(
    ctx: typer.Context,
    scenario: Optional[Path] = typer.Option(
        None,
        "--scenario",
        help="Scenario JSON or trace file (default: spawn one from --seed)",
    ),
    seed: int = typer.Option(
        0,
        "--seed",
        "-s",
        help="Scenario seed when no --scenario is given",
    ),
    obstacles: int = typer.Option(
        5,
        "--obstacles",
        "-n",
        help="Obstacle count when spawning",
    ),
    pose: Optional[str] = typer.Option(
        None,
        "--pose",
        help="Robot pose override as x,y,theta",
    ),
    noisy: bool = typer.Option(
        False,
        "--noisy",
        help="Apply sensing noise (default: exact estimates, occlusion kept)",
    ),
    output_format: GridFormat = typer.Option(
        GridFormat.csv,
        "--format",
        "-f",
        help="Output format: csv (20x20 of +1/-1), pgm (graymap image)",
    ),
    ttc: bool = typer.Option(
        False,
        "--ttc",
        help="Dump the per-cell time to collision instead of the grid (csv only)",
    ),
    out: Optional[Path] = typer.Option(
        None,
        "--out",
        "-o",
        help="Output file (default: stdout)",
    ),
):
    """Dump the velocity grid the robot sees in a scenario.

    Row 0 holds the highest linear velocity, column 0 the most negative
    angular velocity. Free cells are +1, unsafe or inadmissible cells -1.
    """
    if ttc and output_format is GridFormat.pgm:
        print_error("--ttc is only available as csv")
        raise typer.Exit(1)
    if obstacles < 0:
        print_error("--obstacles must be non-negative")
        raise typer.Exit(1)
    try:
        robot_pose = parse_pose(pose) if pose is not None else None
    except ValueError as e:
        print_error(str(e))
        raise typer.Exit(1)

    try:
        config = get_config(ctx)
        if scenario is not None:
            world = _load_scenario(scenario)
        else:
            stage = scenario_stage(obstacles, config.bench.dynamic_fraction)
            world = spawn_scenario(stage, seed, config.sim)
        if robot_pose is not None:
            world = replace(world, robot=robot_pose)

        sensor = config.sensor
        if not noisy:
            sensor = replace(
                sensor,
                position_noise_sigma=0.0,
                velocity_noise_sigma=0.0,
                heading_noise_sigma=0.0,
                angular_noise_sigma=0.0,
            )
        estimates = sense(world, sensor, np.random.default_rng(seed))
        grid = build_velocity_grid(
            world.robot,
            world.velocity,
            estimates,
            config.limits,
            config.dovs.horizon,
            config.dovs.fine_dt,
        )

        if ttc:
            content: str | bytes = ttc_to_csv(grid)
        elif output_format is GridFormat.pgm:
            content = grid_to_pgm(grid)
        else:
            content = grid_to_csv(grid)
        write_output(content, out)
    except (KeyError, TypeError, ValueError) as e:
        print_error(f"Invalid scenario: {e}")
        raise typer.Exit(2)
    except (DovsError, OSError) as e:
        print_error(str(e))
        raise typer.Exit(2)
