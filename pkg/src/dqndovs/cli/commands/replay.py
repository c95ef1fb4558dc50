"""Replay command for dqndovs CLI."""

from pathlib import Path
from typing import Optional

import typer

from dqndovs.cli.formatters import get_config, print_error, print_success, print_warning
from dqndovs.core.episode import read_trace, replay_trace
from dqndovs.core.errors import DovsError
from dqndovs.core.render import (
    DEFAULT_SCALE,
    envelope_violations,
    export_trajectory_svg,
    export_velocity_profile_svg,
)


def replay_cmd(
    ctx: typer.Context,
    trace: Path = typer.Argument(
        ...,
        help="Episode trace (JSON lines, scenario header first)",
    ),
    out: Optional[Path] = typer.Option(
        None,
        "--out",
        "-o",
        help="Trajectory SVG (default: trace path with .svg suffix)",
    ),
    scale: float = typer.Option(
        DEFAULT_SCALE,
        "--scale",
        help="Pixels per meter",
    ),
    profile: Optional[Path] = typer.Option(
        None,
        "--profile",
        help="Also write the commanded velocity profile as SVG",
    ),
    verify: bool = typer.Option(
        False,
        "--verify",
        help="Re-simulate the trace and fail if any logged reward differs",
    ),
):
    """Render a logged episode as an SVG trajectory plot.

    The arena outline, robot and obstacle paths, goal and an X at every final
    position are drawn. Identical traces give byte-identical files.
    """
    if scale <= 0:
        print_error("--scale must be positive")
        raise typer.Exit(1)
    if not trace.exists():
        print_error(f"Trace not found: {trace}")
        raise typer.Exit(1)

    out = out or trace.with_suffix(".svg")
    try:
        config = get_config(ctx)
        records = read_trace(trace)

        if verify:
            replayed = replay_trace(records, config.env_params())
            logged = [rec["reward"] for rec in records[1:]]
            mismatches = [
                rec["step"] for rec, r in zip(records[1:], replayed) if r != rec["reward"]
            ]
            if mismatches or len(replayed) != len(logged):
                print_error(f"Replay differs from the log at step(s) {mismatches[:10]}")
                raise typer.Exit(2)
            print_success(f"Replay reproduces all {len(logged)} logged rewards")

        export_trajectory_svg(records, out, scale)
        print_success(f"Wrote trajectory to {out}")

        if profile is not None:
            export_velocity_profile_svg(records, config.limits, profile)
            print_success(f"Wrote velocity profile to {profile}")
            bad = envelope_violations(records, config.limits)
            if bad:
                print_warning(f"Commands outside the acceleration envelope at step(s) {bad[:10]}")
    except (DovsError, OSError) as e:
        print_error(str(e))
        raise typer.Exit(2)
