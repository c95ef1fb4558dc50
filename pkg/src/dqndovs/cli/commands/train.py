"""Train command for dqndovs CLI."""

import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import typer

from dqndovs.cli.formatters import (
    configure_logging,
    get_config,
    print_error,
    print_info,
    print_success,
)
from dqndovs.core.curriculum import run_curriculum
from dqndovs.core.errors import DovsError


def train_cmd(
    ctx: typer.Context,
    seed: int = typer.Option(
        0,
        "--seed",
        "-s",
        help="Seed of network init, exploration and scenarios",
    ),
    out: Path = typer.Option(
        Path("runs/train"),
        "--out",
        "-o",
        help="Output directory for train.jsonl and checkpoints",
    ),
    resume_from: Optional[Path] = typer.Option(
        None,
        "--resume-from",
        "-r",
        help="Stage checkpoint to continue from",
    ),
    scale: Optional[float] = typer.Option(
        None,
        "--scale",
        help="Multiply every stage's episode count (e.g. 0.01 for a smoke run)",
    ),
    quiet: bool = typer.Option(
        False,
        "--quiet",
        "-q",
        help="Suppress progress output",
    ),
):
    """Train the planner through the curriculum stages.

    One JSON line per episode goes to OUT/train.jsonl; a checkpoint is written
    after each stage (OUT/stageK.ckpt) and at the end (OUT/final.ckpt).
    A run resumed from a stage checkpoint continues with the next stage.
    """
    if scale is not None and scale <= 0:
        print_error("--scale must be positive")
        raise typer.Exit(1)
    if resume_from is not None and not resume_from.exists():
        print_error(f"Checkpoint not found: {resume_from}")
        raise typer.Exit(1)

    try:
        config = get_config(ctx)
    except DovsError as e:
        print_error(str(e))
        raise typer.Exit(2)
    if scale is not None:
        config = replace(config, curriculum=replace(config.curriculum, scale=scale))

    if not quiet and not ctx.obj.get("verbose"):
        configure_logging(logging.INFO)

    total = sum(s.episodes for s in config.curriculum.schedule())
    use_progress_bar = not quiet and sys.stderr.isatty()

    try:
        if use_progress_bar:
            from rich.console import Console
            from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn

            console = Console(stderr=True)
            with Progress(
                SpinnerColumn(),
                TextColumn("[progress.description]{task.description}"),
                BarColumn(),
                TaskProgressColumn(),
                console=console,
            ) as progress:
                task = progress.add_task("Training...", total=total)

                def on_episode(record: dict):
                    progress.update(
                        task,
                        completed=record["episode"] + 1,
                        description=f"Stage {record['stage']}: {record['stage_name']}",
                    )

                result = run_curriculum(config, seed, out, resume_from, on_episode)
        else:
            result = run_curriculum(config, seed, out, resume_from)
    except (DovsError, OSError) as e:
        print_error(f"Training failed: {e}")
        raise typer.Exit(2)

    print_success(f"Trained {result.episodes} episodes")
    print()
    print(f"  Log:         {result.log_path}")
    for path in result.stage_checkpoints:
        print(f"  Checkpoint:  {path}")
    print(f"  Final:       {result.final_checkpoint}")
    print(f"  SHA-256:     {result.checkpoint_sha256}")
    print()
    print_info(f"Run 'dqndovs stats {result.log_path}' for a per-stage summary")
