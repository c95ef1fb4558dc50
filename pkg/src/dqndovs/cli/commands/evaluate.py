"""Eval command for dqndovs CLI."""

import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

import typer

from dqndovs.cli.formatters import (
    ReportFormat,
    configure_logging,
    format_metrics_table,
    get_config,
    print_error,
    print_success,
    write_output,
)
from dqndovs.core.benchmark import PLANNERS, emit_report, format_report, run_benchmark
from dqndovs.core.database import ResultsDatabase
from dqndovs.core.errors import DovsError
from dqndovs.utils import parse_counts


def eval_cmd(
    ctx: typer.Context,
    checkpoint: Optional[Path] = typer.Option(
        None,
        "--checkpoint",
        "-c",
        help="Trained checkpoint (needed by the dqn-dovs planner)",
    ),
    counts: Optional[str] = typer.Option(
        None,
        "--counts",
        "-n",
        help="Obstacle counts, e.g. '1-15' or '1,5,10' (default: from config)",
    ),
    episodes: Optional[int] = typer.Option(
        None,
        "--episodes",
        "-e",
        help="Episodes per obstacle count (default: from config)",
    ),
    planners: Optional[list[str]] = typer.Option(
        None,
        "--planner",
        "-p",
        help="Planner to evaluate: dqn-dovs, goal-greedy, random (repeatable)",
    ),
    reference: Optional[str] = typer.Option(
        None,
        "--reference",
        help="Planner the time rate is measured against (default: first planner)",
    ),
    seed: Optional[int] = typer.Option(
        None,
        "--seed",
        "-s",
        help="Seed of the shared scenario set",
    ),
    out: Optional[Path] = typer.Option(
        None,
        "--out",
        "-o",
        help="Report file (format from --format or the file extension)",
    ),
    output_format: Optional[ReportFormat] = typer.Option(
        None,
        "--format",
        "-f",
        help="Report format: csv, json (default: table on stdout, csv for files)",
    ),
    db: Optional[Path] = typer.Option(
        None,
        "--db",
        help="DuckDB file that keeps the per-episode outcomes",
    ),
    traces: Optional[Path] = typer.Option(
        None,
        "--traces",
        help="Directory for one JSON-lines trace per episode (for replay)",
    ),
    quiet: bool = typer.Option(
        False,
        "--quiet",
        "-q",
        help="Suppress progress output",
    ),
):
    """Evaluate planners on a shared, seeded scenario set.

    Every planner sees the same worlds and the same sensing noise. Rates are
    reported per obstacle count; the time rate divides a planner's total time
    by the reference planner's over the episodes both reached the goal.

    Examples:

        dqndovs eval -c runs/train/final.ckpt -o results.csv

        dqndovs eval -p goal-greedy -p random -n 1-5 -e 20
    """
    try:
        config = get_config(ctx)
    except DovsError as e:
        print_error(str(e))
        raise typer.Exit(2)

    bench = config.bench
    try:
        obstacle_counts = parse_counts(counts) if counts is not None else list(bench.obstacle_counts)
    except ValueError as e:
        print_error(f"Invalid --counts: {e}")
        raise typer.Exit(1)

    chosen = list(planners) if planners else list(bench.planners)
    unknown = [p for p in chosen if p not in PLANNERS]
    if unknown:
        print_error(f"Unknown planner(s): {', '.join(unknown)} (choose from {', '.join(PLANNERS)})")
        raise typer.Exit(1)
    chosen = list(dict.fromkeys(chosen))

    ckpt = str(checkpoint) if checkpoint is not None else bench.checkpoint
    if "dqn-dovs" in chosen and ckpt is None:
        print_error("Planner dqn-dovs needs --checkpoint")
        raise typer.Exit(1)
    if reference is None:
        reference = bench.reference_planner if bench.reference_planner in chosen else chosen[0]

    try:
        cfg = replace(
            bench,
            obstacle_counts=obstacle_counts,
            episodes=episodes if episodes is not None else bench.episodes,
            checkpoint=ckpt,
            seed=seed if seed is not None else bench.seed,
            planners=chosen,
            reference_planner=reference,
        )
    except DovsError as e:
        print_error(str(e))
        raise typer.Exit(1)

    if not quiet and not ctx.obj.get("verbose"):
        configure_logging(logging.INFO)

    total = len(chosen) * len(cfg.obstacle_counts) * cfg.episodes
    use_progress_bar = not quiet and sys.stderr.isatty()
    database = ResultsDatabase(db) if db is not None else None

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
                task = progress.add_task("Evaluating...", total=total)

                def on_episode(record):
                    progress.update(
                        task,
                        advance=1,
                        description=f"{record.planner}: {record.obstacles} obstacles",
                    )

                rows = run_benchmark(cfg, config, db=database, on_episode=on_episode, trace_dir=traces)
        else:
            rows = run_benchmark(cfg, config, db=database, trace_dir=traces)

        if out is not None:
            if output_format is not None:
                fmt = output_format.value
            else:
                fmt = "json" if out.suffix.lower() == ".json" else "csv"
            emit_report(rows, fmt, out)
        elif output_format is not None:
            write_output(format_report(rows, output_format.value), None)
    except (DovsError, OSError) as e:
        print_error(f"Evaluation failed: {e}")
        raise typer.Exit(2)
    finally:
        if database is not None:
            database.close()

    if out is not None:
        print_success(f"Wrote {len(rows)} row(s) to {out}")
    elif output_format is None:
        print(format_metrics_table(rows))
