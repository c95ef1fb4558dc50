"""Stats command for dqndovs CLI."""

from pathlib import Path
from typing import Optional

import duckdb
import typer

from dqndovs.cli.formatters import (
    OutputFormat,
    format_data_csv,
    format_json,
    format_stats,
    format_training_summary,
    print_error,
)
from dqndovs.core.database import ResultsDatabase


def stats_cmd(
    log: Optional[Path] = typer.Argument(
        None,
        help="Training log (train.jsonl) to summarize per stage",
    ),
    db: Optional[Path] = typer.Option(
        None,
        "--db",
        help="Results database written by 'eval --db' to summarize instead",
    ),
    output_format: OutputFormat = typer.Option(
        OutputFormat.table,
        "--format",
        "-f",
        help="Output format: table, json, csv",
    ),
):
    """Show training or evaluation statistics.

    With LOG, each curriculum stage is summarized: episodes, outcome rates,
    mean return and mean episode length. With --db, stored episodes are
    counted per planner.
    """
    if (log is None) == (db is None):
        print_error("Give either a training log or --db")
        raise typer.Exit(1)

    path = log if log is not None else db
    if not path.exists():
        print_error(f"File not found: {path}")
        raise typer.Exit(1)

    try:
        if log is not None:
            with ResultsDatabase() as database:
                data = database.training_summary(log)
        else:
            with ResultsDatabase(db) as database:
                data = database.get_stats()
    except (duckdb.Error, OSError) as e:
        print_error(f"Failed to read {path}: {e}")
        raise typer.Exit(2)

    if output_format is OutputFormat.json:
        print(format_json(data))
    elif output_format is OutputFormat.csv:
        rows = data if log is not None else [
            {"planner": k, "episodes": v} for k, v in data["episodes_by_planner"].items()
        ]
        print(format_data_csv(rows))
    elif log is not None:
        print(format_training_summary(data))
    else:
        print(format_stats(data))
