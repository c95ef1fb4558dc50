"""Output formatters for CLI."""

import csv
import io
import json
import logging
import sys
from enum import Enum
from pathlib import Path
from typing import Any

import typer
from rich.console import Console
from rich.logging import RichHandler

from dqndovs.config import Config
from dqndovs.core.models import MetricsRow


class OutputFormat(str, Enum):
    """Output format options."""
    table = "table"
    json = "json"
    csv = "csv"


class ReportFormat(str, Enum):
    csv = "csv"
    json = "json"


class GridFormat(str, Enum):
    csv = "csv"
    pgm = "pgm"


def format_data_csv(data: list[dict], columns: list[str] | None = None) -> str:
    """Format list of dicts as CSV using csv module.

    Args:
        data: List of dictionaries to format
        columns: Column order (uses first row's keys if not specified)
    """
    if not data:
        return ""

    if columns is None:
        columns = list(data[0].keys())

    output = io.StringIO()
    writer = csv.DictWriter(output, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    writer.writerows(data)
    return output.getvalue().rstrip("\n")


def write_output(
    content: str | bytes,
    output_path: Path | None,
    row_count: int | None = None,
) -> None:
    """Write content to file or stdout.

    Args:
        content: The formatted content to write
        output_path: File path to write to, or None for stdout
        row_count: Optional count for success message
    """
    if output_path:
        output_path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(content, bytes):
            output_path.write_bytes(content)
        else:
            output_path.write_text(content)
        if row_count is not None:
            print_success(f"Wrote {row_count} row(s) to {output_path}")
        else:
            print_success(f"Wrote to {output_path}")
    elif isinstance(content, bytes):
        sys.stdout.buffer.write(content)
        sys.stdout.flush()
    else:
        print(content, end="" if content.endswith("\n") else "\n")


def get_config(ctx: typer.Context) -> Config:
    """Config selected by the global --config flag (loaded once per run)."""
    obj = ctx.ensure_object(dict)
    if obj.get("config") is None:
        obj["config"] = Config.load(obj.get("config_path"))
    return obj["config"]


def _fmt(value: float | None, digits: int = 4) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def format_metrics_table(rows: list[MetricsRow]) -> str:
    """Format benchmark metrics as a plain text table."""
    if not rows:
        return "No results."

    lines = []
    lines.append(
        f"{'Planner':<14} {'Obst':>5} {'Success':>8} {'Collision':>10} "
        f"{'Timeout':>8} {'Time [s]':>9} {'Time rate':>10}"
    )
    lines.append("-" * 70)
    for r in rows:
        lines.append(
            f"{r.planner:<14} {r.obstacles:>5} {_fmt(r.success_rate):>8} "
            f"{_fmt(r.collision_rate):>10} {_fmt(r.timeout_rate):>8} "
            f"{_fmt(r.mean_time_s, 2):>9} {_fmt(r.time_rate, 3):>10}"
        )

    return "\n".join(lines)


def format_training_summary(rows: list[dict[str, Any]]) -> str:
    """Format the per-stage training summary as a plain text table."""
    if not rows:
        return "No episodes logged."

    lines = []
    lines.append(
        f"{'Stage':>5} {'Name':<16} {'Episodes':>8} {'Success':>8} "
        f"{'Collision':>10} {'Timeout':>8} {'Return':>9} {'Steps':>7}"
    )
    lines.append("-" * 78)
    for r in rows:
        lines.append(
            f"{r['stage']:>5} {str(r['stage_name']):<16} {r['episodes']:>8} "
            f"{_fmt(r['success_rate'], 3):>8} {_fmt(r['collision_rate'], 3):>10} "
            f"{_fmt(r['timeout_rate'], 3):>8} {_fmt(r['mean_return'], 2):>9} "
            f"{_fmt(r['mean_steps'], 1):>7}"
        )

    return "\n".join(lines)


def format_stats(stats: dict[str, Any]) -> str:
    """Format results-database statistics."""
    lines = []

    lines.append(f"Episodes: {stats.get('total_episodes', 0)}")

    if stats.get("episodes_by_planner"):
        lines.append("")
        lines.append("Episodes by planner:")
        for planner, count in stats["episodes_by_planner"].items():
            lines.append(f"  {planner}: {count}")

    return "\n".join(lines)


def format_json(data: Any) -> str:
    """Format data as JSON."""
    return json.dumps(data, indent=2, default=str)


def print_success(message: str):
    """Print a success message."""
    print(f"OK: {message}")


def print_error(message: str):
    """Print an error message."""
    print(f"Error: {message}", file=sys.stderr)


def print_warning(message: str):
    """Print a warning message."""
    print(f"Warning: {message}", file=sys.stderr)


def print_info(message: str):
    """Print an info message."""
    print(message)


_log_handler: logging.Handler | None = None


def configure_logging(level: int) -> None:
    """Route the ``dqndovs`` loggers to stderr through rich at ``level``."""
    global _log_handler
    logger = logging.getLogger("dqndovs")
    if _log_handler is None:
        _log_handler = RichHandler(console=Console(stderr=True), show_path=False)
        logger.addHandler(_log_handler)
    logger.setLevel(level)
