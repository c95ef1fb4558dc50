"""Main Typer application for dqndovs CLI."""

import logging
import sys
from importlib.resources import files
from pathlib import Path
from typing import Optional

import click
import typer

from dqndovs.cli.commands import dovs_dump, evaluate, init, replay, stats, train
from dqndovs.cli.formatters import configure_logging, print_error


app = typer.Typer(
    name="dqndovs",
    help="Deep Q-learning motion planning over the Dynamic Object Velocity Space.",
    add_completion=False,
    rich_markup_mode=None,
    pretty_exceptions_enable=False,
)


@app.callback(invoke_without_command=True)
def main_callback(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(
        None,
        "--config",
        help="Configuration file, JSON or TOML (default: built-in defaults)",
    ),
    verbose: bool = typer.Option(
        False,
        "--verbose",
        "-v",
        help="Log debug detail to stderr",
    ),
    readme: bool = typer.Option(
        False,
        "--readme",
        help="Print the README and exit",
    ),
):
    """Deep Q-learning motion planning over the Dynamic Object Velocity Space."""
    if readme:
        try:
            readme_text = files("dqndovs").joinpath("README.md").read_text()
            print(readme_text)
        except FileNotFoundError:
            # Fallback for development: read from project root
            project_readme = Path(__file__).parent.parent.parent.parent / "README.md"
            if project_readme.exists():
                print(project_readme.read_text())
            else:
                print("README.md not found")
                raise typer.Exit(1)
        raise typer.Exit(0)

    # Show help if no command provided
    if ctx.invoked_subcommand is None:
        print(ctx.get_help())
        raise typer.Exit(0)

    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config
    ctx.obj["config"] = None
    ctx.obj["verbose"] = verbose

    configure_logging(logging.DEBUG if verbose else logging.WARNING)


app.command(name="init")(init.init_cmd)
app.command(name="train")(train.train_cmd)
app.command(name="eval")(evaluate.eval_cmd)
app.command(name="replay")(replay.replay_cmd)
app.command(name="dovs-dump")(dovs_dump.dovs_dump_cmd)
app.command(name="stats")(stats.stats_cmd)


def main():
    """Entry point for the CLI.

    Exit codes: 0 success, 1 usage error, 2 runtime failure.
    """
    try:
        code = app(standalone_mode=False)
    except click.UsageError as e:
        e.show()
        sys.exit(1)
    except click.Abort:
        print_error("Aborted")
        sys.exit(1)
    except click.ClickException as e:
        e.show()
        sys.exit(2)
    sys.exit(code if isinstance(code, int) else 0)


if __name__ == "__main__":
    main()
