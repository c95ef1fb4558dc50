"""Init command for dqndovs CLI."""

from pathlib import Path

import typer

from dqndovs.config import Config
from dqndovs.cli.formatters import print_error, print_info, print_success, print_warning


def init_cmd(
    path: Path = typer.Argument(
        Path("dqndovs.json"),
        help="Where to write the configuration",
    ),
    force: bool = typer.Option(
        False,
        "--force",
        "-f",
        help="Overwrite existing configuration",
    ),
):
    """Write the default configuration as JSON.

    Every section (limits, dovs, sim, sensor, reward, agent, network,
    curriculum, bench) is written with its default values, ready to edit
    and pass back with --config.

    Examples:

        dqndovs init                       # Writes ./dqndovs.json

        dqndovs init runs/small.json -f    # Overwrite an existing file
    """
    if path.suffix.lower() == ".toml":
        print_error("init writes JSON; use a .json file name")
        raise typer.Exit(1)

    if path.exists() and not force:
        print_warning(f"Configuration already exists: {path}")
        print_info("Use --force to overwrite")
        raise typer.Exit(1)

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        Config().save(path)
    except OSError as e:
        print_error(f"Failed to write configuration: {e}")
        raise typer.Exit(2)

    print_success(f"Created configuration: {path}")
    print()
    print_info("Next steps:")
    print(f"  1. Edit {path} (optional)")
    print(f"  2. Run 'dqndovs --config {path} train --out runs/train' to train")
    print(f"  3. Run 'dqndovs --config {path} eval -c runs/train/final.ckpt' to evaluate")
