"""CLI package for dqndovs."""

from dqndovs.cli.app import app

__all__ = ["app"]
