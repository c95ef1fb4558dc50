"""CLI commands for dqndovs."""
