"""Exception hierarchy for dqndovs."""


class DovsError(Exception):
    """Base class for all dqndovs errors."""


class ConfigError(DovsError):
    """Configuration document is malformed or has unknown keys."""


class ZeroDistance(DovsError):
    """Goal coincides with the robot position."""


class InvalidAction(DovsError):
    """Action slot is masked out for the current step."""


class EmptyMask(DovsError):
    """No selectable action (never reachable from a valid action table)."""


class SpawnFailure(DovsError):
    """Scenario could not be placed without overlaps."""


class CommandOutOfEnvelope(DovsError):
    """Command violates admissibility or the one-step acceleration bound."""


class EpisodeFinished(DovsError):
    """Stepping a world whose episode already ended."""


class ShapeMismatch(DovsError):
    """Array shapes do not match what a layer or optimizer expects."""


class CheckpointError(DovsError):
    """Checkpoint file cannot be used."""


class VersionMismatch(CheckpointError):
    """Checkpoint format version or architecture differs."""


class ChecksumMismatch(CheckpointError):
    """Checkpoint is truncated or corrupted."""


class NonConsecutive(DovsError):
    """Transitions in an n-step window do not chain."""


class EmptyStore(DovsError):
    """Sampling from an empty replay store."""


class WarmupNotReached(DovsError):
    """Training requested before the replay warm-up size."""


class MalformedTrace(DovsError):
    """Episode trace is missing records or fields."""


class EmptyReport(DovsError):
    """Report requested for an empty set of metrics rows."""
