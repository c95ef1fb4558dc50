"""Utility functions for dqndovs."""

import hashlib
import json
import logging
import re
from pathlib import Path

from dqndovs.core.models import Pose, World

logger = logging.getLogger("dqndovs.utils")


def compute_file_hash(file_path: Path) -> str:
    """Compute SHA256 hash of a file's content.

    Args:
        file_path: Path to the file

    Returns:
        Hex-encoded SHA256 hash string
    """
    hasher = hashlib.sha256()
    with open(file_path, "rb") as f:
        for chunk in iter(lambda: f.read(8192), b""):
            hasher.update(chunk)
    return hasher.hexdigest()


def derive_seed(*parts: int | str) -> int:
    """Stable 63-bit seed from a tuple of ints and labels.

    The same parts always give the same seed, independent of the Python
    hash seed and of the order in which other seeds were drawn.
    """
    text = "/".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little") >> 1


def world_hash(world: World) -> str:
    """sha256 of a world's canonical JSON form."""
    from dqndovs.core.simulator import world_to_dict

    data = world_to_dict(world)
    return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()


def parse_counts(text: str) -> list[int]:
    """Parse obstacle counts such as ``"1-5,8,10"``.

    Args:
        text: Comma-separated integers or inclusive ranges

    Returns:
        Sorted list of unique non-negative counts

    Raises:
        ValueError: If an item is not an integer or a range
    """
    counts: set[int] = set()
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        match = re.fullmatch(r"(\d+)\s*-\s*(\d+)", item)
        if match:
            lo, hi = int(match.group(1)), int(match.group(2))
            if lo > hi:
                raise ValueError(f"empty range: {item}")
            counts.update(range(lo, hi + 1))
        elif item.isdigit():
            counts.add(int(item))
        else:
            raise ValueError(f"not a count or range: {item}")
    if not counts:
        raise ValueError("no obstacle counts given")
    return sorted(counts)


def parse_pose(text: str) -> Pose:
    """Parse ``"x,y,theta"`` into a Pose.

    Raises:
        ValueError: If there are not exactly three numbers
    """
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"pose must be x,y,theta: {text!r}")
    try:
        x, y, theta = (float(p) for p in parts)
    except ValueError as e:
        raise ValueError(f"pose must be x,y,theta: {text!r}") from e
    return Pose(x, y, theta)
