"""Tests for utility functions."""

import hashlib
from dataclasses import replace

import pytest

from dqndovs.core.models import Pose
from dqndovs.utils import compute_file_hash, derive_seed, parse_counts, parse_pose, world_hash


class TestComputeFileHash:
    def test_matches_hashlib(self, temp_dir):
        path = temp_dir / "blob.bin"
        data = bytes(range(256)) * 100
        path.write_bytes(data)
        assert compute_file_hash(path) == hashlib.sha256(data).hexdigest()


class TestDeriveSeed:
    """Tests for stable seed derivation."""

    def test_stable(self):
        assert derive_seed(0, "scenario", 3, 7) == derive_seed(0, "scenario", 3, 7)

    def test_parts_matter(self):
        seeds = {derive_seed(0, "scenario", n, i) for n in range(5) for i in range(5)}
        assert len(seeds) == 25
        assert derive_seed(0, "scenario", 1, 2) != derive_seed(0, "sense", 1, 2)

    def test_range(self):
        assert 0 <= derive_seed("x") < 2**63


class TestWorldHash:
    def test_sensitive_to_state(self, empty_world):
        assert world_hash(empty_world) == world_hash(replace(empty_world))
        moved = replace(empty_world, robot=Pose(3.0, 4.0, 0.1))
        assert world_hash(moved) != world_hash(empty_world)


class TestParseCounts:
    """Tests for obstacle count lists."""

    @pytest.mark.parametrize(
        "text,expected",
        [
            ("5", [5]),
            ("1-3", [1, 2, 3]),
            ("1-3,8, 10", [1, 2, 3, 8, 10]),
            ("4,2,4,1-2", [1, 2, 4]),
            ("0", [0]),
        ],
    )
    def test_valid(self, text, expected):
        assert parse_counts(text) == expected

    @pytest.mark.parametrize("text", ["", "a", "3-1", "1.5", "-2"])
    def test_invalid(self, text):
        with pytest.raises(ValueError):
            parse_counts(text)


class TestParsePose:
    def test_valid(self):
        assert parse_pose("1, 2.5, -0.5") == Pose(1.0, 2.5, -0.5)

    @pytest.mark.parametrize("text", ["1,2", "1,2,3,4", "a,b,c"])
    def test_invalid(self, text):
        with pytest.raises(ValueError):
            parse_pose(text)
