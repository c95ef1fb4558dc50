"""Tests for dqndovs."""
