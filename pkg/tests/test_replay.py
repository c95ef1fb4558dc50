"""Tests for prioritized replay and n-step returns."""

import numpy as np
import pytest

from dqndovs.core.errors import EmptyStore, NonConsecutive
from dqndovs.core.models import STATE_SIZE, StateVector, Transition
from dqndovs.core.replay import (
    NStepBuffer,
    PrioritizedReplay,
    SumTree,
    nstep_accumulate,
    per_insert,
    per_sample,
    per_update,
)


def _state(tag: float) -> StateVector:
    values = np.ones(STATE_SIZE)
    values[-1] = tag / 100.0
    return StateVector(values)


def _transition(k: int, reward: float = 0.0, terminal: bool = False, action: int = 0) -> Transition:
    """Step k of a chain: state k to state k+1."""
    return Transition(
        state=_state(k),
        action=action,
        reward=reward,
        next_state=_state(k + 1),
        terminal=terminal,
        next_mask=np.array([True] * 5 + [False] * 3),
    )


class TestSumTree:
    """Tests for the sum tree."""

    def test_root_tracks_leaves(self, rng):
        tree = SumTree(37)
        for _ in range(500):
            tree.update(int(rng.integers(37)), float(rng.uniform(0, 5)))
            assert abs(tree.total - tree.leaf_values().sum()) < 1e-9

    def test_find(self):
        tree = SumTree(4)
        for i, p in enumerate([1.0, 2.0, 3.0, 4.0]):
            tree.update(i, p)
        found = tree.find(np.array([0.5, 1.5, 3.5, 9.99]))
        assert found.tolist() == [0, 1, 2, 3]

    def test_find_non_power_of_two(self):
        tree = SumTree(3)
        for i in range(3):
            tree.update(i, 1.0)
        assert tree.find(np.array([2.999])).tolist() == [2]

    def test_bounds(self):
        tree = SumTree(2)
        with pytest.raises(IndexError):
            tree.update(2, 1.0)
        with pytest.raises(ValueError):
            SumTree(0)


class TestPrioritizedReplay:
    """Tests for the prioritized store."""

    def test_empty_sample(self, rng):
        with pytest.raises(EmptyStore):
            PrioritizedReplay(8).sample(4, 0.4, rng)

    def test_ring_overwrite(self):
        store = PrioritizedReplay(3)
        for k in range(5):
            store.insert(_transition(k, reward=float(k)))
        assert len(store) == 3
        assert sorted(store._rewards.tolist()) == [2.0, 3.0, 4.0]

    def test_new_items_get_max_priority(self):
        store = PrioritizedReplay(4)
        per_insert(store, _transition(0), priority=5.0)
        index = per_insert(store, _transition(1))
        assert store.tree.leaf(index) == 5.0

    def test_proportional_frequencies(self, rng):
        store = PrioritizedReplay(2, alpha=1.0, epsilon=0.0)
        store.insert(_transition(0), priority=1.0)
        store.insert(_transition(1), priority=3.0)
        counts = np.zeros(2)
        for _ in range(10_000):
            counts[per_sample(store, 1, 0.4, rng).indices[0]] += 1
        assert (counts / counts.sum()).tolist() == pytest.approx([0.25, 0.75], abs=0.02)

    def test_importance_weights(self, rng):
        store = PrioritizedReplay(2, alpha=1.0, epsilon=0.0)
        store.insert(_transition(0), priority=1.0)
        store.insert(_transition(1), priority=3.0)
        batch = store.sample(64, 1.0, rng)
        expected = np.where(batch.indices == 0, 1.0, 1.0 / 3.0)
        assert np.allclose(batch.weights, expected)

    def test_equal_priorities_uniform(self, rng):
        store = PrioritizedReplay(16)
        for k in range(4):
            store.insert(_transition(k))
        batch = store.sample(4000, 0.4, rng)
        assert np.allclose(batch.weights, 1.0)
        counts = np.bincount(batch.indices, minlength=4)
        assert counts.tolist() == pytest.approx([1000] * 4, abs=60)

    def test_sample_contents(self, rng):
        store = PrioritizedReplay(8)
        store.insert(_transition(3, reward=1.5, action=2))
        batch = store.sample(2, 0.4, rng)
        assert len(batch) == 2
        tr = batch.transitions()[0]
        assert tr.action == 2
        assert tr.reward == 1.5
        assert np.array_equal(tr.state.values, _state(3).values)
        assert np.array_equal(tr.next_state.values, _state(4).values)
        assert tr.next_mask.tolist() == [True] * 5 + [False] * 3

    def test_update_priorities(self):
        store = PrioritizedReplay(4, alpha=0.6, epsilon=0.01)
        store.insert(_transition(0))
        store.insert(_transition(1))
        per_update(store, np.array([0, 1]), np.array([0.5, -2.0]))
        assert store.tree.leaf(0) == pytest.approx(0.51**0.6)
        assert store.tree.leaf(1) == pytest.approx(2.01**0.6)
        assert store.max_priority == pytest.approx(2.01**0.6)

    def test_priorities_positive(self):
        store = PrioritizedReplay(4, alpha=0.6, epsilon=0.01)
        store.insert(_transition(0))
        store.update_priorities(np.array([0]), np.array([0.0]))
        assert store.tree.leaf(0) > 0.0

    def test_root_after_mixed_operations(self, rng):
        store = PrioritizedReplay(10)
        for k in range(200):
            if k % 3 == 0 and len(store) > 0:
                idx = rng.integers(len(store), size=3)
                store.update_priorities(idx, rng.normal(size=3))
            else:
                store.insert(_transition(k))
            assert abs(store.tree.total - store.tree.leaf_values().sum()) < 1e-9


class TestNStep:
    """Tests for n-step accumulation."""

    def test_two_step_sum(self):
        ret = nstep_accumulate([_transition(0, 1.0), _transition(1, 1.0)], 0.97)
        assert ret.reward == pytest.approx(1.97)
        assert ret.steps == 2
        assert np.array_equal(ret.tail_state.values, _state(2).values)
        assert not ret.terminal

    def test_terminal_first(self):
        ret = nstep_accumulate([_transition(0, 4.0, terminal=True), _transition(1, 9.0)], 0.97)
        assert ret.steps == 1
        assert ret.reward == 4.0
        assert ret.terminal

    def test_zeros(self):
        assert nstep_accumulate([_transition(k) for k in range(5)], 0.97).reward == 0.0

    def test_non_consecutive(self):
        with pytest.raises(NonConsecutive):
            nstep_accumulate([_transition(0), _transition(2)], 0.97)

    def test_empty_window(self):
        with pytest.raises(ValueError):
            nstep_accumulate([], 0.97)

    def test_recursion(self, rng):
        rewards = rng.normal(size=5)
        window = [_transition(k, float(r)) for k, r in enumerate(rewards)]
        full = nstep_accumulate(window, 0.97).reward
        rest = nstep_accumulate(window[1:], 0.97).reward
        assert full == pytest.approx(rewards[0] + 0.97 * rest)


class TestNStepBuffer:
    """Tests for streaming n-step transitions."""

    def test_emits_after_n(self):
        buf = NStepBuffer(3, 0.97)
        assert buf.push(_transition(0, 1.0)) == []
        assert buf.push(_transition(1, 1.0)) == []
        out = buf.push(_transition(2, 1.0))
        assert len(out) == 1
        assert out[0].steps == 3
        assert out[0].reward == pytest.approx(1 + 0.97 + 0.97**2)
        assert np.array_equal(out[0].next_state.values, _state(3).values)

    def test_flush_on_episode_end(self):
        buf = NStepBuffer(3, 0.97)
        emitted = []
        for k in range(5):
            emitted += buf.push(_transition(k), episode_end=k == 4)
        assert [tr.steps for tr in emitted] == [3, 3, 3, 2, 1]
        assert not any(tr.terminal for tr in emitted)
        assert len(buf) == 0

    def test_flush_on_terminal(self):
        buf = NStepBuffer(3, 0.97)
        buf.push(_transition(0, 1.0))
        out = buf.push(_transition(1, 15.0, terminal=True))
        assert [tr.steps for tr in out] == [2, 1]
        assert all(tr.terminal for tr in out)
        assert out[0].reward == pytest.approx(1.0 + 0.97 * 15.0)

    def test_reset(self):
        buf = NStepBuffer(3, 0.97)
        buf.push(_transition(0))
        buf.reset()
        assert len(buf) == 0

    def test_invalid_n(self):
        with pytest.raises(ValueError):
            NStepBuffer(0, 0.97)
