"""Proportional prioritized replay and n-step return accumulation."""

import logging
from collections import deque
from dataclasses import dataclass

import numpy as np

from dqndovs.core.errors import EmptyStore, NonConsecutive
from dqndovs.core.models import (
    GRID_SIZE,
    NUM_ACTIONS,
    NUM_SITUATION,
    StateVector,
    Transition,
)

logger = logging.getLogger("dqndovs.replay")

_CELLS = GRID_SIZE * GRID_SIZE


class SumTree:
    """Binary tree over leaf priorities where each parent holds the sum of its children.

    Stored as a flat array in heap order: node i has children 2i+1 and 2i+2,
    and the leaves occupy the last ``leaves`` slots. Ancestors are recomputed
    from their children on every write, so the root never drifts away from
    the leaf sum.
    """

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.leaves = 1
        while self.leaves < capacity:
            self.leaves *= 2
        self.nodes = np.zeros(2 * self.leaves - 1, dtype=np.float64)

    @property
    def total(self) -> float:
        return float(self.nodes[0])

    def leaf(self, index: int) -> float:
        return float(self.nodes[index + self.leaves - 1])

    def leaf_values(self) -> np.ndarray:
        return self.nodes[self.leaves - 1 : self.leaves - 1 + self.capacity]

    def update(self, index: int, value: float) -> None:
        if not 0 <= index < self.capacity:
            raise IndexError(f"leaf {index} outside capacity {self.capacity}")
        node = index + self.leaves - 1
        self.nodes[node] = value
        while node > 0:
            node = (node - 1) // 2
            self.nodes[node] = self.nodes[2 * node + 1] + self.nodes[2 * node + 2]

    def find(self, cumsum: np.ndarray) -> np.ndarray:
        """Leaf indices whose cumulative-priority interval contains each value."""
        remaining = np.atleast_1d(np.asarray(cumsum, dtype=np.float64)).copy()
        node = np.zeros(remaining.shape, dtype=np.int64)
        for _ in range(self.leaves.bit_length() - 1):
            left = 2 * node + 1
            left_sum = self.nodes[left]
            go_left = remaining < left_sum
            remaining = np.where(go_left, remaining, remaining - left_sum)
            node = np.where(go_left, left, left + 1)
        return np.minimum(node - (self.leaves - 1), self.capacity - 1)


@dataclass
class ReplayBatch:
    """Sampled transitions in array form."""

    indices: np.ndarray
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray
    next_masks: np.ndarray
    steps: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    def transitions(self) -> list[Transition]:
        return [
            Transition(
                state=StateVector(self.states[i].copy()),
                action=int(self.actions[i]),
                reward=float(self.rewards[i]),
                next_state=StateVector(self.next_states[i].copy()),
                terminal=bool(self.terminals[i]),
                next_mask=self.next_masks[i].copy(),
                steps=int(self.steps[i]),
            )
            for i in range(len(self))
        ]


class PrioritizedReplay:
    """Ring buffer of transitions sampled in proportion to their TD error.

    Grids are kept as int8 and the situation scalars as float64, so a full
    buffer stays within a few hundred bytes per transition.
    """

    def __init__(self, capacity: int = 100_000, alpha: float = 0.6, epsilon: float = 0.01):
        if alpha < 0 or epsilon < 0:
            raise ValueError("alpha and epsilon must be non-negative")
        self.capacity = capacity
        self.alpha = alpha
        self.epsilon = epsilon
        self.tree = SumTree(capacity)
        self.max_priority = 1.0
        self.size = 0
        self._cursor = 0
        self._grid = np.zeros((capacity, _CELLS), dtype=np.int8)
        self._situation = np.zeros((capacity, NUM_SITUATION), dtype=np.float64)
        self._next_grid = np.zeros((capacity, _CELLS), dtype=np.int8)
        self._next_situation = np.zeros((capacity, NUM_SITUATION), dtype=np.float64)
        self._actions = np.zeros(capacity, dtype=np.int64)
        self._rewards = np.zeros(capacity, dtype=np.float64)
        self._terminals = np.zeros(capacity, dtype=bool)
        self._next_masks = np.zeros((capacity, NUM_ACTIONS), dtype=bool)
        self._steps = np.ones(capacity, dtype=np.int64)

    def __len__(self) -> int:
        return self.size

    def priority(self, td_error: float | np.ndarray) -> np.ndarray | float:
        return (np.abs(td_error) + self.epsilon) ** self.alpha

    def insert(self, transition: Transition, priority: float | None = None) -> int:
        """Store a transition, overwriting the oldest once full.

        New transitions get the largest priority seen so far unless one is given.
        """
        i = self._cursor
        self._grid[i] = transition.state.values[:_CELLS]
        self._situation[i] = transition.state.values[_CELLS:]
        self._next_grid[i] = transition.next_state.values[:_CELLS]
        self._next_situation[i] = transition.next_state.values[_CELLS:]
        self._actions[i] = transition.action
        self._rewards[i] = transition.reward
        self._terminals[i] = transition.terminal
        self._next_masks[i] = transition.next_mask
        self._steps[i] = transition.steps
        p = self.max_priority if priority is None else float(priority)
        self.tree.update(i, p)
        self.max_priority = max(self.max_priority, p)
        self._cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        return i

    def sample(self, batch_size: int, beta: float, rng: np.random.Generator) -> ReplayBatch:
        """Stratified proportional sample with max-normalized importance weights.

        Raises:
            EmptyStore: If nothing has been stored yet.
        """
        if self.size == 0:
            raise EmptyStore("cannot sample from an empty replay store")
        total = self.tree.total
        segment = total / batch_size
        bounds = segment * np.arange(batch_size, dtype=np.float64)
        cumsum = np.minimum(bounds + segment * rng.random(batch_size), np.nextafter(total, 0.0))
        indices = np.minimum(self.tree.find(cumsum), self.size - 1)

        priorities = self.tree.leaf_values()
        probs = priorities[indices] / total
        live = priorities[: self.size]
        p_min = live[live > 0].min() / total if np.any(live > 0) else 1.0 / self.size
        weights = (self.size * probs) ** (-beta) / (self.size * p_min) ** (-beta)

        states = np.concatenate([self._grid[indices], self._situation[indices]], axis=1)
        next_states = np.concatenate(
            [self._next_grid[indices], self._next_situation[indices]], axis=1
        )
        return ReplayBatch(
            indices=indices,
            states=states.astype(np.float64),
            actions=self._actions[indices].copy(),
            rewards=self._rewards[indices].copy(),
            next_states=next_states.astype(np.float64),
            terminals=self._terminals[indices].copy(),
            next_masks=self._next_masks[indices].copy(),
            steps=self._steps[indices].copy(),
            weights=weights,
        )

    def update_priorities(self, indices: np.ndarray, td_errors: np.ndarray) -> None:
        """Set p_i = (|delta_i| + epsilon)^alpha for each sampled index."""
        for i, p in zip(np.asarray(indices), np.atleast_1d(self.priority(td_errors))):
            self.tree.update(int(i), float(p))
            self.max_priority = max(self.max_priority, float(p))


def per_insert(store: PrioritizedReplay, transition: Transition, priority: float | None = None) -> int:
    return store.insert(transition, priority)


def per_sample(
    store: PrioritizedReplay, batch_size: int, beta: float, rng: np.random.Generator
) -> ReplayBatch:
    return store.sample(batch_size, beta, rng)


def per_update(store: PrioritizedReplay, indices: np.ndarray, td_errors: np.ndarray) -> None:
    store.update_priorities(indices, td_errors)


@dataclass
class NStepReturn:
    reward: float
    tail_state: StateVector
    tail_mask: np.ndarray
    terminal: bool
    steps: int


def nstep_accumulate(window: list[Transition], gamma: float) -> NStepReturn:
    """Discounted sum over a window of one-step transitions.

    Accumulation stops at the first terminal transition.

    Raises:
        NonConsecutive: If a transition does not start where the previous ended.
        ValueError: On an empty window.
    """
    if not window:
        raise ValueError("n-step window is empty")
    total = 0.0
    discount = 1.0
    for k, tr in enumerate(window):
        if k > 0 and not np.array_equal(window[k - 1].next_state.values, tr.state.values):
            raise NonConsecutive(f"transition {k} does not follow transition {k - 1}")
        total += discount * tr.reward
        discount *= gamma
        if tr.terminal:
            break
    return NStepReturn(
        reward=total,
        tail_state=tr.next_state,
        tail_mask=tr.next_mask,
        terminal=tr.terminal,
        steps=k + 1,
    )


class NStepBuffer:
    """Turns a stream of one-step transitions into n-step transitions.

    A transition is emitted once n successors are known, and every pending
    head is flushed with a shorter window when the episode ends.
    """

    def __init__(self, n: int, gamma: float):
        if n < 1:
            raise ValueError("n must be at least 1")
        self.n = n
        self.gamma = gamma
        self._window: deque[Transition] = deque()

    def __len__(self) -> int:
        return len(self._window)

    def push(self, transition: Transition, episode_end: bool = False) -> list[Transition]:
        self._window.append(transition)
        ready = []
        if len(self._window) == self.n:
            ready.append(self._fold())
            self._window.popleft()
        if transition.terminal or episode_end:
            while self._window:
                ready.append(self._fold())
                self._window.popleft()
        return ready

    def reset(self) -> None:
        self._window.clear()

    def _fold(self) -> Transition:
        window = list(self._window)
        ret = nstep_accumulate(window, self.gamma)
        return Transition(
            state=window[0].state,
            action=window[0].action,
            reward=ret.reward,
            next_state=ret.tail_state,
            terminal=ret.terminal,
            next_mask=ret.tail_mask,
            steps=ret.steps,
        )
