"""Masked epsilon-greedy policy and the n-step Double-DQN learner."""

import logging
from dataclasses import dataclass

import numpy as np

from dqndovs.core.errors import EmptyMask, ShapeMismatch, WarmupNotReached
from dqndovs.core.models import NUM_ACTIONS, Hyperparams, StateVector, Transition
from dqndovs.core.network import Adam, ArchitectureConfig, QNetwork, huber_loss
from dqndovs.core.replay import NStepBuffer, PrioritizedReplay, ReplayBatch

logger = logging.getLogger("dqndovs.agent")


def masked_argmax(qvalues: np.ndarray, mask: np.ndarray) -> np.ndarray | int:
    """Argmax over selectable actions; the lowest index wins ties.

    Works row-wise on (N, 8) arrays.
    """
    masked = np.where(mask, qvalues, -np.inf)
    return np.argmax(masked, axis=-1)


def select_action(
    qvalues: np.ndarray,
    mask: np.ndarray,
    epsilon: float,
    rng: np.random.Generator,
) -> int:
    """Epsilon-greedy choice restricted to selectable actions.

    Raises:
        EmptyMask: If no action is selectable.
    """
    mask = np.asarray(mask, dtype=bool)
    valid = np.flatnonzero(mask)
    if valid.size == 0:
        raise EmptyMask("no selectable action")
    if rng.random() < epsilon:
        return int(valid[rng.integers(valid.size)])
    return int(masked_argmax(np.asarray(qvalues, dtype=np.float64), mask))


def double_dqn_target(
    reward: float,
    tail_state: StateVector | np.ndarray,
    tail_mask: np.ndarray,
    terminal: bool,
    steps: int,
    online: QNetwork,
    target: QNetwork,
    gamma: float,
) -> float:
    """y = R, or R + gamma^k * Q_target(tail, masked argmax of Q_online(tail))."""
    if terminal:
        return float(reward)
    values = tail_state.values if isinstance(tail_state, StateVector) else tail_state
    q_online, _ = online.forward(values)
    q_target, _ = target.forward(values)
    best = int(masked_argmax(q_online, np.asarray(tail_mask, dtype=bool)))
    return float(reward + gamma**steps * q_target[best])


def double_dqn_targets(
    rewards: np.ndarray,
    tail_states: np.ndarray,
    tail_masks: np.ndarray,
    terminals: np.ndarray,
    steps: np.ndarray,
    online: QNetwork,
    target: QNetwork,
    gamma: float,
) -> np.ndarray:
    """Batched form of ``double_dqn_target``."""
    q_online, _ = online.forward(tail_states)
    q_target, _ = target.forward(tail_states)
    best = masked_argmax(q_online, tail_masks)
    bootstrap = q_target[np.arange(len(best)), best]
    discount = np.power(gamma, steps.astype(np.float64))
    return np.where(terminals, rewards, rewards + discount * bootstrap)


def linear_anneal(start: float, end: float, progress: float) -> float:
    return start + (end - start) * min(max(progress, 0.0), 1.0)


@dataclass
class TrainStats:
    loss: float
    mean_abs_td: float
    learning_rate: float
    beta: float


class DqnAgent:
    """Online and target networks, optimizer, replay store and n-step buffer.

    The agent owns its random generator, so (hyperparameters, seed) fully
    determine every sample and update.
    """

    def __init__(
        self,
        hyper: Hyperparams | None = None,
        arch: ArchitectureConfig | None = None,
        seed: int = 0,
        total_train_steps: int = 1,
    ):
        self.hyper = hyper or Hyperparams()
        seeds = np.random.SeedSequence(seed).spawn(2)
        self.online = QNetwork(arch, seed=int(seeds[0].generate_state(1)[0]))
        self.target = self.online.copy()
        self.total_train_steps = max(int(self.hyper.total_train_steps or total_train_steps), 1)
        self.optimizer = Adam(
            self.online.params,
            lr_start=self.hyper.lr_start,
            lr_end=self.hyper.lr_end,
            total_steps=self.total_train_steps,
        )
        self.replay = PrioritizedReplay(
            self.hyper.replay_capacity, self.hyper.per_alpha, self.hyper.per_epsilon
        )
        self.nstep = NStepBuffer(self.hyper.n_step, self.hyper.gamma)
        self.rng = np.random.default_rng(seeds[1])
        self.train_steps = 0
        self.env_steps = 0

    @property
    def beta(self) -> float:
        return linear_anneal(
            self.hyper.per_beta_start,
            self.hyper.per_beta_end,
            self.train_steps / self.total_train_steps,
        )

    def q_values(self, state: StateVector | np.ndarray) -> np.ndarray:
        values = state.values if isinstance(state, StateVector) else state
        return self.online.forward(values)[0]

    def act(self, state: StateVector, mask: np.ndarray, epsilon: float) -> int:
        return select_action(self.q_values(state), mask, epsilon, self.rng)

    def remember(self, transition: Transition, episode_end: bool = False) -> int:
        """Feed a one-step transition; returns how many n-step records were stored."""
        self.env_steps += 1
        ready = self.nstep.push(transition, episode_end=episode_end)
        for tr in ready:
            self.replay.insert(tr)
        return len(ready)

    def ready(self) -> bool:
        return len(self.replay) >= max(self.hyper.warmup, 1)

    def loss_and_gradients(
        self,
        states: np.ndarray,
        actions: np.ndarray,
        targets: np.ndarray,
        weights: np.ndarray | None = None,
    ) -> tuple[float, dict[str, np.ndarray], np.ndarray]:
        """Importance-weighted mean Huber loss, its gradients and the TD errors.

        Raises:
            ShapeMismatch: If the batch arrays disagree in length.
        """
        states = np.asarray(states, dtype=np.float64)
        actions = np.asarray(actions, dtype=np.int64)
        targets = np.asarray(targets, dtype=np.float64)
        n = len(actions)
        weights = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
        if not (len(states) == len(targets) == len(weights) == n) or n == 0:
            raise ShapeMismatch("batch arrays must share a non-zero length")

        q, cache = self.online.forward(states)
        rows = np.arange(n)
        td = targets - q[rows, actions]
        losses, dloss = huber_loss(td, self.hyper.huber_delta)
        loss = float(np.mean(weights * losses))

        grad_q = np.zeros((n, NUM_ACTIONS))
        grad_q[rows, actions] = -weights * dloss / n
        grads = self.online.backward(cache, grad_q)
        return loss, grads, td

    def train_step(self) -> float:
        """One prioritized minibatch update; returns the loss.

        Raises:
            WarmupNotReached: If the replay store holds fewer than ``warmup`` items.
        """
        if not self.ready():
            raise WarmupNotReached(
                f"replay holds {len(self.replay)} transitions, warm-up is {self.hyper.warmup}"
            )
        return self.train_on(self.replay.sample(self.hyper.batch_size, self.beta, self.rng)).loss

    def train_on(self, batch: ReplayBatch) -> TrainStats:
        beta = self.beta
        targets = double_dqn_targets(
            batch.rewards,
            batch.next_states,
            batch.next_masks,
            batch.terminals,
            batch.steps,
            self.online,
            self.target,
            self.hyper.gamma,
        )
        loss, grads, td = self.loss_and_gradients(batch.states, batch.actions, targets, batch.weights)
        lr = self.optimizer.learning_rate()
        self.optimizer.update(self.online.params, grads)
        self.replay.update_priorities(batch.indices, td)
        self.train_steps += 1
        if self.train_steps % self.hyper.target_sync_period == 0:
            self.sync_target()
        return TrainStats(loss, float(np.mean(np.abs(td))), lr, beta)

    def sync_target(self) -> None:
        self.target.load_params(self.online)
        logger.debug("Target network synced at training step %d", self.train_steps)

    def end_episode(self) -> None:
        self.nstep.reset()
