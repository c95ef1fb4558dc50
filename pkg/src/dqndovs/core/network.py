"""Dueling Q-network with exact analytic gradients, in float64 numpy.

Topology::

    grid 1x20x20 -> conv3x3/16 s1 -> relu -> conv3x3/32 s2 -> relu -> flatten
    situation 8  -> dense 64 -> relu
    concat       -> dense 256 -> relu
                 -> value:     dense 128 -> relu -> dense 1
                 -> advantage: dense 128 -> relu -> dense 8
    Q = V + A - mean(A)

Parameters live in an ordered dict of arrays keyed by layer and role
(``conv1.W``, ``conv1.b``, ...). Forward returns a cache of activations that
``backward`` consumes; nothing else is stored on the network.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from dqndovs.core.errors import ShapeMismatch
from dqndovs.core.models import GRID_SIZE, NUM_ACTIONS, NUM_SITUATION, STATE_SIZE

logger = logging.getLogger("dqndovs.network")

KERNEL = 3


@dataclass(frozen=True)
class ArchitectureConfig:
    """Layer widths; fixed at construction."""

    conv1_filters: int = 16
    conv2_filters: int = 32
    conv2_stride: int = 2
    situation_units: int = 64
    trunk_units: int = 256
    head_units: int = 128

    @property
    def conv1_size(self) -> int:
        return GRID_SIZE - KERNEL + 1

    @property
    def conv2_size(self) -> int:
        return (self.conv1_size - KERNEL) // self.conv2_stride + 1

    @property
    def conv_features(self) -> int:
        return self.conv2_filters * self.conv2_size**2

    def digest(self) -> bytes:
        """sha256 of the canonical architecture description."""
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).digest()

    def shapes(self) -> dict[str, tuple[int, ...]]:
        f1, f2 = self.conv1_filters, self.conv2_filters
        return {
            "conv1.W": (f1, 1, KERNEL, KERNEL),
            "conv1.b": (f1,),
            "conv2.W": (f2, f1, KERNEL, KERNEL),
            "conv2.b": (f2,),
            "situation.W": (NUM_SITUATION, self.situation_units),
            "situation.b": (self.situation_units,),
            "trunk.W": (self.conv_features + self.situation_units, self.trunk_units),
            "trunk.b": (self.trunk_units,),
            "value1.W": (self.trunk_units, self.head_units),
            "value1.b": (self.head_units,),
            "value2.W": (self.head_units, 1),
            "value2.b": (1,),
            "adv1.W": (self.trunk_units, self.head_units),
            "adv1.b": (self.head_units,),
            "adv2.W": (self.head_units, NUM_ACTIONS),
            "adv2.b": (NUM_ACTIONS,),
        }


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int) -> np.ndarray:
    """Valid cross-correlation. x: (N, C, H, W); w: (F, C, k, k) -> (N, F, Ho, Wo)."""
    if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1]:
        raise ShapeMismatch(f"conv input {x.shape} incompatible with kernel {w.shape}")
    k = w.shape[2]
    windows = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    out = np.tensordot(windows, w, axes=([1, 4, 5], [1, 2, 3]))
    return out.transpose(0, 3, 1, 2) + b[None, :, None, None]


def conv2d_backward(
    x: np.ndarray,
    w: np.ndarray,
    dout: np.ndarray,
    stride: int,
    need_input_grad: bool = True,
) -> tuple[np.ndarray | None, np.ndarray, np.ndarray]:
    """Gradients (dx, dW, db) of a valid cross-correlation."""
    k = w.shape[2]
    windows = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    dw = np.tensordot(dout, windows, axes=([0, 2, 3], [0, 2, 3]))
    db = dout.sum(axis=(0, 2, 3))
    if not need_input_grad:
        return None, dw, db
    dx = np.zeros_like(x)
    ho, wo = dout.shape[2], dout.shape[3]
    for i in range(k):
        for j in range(k):
            contrib = np.tensordot(dout, w[:, :, i, j], axes=([1], [0]))
            dx[:, :, i : i + stride * (ho - 1) + 1 : stride, j : j + stride * (wo - 1) + 1 : stride] += (
                contrib.transpose(0, 3, 1, 2)
            )
    return dx, dw, db


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    if x.shape[-1] != w.shape[0]:
        raise ShapeMismatch(f"dense input {x.shape} incompatible with weight {w.shape}")
    return x @ w + b


def dense_backward(
    x: np.ndarray, w: np.ndarray, dout: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return dout @ w.T, x.T @ dout, dout.sum(axis=0)


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def dueling_aggregate(value: np.ndarray | float, advantages: np.ndarray) -> np.ndarray:
    """Q_a = V + A_a - mean(A). Works on a single vector or a batch (N, 8)."""
    advantages = np.asarray(advantages, dtype=np.float64)
    value = np.asarray(value, dtype=np.float64)
    if advantages.ndim == 2 and value.ndim == 1:
        value = value[:, None]
    return value + advantages - advantages.mean(axis=-1, keepdims=True)


def huber_loss(error: np.ndarray | float, delta: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Huber loss and its derivative with respect to the error."""
    e = np.asarray(error, dtype=np.float64)
    small = np.abs(e) <= delta
    loss = np.where(small, 0.5 * e * e, delta * (np.abs(e) - 0.5 * delta))
    grad = np.clip(e, -delta, delta)
    return loss, grad


class QNetwork:
    """Parameter container plus forward/backward passes."""

    def __init__(self, arch: ArchitectureConfig | None = None, seed: int | None = 0):
        self.arch = arch or ArchitectureConfig()
        self.params: dict[str, np.ndarray] = {}
        rng = np.random.default_rng(seed)
        for name, shape in self.arch.shapes().items():
            if name.endswith(".b"):
                self.params[name] = np.zeros(shape, dtype=np.float64)
            else:
                fan_in = int(np.prod(shape[1:])) if len(shape) == 4 else shape[0]
                limit = np.sqrt(6.0 / fan_in)
                self.params[name] = rng.uniform(-limit, limit, size=shape)

    def copy(self) -> "QNetwork":
        clone = QNetwork.__new__(QNetwork)
        clone.arch = self.arch
        clone.params = {k: v.copy() for k, v in self.params.items()}
        return clone

    def load_params(self, other: "QNetwork") -> None:
        """Hard copy of another network's parameters (same architecture)."""
        if other.arch != self.arch:
            raise ShapeMismatch("cannot copy parameters across architectures")
        for k, v in other.params.items():
            np.copyto(self.params[k], v)

    def forward(self, states: np.ndarray) -> tuple[np.ndarray, dict]:
        """Q-values for a batch (N, 408) or a single state (408,).

        Returns the Q array (same leading shape as the input, last dim 8) and
        the activation cache for ``backward``.

        Raises:
            ShapeMismatch: If the last dimension is not 408.
        """
        states = np.asarray(states, dtype=np.float64)
        single = states.ndim == 1
        batch = states[None, :] if single else states
        if batch.ndim != 2 or batch.shape[1] != STATE_SIZE:
            raise ShapeMismatch(f"expected states of width {STATE_SIZE}, got {states.shape}")
        p = self.params
        n = batch.shape[0]
        cells = GRID_SIZE * GRID_SIZE

        x0 = batch[:, :cells].reshape(n, 1, GRID_SIZE, GRID_SIZE)
        z1 = conv2d_forward(x0, p["conv1.W"], p["conv1.b"], 1)
        a1 = relu(z1)
        z2 = conv2d_forward(a1, p["conv2.W"], p["conv2.b"], self.arch.conv2_stride)
        a2 = relu(z2)

        s = batch[:, cells:]
        z3 = dense_forward(s, p["situation.W"], p["situation.b"])
        a3 = relu(z3)

        h = np.concatenate([a2.reshape(n, -1), a3], axis=1)
        z4 = dense_forward(h, p["trunk.W"], p["trunk.b"])
        a4 = relu(z4)

        z5 = dense_forward(a4, p["value1.W"], p["value1.b"])
        a5 = relu(z5)
        value = dense_forward(a5, p["value2.W"], p["value2.b"])[:, 0]

        z7 = dense_forward(a4, p["adv1.W"], p["adv1.b"])
        a7 = relu(z7)
        adv = dense_forward(a7, p["adv2.W"], p["adv2.b"])

        q = dueling_aggregate(value, adv)
        cache = {
            "x0": x0, "z1": z1, "a1": a1, "z2": z2, "a2": a2, "s": s, "z3": z3,
            "h": h, "z4": z4, "a4": a4, "z5": z5, "a5": a5, "z7": z7, "a7": a7,
            "single": single,
        }
        return (q[0] if single else q), cache

    def backward(self, cache: dict, grad_q: np.ndarray) -> dict[str, np.ndarray]:
        """Parameter gradients of sum(grad_q * Q) for the cached forward pass.

        Raises:
            ShapeMismatch: If grad_q does not match the cached batch.
        """
        grad_q = np.asarray(grad_q, dtype=np.float64)
        if cache["single"] and grad_q.ndim == 1:
            grad_q = grad_q[None, :]
        n = cache["h"].shape[0]
        if grad_q.shape != (n, NUM_ACTIONS):
            raise ShapeMismatch(f"expected output gradient {(n, NUM_ACTIONS)}, got {grad_q.shape}")
        p = self.params
        g: dict[str, np.ndarray] = {}

        d_value = grad_q.sum(axis=1, keepdims=True)
        d_adv = grad_q - grad_q.mean(axis=1, keepdims=True)

        d_a7, g["adv2.W"], g["adv2.b"] = dense_backward(cache["a7"], p["adv2.W"], d_adv)
        d_z7 = d_a7 * (cache["z7"] > 0)
        d_a4_adv, g["adv1.W"], g["adv1.b"] = dense_backward(cache["a4"], p["adv1.W"], d_z7)

        d_a5, g["value2.W"], g["value2.b"] = dense_backward(cache["a5"], p["value2.W"], d_value)
        d_z5 = d_a5 * (cache["z5"] > 0)
        d_a4_val, g["value1.W"], g["value1.b"] = dense_backward(cache["a4"], p["value1.W"], d_z5)

        d_z4 = (d_a4_adv + d_a4_val) * (cache["z4"] > 0)
        d_h, g["trunk.W"], g["trunk.b"] = dense_backward(cache["h"], p["trunk.W"], d_z4)

        conv_width = self.arch.conv_features
        d_a3 = d_h[:, conv_width:]
        d_z3 = d_a3 * (cache["z3"] > 0)
        _, g["situation.W"], g["situation.b"] = dense_backward(cache["s"], p["situation.W"], d_z3)

        d_a2 = d_h[:, :conv_width].reshape(cache["a2"].shape)
        d_z2 = d_a2 * (cache["z2"] > 0)
        d_a1, g["conv2.W"], g["conv2.b"] = conv2d_backward(
            cache["a1"], p["conv2.W"], d_z2, self.arch.conv2_stride
        )
        d_z1 = d_a1 * (cache["z1"] > 0)
        _, g["conv1.W"], g["conv1.b"] = conv2d_backward(
            cache["x0"], p["conv1.W"], d_z1, 1, need_input_grad=False
        )
        return {name: g[name] for name in self.params}


def qnet_forward(net: QNetwork, states: np.ndarray) -> tuple[np.ndarray, dict]:
    return net.forward(states)


def qnet_backward(net: QNetwork, cache: dict, grad_q: np.ndarray) -> dict[str, np.ndarray]:
    return net.backward(cache, grad_q)


class Adam:
    """Adam with bias correction and a linearly decaying learning rate."""

    def __init__(
        self,
        params: dict[str, np.ndarray],
        lr_start: float = 3e-4,
        lr_end: float = 1e-4,
        total_steps: int = 1,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.lr_start = lr_start
        self.lr_end = lr_end
        self.total_steps = max(int(total_steps), 1)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def learning_rate(self, step: int | None = None) -> float:
        """Rate used for the update taken after ``step`` completed updates."""
        step = self.step if step is None else step
        frac = min(step / self.total_steps, 1.0)
        return self.lr_start + (self.lr_end - self.lr_start) * frac

    def update(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        """In-place parameter update.

        Raises:
            ShapeMismatch: If a gradient is missing or has the wrong shape.
        """
        for name, value in params.items():
            if name not in grads or grads[name].shape != value.shape:
                raise ShapeMismatch(f"gradient for {name} missing or misshaped")
        lr = self.learning_rate()
        self.step += 1
        c1 = 1.0 - self.beta1**self.step
        c2 = 1.0 - self.beta2**self.step
        for name, value in params.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            value -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def adam_update(
    params: dict[str, np.ndarray], grads: dict[str, np.ndarray], opt: Adam
) -> dict[str, np.ndarray]:
    opt.update(params, grads)
    return params
