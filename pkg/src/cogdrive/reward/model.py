"""CNN scoring a frame stack for the probability of a high-amplitude trial.

The network is deliberately small -- three stride-2 convolutions, global
average pooling and a single sigmoid unit -- so per-frame inference stays
comfortably real-time on a CPU.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..nn import Adam, Conv2d, Dense, GlobalAvgPool, ReLU, Sequential, Sigmoid
from ..nn import bce_loss
from ..sim.render import CLASS_VEHICLE
from .dataset import STATE_SHAPE

# Class-id grids are fed to networks as floats in [0, 1].
_CLASS_SPAN = float(CLASS_VEHICLE)


@dataclass
class RewardModelConfig:
    conv_channels: tuple = (8, 16, 32)
    stride: int = 2
    epochs: int = 60
    lr: float = 5e-3
    batch_size: int = 16
    seed: int = 0

    def __post_init__(self):
        self.conv_channels = tuple(int(c) for c in self.conv_channels)
        if any(c <= 0 for c in self.conv_channels):
            raise ValueError("conv_channels must be positive")
        if self.stride not in (1, 2):
            raise ValueError("stride must be 1 or 2")
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("epochs and batch_size must be positive")
        if self.lr <= 0:
            raise ValueError("lr must be positive")


def normalize_state(state) -> np.ndarray:
    """Class-id frames (..., 3, 64, 64) -> float64 inputs in [0, 1]."""
    arr = np.asarray(state, dtype=np.float64)
    if arr.shape[-3:] != STATE_SHAPE:
        raise ValueError(f"state must end in {STATE_SHAPE}, got {arr.shape}")
    return arr / _CLASS_SPAN


def build_reward_model(config: RewardModelConfig,
                       rng: np.random.Generator | None = None) -> Sequential:
    """conv(s2)+relu x3 -> global average pool -> dense -> sigmoid."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    chans = (STATE_SHAPE[0],) + config.conv_channels
    layers = []
    for c_in, c_out in zip(chans[:-1], chans[1:]):
        layers += [Conv2d(c_in, c_out, rng, stride=config.stride, padding=1),
                   ReLU()]
    layers += [GlobalAvgPool(), Dense(chans[-1], 1, rng), Sigmoid()]
    return Sequential(layers)


def _check_class_counts(labels, minimum: int) -> None:
    n_high = int(np.sum(labels == 1))
    n_low = int(np.sum(labels == 0))
    if n_high < minimum or n_low < minimum:
        raise ValueError(f"need at least {minimum} examples per class, got "
                         f"{n_low} low / {n_high} high")


def train_reward_model(data, config: RewardModelConfig):
    """Train on labeled examples; returns (model, per-epoch mean losses).

    Binary cross-entropy against the high/low labels, Adam at ``config.lr``,
    minibatches reshuffled each epoch from the config seed.  The last entry
    of the loss history is the final training loss.
    """
    labels = np.array([ex.label for ex in data], dtype=np.float64)
    _check_class_counts(labels, 2)
    rng = np.random.default_rng(config.seed)
    model = build_reward_model(config, rng)
    x = normalize_state(np.stack([ex.state for ex in data]))
    y = labels[:, None]
    n = len(data)
    opt = Adam(model.params(), lr=config.lr)
    history = []
    for _ in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            pred = model.forward(x[idx])
            loss, grad = bce_loss(pred, y[idx])
            opt.zero_grad()
            model.backward(grad)
            opt.step()
            total += loss * len(idx)
        history.append(total / n)
    return model, history


def predict_cog(model: Sequential, state) -> float:
    """Probability that ``state`` belongs to the high-amplitude class."""
    arr = np.asarray(state)
    if arr.shape != STATE_SHAPE:
        raise ValueError(f"state must be {STATE_SHAPE}, got {arr.shape}")
    return float(model.forward(normalize_state(arr)[None])[0, 0])


def predict_batch(model: Sequential, states) -> np.ndarray:
    """Vectorized :func:`predict_cog` over (N, 3, 64, 64) stacks."""
    return model.forward(normalize_state(np.asarray(states)))[:, 0]


def measure_fps(model: Sequential, n_frames: int = 200,
                warmup: int = 10, seed: int = 0) -> float:
    """Wall-clock single-state inference throughput, warmup excluded."""
    if n_frames < 100:
        raise ValueError(f"n_frames must be >= 100, got {n_frames}")
    rng = np.random.default_rng(seed)
    pool = rng.integers(0, _CLASS_SPAN + 1, size=(8,) + STATE_SHAPE) \
        .astype(np.uint8)
    for i in range(warmup):
        predict_cog(model, pool[i % len(pool)])
    start = time.perf_counter()
    for i in range(n_frames):
        predict_cog(model, pool[i % len(pool)])
    elapsed = time.perf_counter() - start
    return n_frames / elapsed
