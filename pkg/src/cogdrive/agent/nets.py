"""Actor and critic networks over 3-frame top-down state stacks.

The actor encodes a 64x64 stack down to a 4x4 grid of 32-channel features,
runs single-head self-attention over the 16 spatial tokens, and feeds the
flattened context to two small MLP heads: a tanh-bounded longitudinal action
and a sigmoid-bounded time-to-collision estimate on [0, 5].  The critic uses
the same encoder topology (its own weights, no attention) and appends the
action to the flattened features before regressing a scalar Q value.
"""

from __future__ import annotations

import numpy as np

from ..nn import (Conv2d, Dense, Flatten, Layer, ReLU, ScaledSigmoid,
                  SelfAttention, Sequential, Tanh)
from ..reward import normalize_state
from ..sim.world import TTC_MAX

FEATURE_CHANNELS = 32
TOKEN_GRID = 4                      # 64 / 2^4 per side
N_TOKENS = TOKEN_GRID * TOKEN_GRID
FLAT_DIM = N_TOKENS * FEATURE_CHANNELS
HEAD_HIDDEN = 64


class TokenGrid(Layer):
    """(N, C, H, W) <-> (N, H*W, C): feature map as a token sequence."""

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._shape = x.shape
        n, c, h, w = x.shape
        return x.reshape(n, c, h * w).transpose(0, 2, 1)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        n, c, h, w = self._shape
        return np.ascontiguousarray(grad_out.transpose(0, 2, 1)) \
            .reshape(n, c, h, w)


def _encoder(rng: np.random.Generator) -> Sequential:
    """Four stride-2 3x3 convolutions: 3 -> 8 -> 16 -> 32 -> 32 channels."""
    chans = (3, 8, 16, FEATURE_CHANNELS, FEATURE_CHANNELS)
    layers = []
    for c_in, c_out in zip(chans[:-1], chans[1:]):
        layers += [Conv2d(c_in, c_out, rng, stride=2, padding=1), ReLU()]
    return Sequential(layers)


def _head(rng: np.random.Generator, out_activation: Layer) -> Sequential:
    return Sequential([Dense(FLAT_DIM, HEAD_HIDDEN, rng), ReLU(),
                       Dense(HEAD_HIDDEN, 1, rng), out_activation])


def _check_state_batch(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4 or x.shape[1:] != (3, 64, 64):
        raise ValueError(f"expected states (N, 3, 64, 64), got {x.shape}")
    return x


class PolicyNet:
    """Conv encoder + token self-attention + action/TTC heads."""

    def __init__(self, rng: np.random.Generator):
        self.encoder = _encoder(rng)
        self.tokens = TokenGrid()
        self.attention = SelfAttention(FEATURE_CHANNELS, FEATURE_CHANNELS,
                                       rng)
        self.flat = Flatten()
        self.action_head = _head(rng, Tanh())
        self.ttc_head = _head(rng, ScaledSigmoid(TTC_MAX))

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(N, 3, 64, 64) floats -> action (N, 1) in [-1, 1], ttc (N, 1)."""
        x = _check_state_batch(x)
        feats = self.encoder.forward(x)            # (N, 32, 4, 4)
        ctx = self.attention.forward(self.tokens.forward(feats))
        z = self.flat.forward(ctx)                 # (N, 512)
        return self.action_head.forward(z), self.ttc_head.forward(z)

    @property
    def last_attention(self) -> np.ndarray | None:
        """Row-stochastic (N, 16, 16) weights from the latest forward."""
        return self.attention.last_weights

    def backward(self, d_action=None, d_ttc=None) -> np.ndarray:
        """Backprop one or both heads; gradients accumulate into params."""
        if d_action is None and d_ttc is None:
            raise ValueError("need a gradient for at least one head")
        dz = 0.0
        if d_action is not None:
            dz = dz + self.action_head.backward(d_action)
        if d_ttc is not None:
            dz = dz + self.ttc_head.backward(d_ttc)
        d_ctx = self.flat.backward(dz)
        d_feats = self.tokens.backward(self.attention.backward(d_ctx))
        return self.encoder.backward(d_feats)

    def act(self, state) -> float:
        """Single class-id frame stack -> greedy action scalar."""
        action, _ = self.forward(normalize_state(state)[None])
        return float(action[0, 0])

    def named_params(self):
        out = []
        for prefix, module in (("encoder", self.encoder),
                               ("attention", self.attention),
                               ("action_head", self.action_head),
                               ("ttc_head", self.ttc_head)):
            out += [(f"{prefix}.{name}", p)
                    for name, p in module.named_params()]
        return out

    def params(self):
        return [p for _, p in self.named_params()]


class CriticNet:
    """Same encoder topology, action appended before the Q-value MLP."""

    def __init__(self, rng: np.random.Generator):
        self.encoder = _encoder(rng)
        self.flat = Flatten()
        self.mlp = Sequential([Dense(FLAT_DIM + 1, HEAD_HIDDEN, rng), ReLU(),
                               Dense(HEAD_HIDDEN, 1, rng)])

    def forward(self, x: np.ndarray, action: np.ndarray) -> np.ndarray:
        x = _check_state_batch(x)
        action = np.asarray(action, dtype=np.float64)
        if action.shape != (x.shape[0], 1):
            raise ValueError(f"action must be ({x.shape[0]}, 1), got "
                             f"{action.shape}")
        z = self.flat.forward(self.encoder.forward(x))
        q = self.mlp.forward(np.concatenate([z, action], axis=1))
        if not np.all(np.isfinite(q)):
            raise FloatingPointError("critic produced non-finite Q values")
        return q

    def backward(self, d_q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Returns (d_state, d_action) for the latest forward."""
        dza = self.mlp.backward(d_q)
        dz, d_action = dza[:, :FLAT_DIM], dza[:, FLAT_DIM:]
        d_state = self.encoder.backward(self.flat.backward(dz))
        return d_state, d_action

    def named_params(self):
        out = [(f"encoder.{n}", p) for n, p in self.encoder.named_params()]
        out += [(f"mlp.{n}", p) for n, p in self.mlp.named_params()]
        return out

    def params(self):
        return [p for _, p in self.named_params()]


def copy_params(src, dst) -> None:
    """Overwrite dst's parameters with src's values (same topology)."""
    src_named = src.named_params()
    dst_named = dst.named_params()
    if [n for n, _ in src_named] != [n for n, _ in dst_named]:
        raise ValueError("parameter name mismatch between networks")
    for (_, ps), (_, pd) in zip(src_named, dst_named):
        pd.value[...] = ps.value


def polyak_update(net, target, tau: float) -> None:
    """theta_target <- (1 - tau) * theta_target + tau * theta, elementwise."""
    for (_, p), (_, pt) in zip(net.named_params(), target.named_params()):
        pt.value *= 1.0 - tau
        pt.value += tau * p.value
