"""Preference-based reward learning from 2-second episode segments.

A scripted oracle compares two clips: fewer collisions wins; ties fall to
whichever clip tracked the 2 s following gap better; near-identical clips
(scores within 5%) are judged "cannot tell".  A per-state reward network is
then fit so that sigma(sum r(a) - sum r(b)) matches the oracle's choices
under the Bradley-Terry negative log-likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import Adam, Conv2d, Dense, GlobalAvgPool, ReLU, Sequential
from ..reward import normalize_state

CLIP_STEPS = 20                 # 2 s at dt = 0.1
PREFER_A = "prefer_a"
PREFER_B = "prefer_b"
CANNOT_TELL = "cannot_tell"
GAP_TARGET = 2.0
TIE_BAND = 0.05


@dataclass
class Clip:
    """One 2-second segment: its frames and behavior statistics."""

    clip_id: int
    states: np.ndarray          # (20, 3, 64, 64) uint8
    gap_times: np.ndarray       # (20,) seconds
    collisions: int

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.uint8)
        self.gap_times = np.asarray(self.gap_times, dtype=np.float64)
        if self.states.shape != (CLIP_STEPS, 3, 64, 64):
            raise ValueError(f"states must be ({CLIP_STEPS}, 3, 64, 64), "
                             f"got {self.states.shape}")
        if self.gap_times.shape != (CLIP_STEPS,):
            raise ValueError(f"gap_times must be ({CLIP_STEPS},), got "
                             f"{self.gap_times.shape}")
        if self.collisions < 0:
            raise ValueError("collisions must be >= 0")

    def gap_score(self) -> float:
        """Mean absolute deviation from the 2 s target gap (lower=better)."""
        return float(np.mean(np.abs(self.gap_times - GAP_TARGET)))


def clips_from_episode(states, gap_times, collided_flags, first_id: int = 0):
    """Chop one episode into non-overlapping 20-step clips (tail dropped)."""
    states = np.asarray(states, dtype=np.uint8)
    gap_times = np.asarray(gap_times, dtype=np.float64)
    collided_flags = np.asarray(collided_flags, dtype=bool)
    n = len(states) // CLIP_STEPS
    clips = []
    for i in range(n):
        sl = slice(i * CLIP_STEPS, (i + 1) * CLIP_STEPS)
        clips.append(Clip(clip_id=first_id + i, states=states[sl],
                          gap_times=gap_times[sl],
                          collisions=int(collided_flags[sl].sum())))
    return clips


def bt_preference_oracle(clip_a: Clip, clip_b: Clip) -> str:
    """Scripted judgment over two clips; antisymmetric by construction."""
    if len(clip_a.gap_times) != len(clip_b.gap_times):
        raise ValueError("clips must have the same length")
    if clip_a.collisions != clip_b.collisions:
        return PREFER_A if clip_a.collisions < clip_b.collisions else PREFER_B
    sa, sb = clip_a.gap_score(), clip_b.gap_score()
    if sa == sb or abs(sa - sb) < TIE_BAND * max(sa, sb):
        return CANNOT_TELL
    return PREFER_A if sa < sb else PREFER_B


def build_segment_reward_net(seed: int = 0) -> Sequential:
    """Per-state reward: the classifier trunk with a linear output."""
    rng = np.random.default_rng(seed)
    chans = (3, 8, 16, 32)
    layers = []
    for c_in, c_out in zip(chans[:-1], chans[1:]):
        layers += [Conv2d(c_in, c_out, rng, stride=2, padding=1), ReLU()]
    layers += [GlobalAvgPool(), Dense(chans[-1], 1, rng)]
    return Sequential(layers)


def segment_return(net: Sequential, clip: Clip) -> float:
    """Sum of per-state rewards over the clip."""
    return float(net.forward(normalize_state(clip.states)).sum())


def predict_preference(net: Sequential, clip_a: Clip, clip_b: Clip) -> float:
    """P(a preferred over b) = sigma(sum r(a) - sum r(b))."""
    s = segment_return(net, clip_a) - segment_return(net, clip_b)
    if s >= 0:
        return float(1.0 / (1.0 + np.exp(-s)))
    e = np.exp(s)
    return float(e / (1.0 + e))


def bt_train(queries, seed: int = 0, epochs: int = 4, lr: float = 2e-3,
             batch_pairs: int = 8):
    """Fit the segment reward net to oracle choices.

    ``queries`` is a list of (clip_a, clip_b, choice); cannot_tell entries
    carry no ranking signal and are dropped.  Returns
    ``(net, per-epoch mean NLL)``.
    """
    usable = [(a, b, c) for a, b, c in queries if c != CANNOT_TELL]
    if not usable:
        raise ValueError("no informative queries: every pair is cannot_tell")
    rng = np.random.default_rng(seed)
    net = build_segment_reward_net(seed)
    opt = Adam(net.params(), lr=lr)
    n = len(usable)
    history = []
    for _ in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_pairs):
            idx = order[start:start + batch_pairs]
            pairs = [usable[i] for i in idx]
            m = len(pairs)
            stacked = np.concatenate(
                [np.concatenate([a.states, b.states]) for a, b, _ in pairs])
            rewards = net.forward(normalize_state(stacked))[:, 0]
            per_clip = rewards.reshape(m, 2, CLIP_STEPS).sum(axis=2)
            s = per_clip[:, 0] - per_clip[:, 1]
            t = np.array([1.0 if c == PREFER_A else 0.0 for _, _, c in pairs])
            nll = np.logaddexp(0.0, -s) * t + np.logaddexp(0.0, s) * (1.0 - t)
            total += float(nll.sum())
            p = np.where(s >= 0, 1.0 / (1.0 + np.exp(-np.abs(s))),
                         np.exp(-np.abs(s)) / (1.0 + np.exp(-np.abs(s))))
            d_s = (p - t) / m                       # d mean-NLL / d s_i
            grad = np.repeat(
                np.stack([d_s, -d_s], axis=1).reshape(-1), CLIP_STEPS)
            opt.zero_grad()
            net.backward(grad[:, None])
            opt.step()
        history.append(total / n)
    return net, history
