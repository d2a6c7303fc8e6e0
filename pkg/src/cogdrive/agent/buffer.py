"""Replay storage for frame-stack transitions.

Consecutive stacks share two of their three frames, so frames are stored
once in a growing uint8 store and each transition keeps index triples for
its state and next state.  Transition slots recycle in a ring once capacity
is reached; the frame store itself grows with the number of pushed steps
(4 KB per step), which is comfortably small at the training budgets used
here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..sim.world import TTC_MAX


@dataclass
class Transition:
    state: np.ndarray           # (3, 64, 64) uint8
    action: float
    reward: float
    next_state: np.ndarray      # (3, 64, 64) uint8
    done: bool
    ttc_truth: float

    def __post_init__(self):
        for name in ("state", "next_state"):
            shape = np.shape(getattr(self, name))
            if shape != (3, 64, 64):
                raise ValueError(f"{name} must be (3, 64, 64), got {shape}")
        if not np.isfinite(self.reward):
            raise ValueError(f"reward must be finite, got {self.reward}")
        if not 0.0 <= self.ttc_truth <= TTC_MAX:
            raise ValueError(f"ttc_truth must be in [0, {TTC_MAX}], got "
                             f"{self.ttc_truth}")


class ReplayBuffer:
    """Ring buffer over transitions with shared-frame storage."""

    def __init__(self, capacity: int, seed: int = 0):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._frames: list[np.ndarray] = []
        self._state_idx = np.zeros((capacity, 3), dtype=np.int64)
        self._next_idx = np.zeros((capacity, 3), dtype=np.int64)
        self._action = np.zeros(capacity)
        self._reward = np.zeros(capacity)
        self._done = np.zeros(capacity, dtype=bool)
        self._ttc = np.zeros(capacity)
        self._size = 0
        self._pos = 0
        self._open_stack: tuple[int, int, int] | None = None
        self._rng = np.random.default_rng(seed)

    def __len__(self) -> int:
        return self._size

    def _push_frame(self, frame: np.ndarray) -> int:
        frame = np.asarray(frame, dtype=np.uint8)
        if frame.shape != (64, 64):
            raise ValueError(f"frame must be (64, 64), got {frame.shape}")
        self._frames.append(frame.copy())
        return len(self._frames) - 1

    def add(self, transition: Transition) -> None:
        """Append one step; episodes must be pushed in rollout order.

        When ``_open_stack`` is empty (start of an episode) all three state
        frames are stored; afterwards the state is assumed to equal the
        previous step's next state, so only the newest frame is added.
        A ``done`` transition closes the episode.
        """
        t = transition
        if self._open_stack is None:
            idx = tuple(self._push_frame(f) for f in t.state)
        else:
            idx = self._open_stack
        new = self._push_frame(t.next_state[-1])
        nxt = (idx[1], idx[2], new)
        p = self._pos
        self._state_idx[p] = idx
        self._next_idx[p] = nxt
        self._action[p] = t.action
        self._reward[p] = t.reward
        self._done[p] = t.done
        self._ttc[p] = t.ttc_truth
        self._pos = (p + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)
        self._open_stack = None if t.done else nxt

    def _gather(self, triples: np.ndarray) -> np.ndarray:
        out = np.empty((len(triples), 3, 64, 64), dtype=np.uint8)
        for row, (a, b, c) in enumerate(triples):
            out[row, 0] = self._frames[a]
            out[row, 1] = self._frames[b]
            out[row, 2] = self._frames[c]
        return out

    def sample(self, batch_size: int) -> dict:
        """Uniform sample with replacement; reproducible from the seed."""
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        rows = self._rng.integers(0, self._size, size=batch_size)
        return {
            "state": self._gather(self._state_idx[rows]),
            "action": self._action[rows, None].copy(),
            "reward": self._reward[rows, None].copy(),
            "next_state": self._gather(self._next_idx[rows]),
            "done": self._done[rows, None].astype(np.float64),
            "ttc_truth": self._ttc[rows, None].copy(),
        }
