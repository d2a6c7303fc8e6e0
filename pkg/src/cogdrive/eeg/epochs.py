"""Epoching around event markers with baseline correction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .synth import EventMarker, RawEeg

FS_EPOCH = 250
PRE_SAMPLES = 50      # 200 ms before the marker
POST_SAMPLES = 200    # 800 ms after the marker
EPOCH_SAMPLES = PRE_SAMPLES + POST_SAMPLES + 1      # 251
SAMPLE_MS = 1000.0 / FS_EPOCH


@dataclass
class TrialRecord:
    epoch: np.ndarray             # (c, 251) µV, baseline-corrected
    marker: EventMarker
    erp_label: str | None = None  # "high" | "low" once labeled
    p2p: float | None = None
    peak_latency: float | None = None

    def times_ms(self) -> np.ndarray:
        return (np.arange(EPOCH_SAMPLES) - PRE_SAMPLES) * SAMPLE_MS


def epoch_trials(clean: RawEeg) -> tuple[list[TrialRecord], int]:
    """Cut [-200, +800] ms epochs; returns (trials, skipped_count).

    Each epoch is 251 samples at 250 Hz, baseline-corrected by subtracting
    the per-channel mean of [-200, 0) ms.  Markers whose window would cross
    a recording edge are skipped and counted.
    """
    if clean.fs != FS_EPOCH:
        raise ValueError(f"epoch_trials expects fs={FS_EPOCH}, got {clean.fs}")
    if not clean.markers:
        raise ValueError("no markers to epoch around")
    n = clean.channels.shape[1]
    trials: list[TrialRecord] = []
    skipped = 0
    for m in clean.markers:
        lo = m.sample_index - PRE_SAMPLES
        hi = m.sample_index + POST_SAMPLES + 1
        if lo < 0 or hi > n:
            skipped += 1
            continue
        epoch = clean.channels[:, lo:hi].copy()
        baseline = epoch[:, :PRE_SAMPLES].mean(axis=1, keepdims=True)
        epoch -= baseline
        trials.append(TrialRecord(epoch=epoch, marker=m))
    return trials, skipped


def grand_average(trials: list[TrialRecord], channel: int = 0) -> np.ndarray:
    """Pointwise mean waveform across trials for one channel."""
    if not trials:
        raise ValueError("grand_average needs at least one trial")
    return np.mean([t.epoch[channel] for t in trials], axis=0)
