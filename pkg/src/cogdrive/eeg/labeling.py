"""Single-trial ERP amplitude labeling.

The post-stimulus segment (0-800 ms) of the designated midline channel is
smoothed with a centered 20-sample moving average (80 ms at 250 Hz, truncated
at the segment edges).  A trial is labeled high if the smoothed peak-to-peak
amplitude reaches 1.7 µV; the peak latency is the time of the smoothed
maximum.
"""

from __future__ import annotations

import numpy as np

from .epochs import PRE_SAMPLES, SAMPLE_MS, TrialRecord

SMOOTH_WINDOW = 20
P2P_THRESHOLD = 1.7   # µV
LABEL_CHANNEL = 0     # midline channel of the synthetic montage


def moving_average_centered(x: np.ndarray,
                            window: int = SMOOTH_WINDOW) -> np.ndarray:
    """Centered moving average with edge truncation.

    Output i averages x[max(0, i - window//2) : min(n, i + window//2)], i.e.
    a full ``window`` samples in the interior and fewer near the edges.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    half = window // 2
    cs = np.concatenate([[0.0], np.cumsum(x)])
    lo = np.maximum(np.arange(n) - half, 0)
    hi = np.minimum(np.arange(n) + half, n)
    return (cs[hi] - cs[lo]) / (hi - lo)


def label_erp(trial: TrialRecord,
              channel: int = LABEL_CHANNEL) -> tuple[str, float, float]:
    """Label one trial; fills and returns (label, p2p, peak_latency_ms)."""
    post = trial.epoch[channel, PRE_SAMPLES:]
    smoothed = moving_average_centered(post)
    p2p = float(smoothed.max() - smoothed.min())
    label = "high" if p2p >= P2P_THRESHOLD else "low"
    peak_latency = float(np.argmax(smoothed) * SAMPLE_MS)
    trial.erp_label = label
    trial.p2p = p2p
    trial.peak_latency = peak_latency
    return label, p2p, peak_latency
