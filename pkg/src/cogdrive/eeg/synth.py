"""Synthetic oddball-style EEG sessions locked to brake events.

A session is pink (1/f) noise plus 50 Hz line interference plus a slow
sinusoidal drift, with one Gaussian P3-like template added per brake event.
Template amplitude grows with event severity -- ``amplitude_scale * (0.5 +
severity)`` -- and its peak latency is drawn from N(400 ms, jitter), truncated
to the 300-500 ms band.  The simulated reaction time is the latency plus a
positive offset plus noise, so latency and RT are positively correlated by
construction.

Everything is generated at 1000 Hz in microvolts; severity-free callers can
use :func:`make_default_schedule` for a plausible 4-7 s event spacing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FS_RAW = 1000
TEMPLATE_SIGMA_MS = 70.0
LATENCY_BAND_MS = (300.0, 500.0)
RT_OFFSET_S = 0.15
RT_FLOOR_S = 0.05
# Fronto-central montage falloff: channel 0 is the midline labeling channel.
TOPOGRAPHY_DECAY = 0.18
DRIFT_AMP_PER_SIGMA = 6.0
DRIFT_FREQ_BAND = (0.05, 0.1)
SESSION_TAIL_S = 2.0


@dataclass
class SynthConfig:
    n_channels: int = 4
    session_seconds: float | None = None   # derived from the schedule if None
    erp_peak_latency_mean: float = 400.0   # ms
    erp_latency_jitter: float = 40.0       # ms
    amplitude_scale: float = 1.5           # µV; calibrated for a 50/50 split
    noise_sigma: float = 0.4               # µV
    line_noise_amp: float = 2.0            # µV
    rt_noise: float = 0.03                 # s
    seed: int = 0

    def __post_init__(self):
        for name in ("erp_latency_jitter", "amplitude_scale", "noise_sigma",
                     "line_noise_amp", "rt_noise"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.n_channels < 1:
            raise ValueError("n_channels must be >= 1")


@dataclass
class EventMarker:
    sample_index: int
    kind: str = "brake_onset"
    severity: float = 0.0
    reaction_time: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.severity <= 1.0:
            raise ValueError(f"severity must be in [0,1], got {self.severity}")


@dataclass
class RawEeg:
    channels: np.ndarray                 # (c, n) in µV
    fs: int
    markers: list = field(default_factory=list)

    def __post_init__(self):
        self.channels = np.asarray(self.channels, dtype=np.float64)
        if self.channels.ndim != 2:
            raise ValueError("channels must be a (c, n) array")
        if self.fs not in (1000, 250):
            raise ValueError(f"fs must be 1000 or 250, got {self.fs}")
        if not np.all(np.isfinite(self.channels)):
            raise ValueError("channels contain non-finite samples")
        n = self.channels.shape[1]
        for m in self.markers:
            if not 0 <= m.sample_index < n:
                raise ValueError(f"marker at {m.sample_index} outside "
                                 f"recording of {n} samples")


def make_default_schedule(n_events: int, seed: int = 0,
                          rng: np.random.Generator | None = None):
    """Brake schedule with 4-7 s spacing and uniform severities in [0, 1]."""
    if n_events < 1:
        raise ValueError("n_events must be >= 1")
    if rng is None:
        rng = np.random.default_rng(seed)
    times = np.cumsum(rng.uniform(4.0, 7.0, size=n_events))
    severities = rng.uniform(0.0, 1.0, size=n_events)
    return list(zip(times.tolist(), severities.tolist()))


def _pink_noise(n: int, rng: np.random.Generator, n_sources: int = 16):
    """Voss-McCartney: sum of random sources held for octave-spaced spans."""
    total = np.zeros(n)
    for k in range(n_sources):
        step = 2 ** k
        if step > n:
            break
        m = (n + step - 1) // step
        total += np.repeat(rng.normal(size=m), step)[:n]
    std = total.std()
    return total / std if std > 0 else total


def _topography(n_channels: int) -> np.ndarray:
    return 1.0 / (1.0 + TOPOGRAPHY_DECAY * np.arange(n_channels))


def synth_session(config: SynthConfig, schedule) -> RawEeg:
    """Generate one session; ``schedule`` is a list of (time_s, severity)."""
    schedule = list(schedule)
    if not schedule:
        raise ValueError("brake schedule must be non-empty")
    rng = np.random.default_rng(config.seed)
    last_event = max(t for t, _ in schedule)
    seconds = config.session_seconds
    if seconds is None:
        seconds = last_event + SESSION_TAIL_S
    n = int(round(seconds * FS_RAW))
    if n <= int(last_event * FS_RAW):
        raise ValueError("session_seconds too short for the schedule")

    c = config.n_channels
    t = np.arange(n) / FS_RAW
    topo = _topography(c)
    channels = np.zeros((c, n))

    line_phase = rng.uniform(0, 2 * np.pi, size=c)
    drift_freq = rng.uniform(*DRIFT_FREQ_BAND, size=c)
    drift_phase = rng.uniform(0, 2 * np.pi, size=c)
    for ch in range(c):
        if config.noise_sigma > 0:
            channels[ch] += config.noise_sigma * _pink_noise(n, rng)
            channels[ch] += DRIFT_AMP_PER_SIGMA * config.noise_sigma * \
                np.sin(2 * np.pi * drift_freq[ch] * t + drift_phase[ch])
        if config.line_noise_amp > 0:
            channels[ch] += config.line_noise_amp * \
                np.sin(2 * np.pi * 50.0 * t + line_phase[ch])

    sigma = TEMPLATE_SIGMA_MS / 1000.0
    markers = []
    for time_s, severity in schedule:
        latency_ms = float(np.clip(
            rng.normal(config.erp_peak_latency_mean, config.erp_latency_jitter),
            *LATENCY_BAND_MS))
        amp = config.amplitude_scale * (0.5 + severity)
        peak_s = time_s + latency_ms / 1000.0
        lo = max(0, int((peak_s - 4 * sigma) * FS_RAW))
        hi = min(n, int((peak_s + 4 * sigma) * FS_RAW) + 1)
        window = t[lo:hi]
        bump = np.exp(-0.5 * ((window - peak_s) / sigma) ** 2)
        channels[:, lo:hi] += amp * topo[:, None] * bump[None, :]
        rt = max(latency_ms / 1000.0 + RT_OFFSET_S
                 + rng.normal(0.0, config.rt_noise), RT_FLOOR_S)
        markers.append(EventMarker(sample_index=int(round(time_s * FS_RAW)),
                                   severity=float(severity),
                                   reaction_time=float(rt)))
    return RawEeg(channels=channels, fs=FS_RAW, markers=markers)
