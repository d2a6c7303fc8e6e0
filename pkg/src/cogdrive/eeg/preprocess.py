"""Offline preprocessing: zero-phase bandpass + notch, then decimate to 250 Hz.

The bandpass is a 4th-order Butterworth (0.5-100 Hz) applied as a biquad
cascade forward and backward, so it introduces no group delay.  Line noise is
removed with a second-order 50 Hz notch, also zero-phase.  Decimation keeps
every 4th sample -- the 100 Hz lowpass edge sits below the 125 Hz
post-decimation Nyquist, so no extra anti-aliasing stage is needed -- and
marker indices are divided by 4.
"""

from __future__ import annotations

from scipy.signal import butter, filtfilt, iirnotch, sosfiltfilt

from .synth import EventMarker, RawEeg

BAND_HZ = (0.5, 100.0)
BUTTER_ORDER = 4
NOTCH_HZ = 50.0
NOTCH_Q = 35.0
DECIMATE = 4


def preprocess(raw: RawEeg) -> RawEeg:
    """Filter and downsample a 1000 Hz session to 250 Hz."""
    if raw.fs != 1000:
        raise ValueError(f"preprocess expects fs=1000, got {raw.fs}")
    sos = butter(BUTTER_ORDER, BAND_HZ, btype="bandpass", output="sos",
                 fs=raw.fs)
    filtered = sosfiltfilt(sos, raw.channels, axis=1)
    b, a = iirnotch(NOTCH_HZ, NOTCH_Q, fs=raw.fs)
    filtered = filtfilt(b, a, filtered, axis=1)
    decimated = filtered[:, ::DECIMATE].copy()
    markers = [EventMarker(sample_index=m.sample_index // DECIMATE,
                           kind=m.kind, severity=m.severity,
                           reaction_time=m.reaction_time)
               for m in raw.markers]
    return RawEeg(channels=decimated, fs=raw.fs // DECIMATE, markers=markers)
