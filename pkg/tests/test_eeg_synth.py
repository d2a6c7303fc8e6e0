"""Synthetic session generator: schedules, templates, determinism."""

import numpy as np
import pytest

from cogdrive.eeg import (
    EventMarker,
    RawEeg,
    SynthConfig,
    make_default_schedule,
    synth_session,
    pearson,
)


def test_default_schedule_intervals_in_band():
    sched = make_default_schedule(300, seed=11)
    times = [t for t, _ in sched]
    gaps = np.diff([0.0] + times)
    assert np.all((gaps >= 4.0) & (gaps <= 7.0))
    sevs = np.array([s for _, s in sched])
    assert np.all((sevs >= 0.0) & (sevs <= 1.0))


def test_markers_lie_on_schedule_and_in_bounds():
    sched = make_default_schedule(20, seed=3)
    raw = synth_session(SynthConfig(seed=5), sched)
    assert raw.fs == 1000
    assert len(raw.markers) == 20
    for (t, sev), m in zip(sched, raw.markers):
        assert m.sample_index == int(round(t * 1000))
        assert m.severity == sev
        assert 0 <= m.sample_index < raw.channels.shape[1]


def test_noiseless_session_is_pure_template():
    sev = 0.6
    cfg = SynthConfig(noise_sigma=0.0, line_noise_amp=0.0, seed=9)
    raw = synth_session(cfg, [(5.0, sev)])
    ch0 = raw.channels[0]
    peak_idx = int(np.argmax(ch0))
    latency_ms = peak_idx - 5000
    assert 300 <= latency_ms <= 500
    # Peak value equals the configured amplitude on the midline channel.
    want_amp = cfg.amplitude_scale * (0.5 + sev)
    assert abs(ch0[peak_idx] - want_amp) < 1e-4 * want_amp
    # Signal is zero away from the template support.
    assert np.all(np.abs(ch0[:4000]) < 1e-12)
    # Other channels carry the same bump scaled down.
    assert 0 < np.max(raw.channels[1]) < want_amp


def test_latency_rt_positive_correlation_noiseless():
    # With no noise, each event's raw peak is exactly the drawn latency.
    sched = make_default_schedule(200, seed=21)
    cfg = SynthConfig(noise_sigma=0.0, line_noise_amp=0.0, seed=22)
    raw = synth_session(cfg, sched)
    lats, rts = [], []
    for m in raw.markers:
        seg = raw.channels[0, m.sample_index:m.sample_index + 800]
        lats.append(float(np.argmax(seg)))
        rts.append(m.reaction_time)
    r, _ = pearson(lats, rts, n_perm=200, seed=0)
    assert r > 0.3


def test_synthesis_is_deterministic():
    sched = make_default_schedule(10, seed=1)
    a = synth_session(SynthConfig(seed=33), sched)
    b = synth_session(SynthConfig(seed=33), sched)
    np.testing.assert_array_equal(a.channels, b.channels)
    assert [m.reaction_time for m in a.markers] == \
        [m.reaction_time for m in b.markers]


def test_empty_schedule_rejected():
    with pytest.raises(ValueError, match="non-empty"):
        synth_session(SynthConfig(), [])


def test_config_and_type_validation():
    with pytest.raises(ValueError):
        SynthConfig(noise_sigma=-1.0)
    with pytest.raises(ValueError):
        EventMarker(sample_index=0, severity=1.5)
    with pytest.raises(ValueError):
        RawEeg(channels=np.zeros((2, 10)), fs=500)
    with pytest.raises(ValueError):
        RawEeg(channels=np.full((1, 10), np.nan), fs=1000)
    with pytest.raises(ValueError):
        RawEeg(channels=np.zeros((1, 10)), fs=1000,
               markers=[EventMarker(sample_index=10)])


def test_pink_noise_has_one_over_f_character():
    # Power in the 1-4 Hz band must exceed power in 40-43 Hz for 1/f noise.
    raw = synth_session(SynthConfig(seed=2, line_noise_amp=0.0),
                        make_default_schedule(40, seed=2))
    x = raw.channels[0] - raw.channels[0].mean()
    spec = np.abs(np.fft.rfft(x)) ** 2
    freqs = np.fft.rfftfreq(x.size, d=1e-3)
    low = spec[(freqs >= 1) & (freqs < 4)].mean()
    high = spec[(freqs >= 40) & (freqs < 43)].mean()
    assert low > 5 * high
