"""DSP oracle tests on constructed signals."""

import numpy as np
import pytest

from emosura.bench.features import (
    FRAME_S,
    HOP_S,
    extract_features,
    load_wav,
)
from emosura.errors import SilentAudio, TooShort

SR = 16000


def _tone(f0=220.0, amplitude=0.5, duration=2.0, sr=SR):
    t = np.arange(int(duration * sr)) / sr
    return amplitude * np.sin(2 * np.pi * f0 * t)


def test_pure_tone_pitch_jitter_shimmer():
    features = extract_features(_tone(), SR)
    assert features.voiced
    assert features.pitch_median_hz == pytest.approx(220.0, abs=2.0)
    assert features.jitter_pct < 0.2
    assert features.shimmer_pct < 0.2
    # RMS of a 0.5-amplitude sine: 20 log10(0.5 / sqrt(2)).
    assert features.loudness_dbfs == pytest.approx(-9.0309, abs=0.05)


def test_silence_raises():
    with pytest.raises(SilentAudio):
        extract_features(np.zeros(SR), SR)


def test_too_short_raises():
    with pytest.raises(TooShort):
        extract_features(_tone(duration=0.3), SR)


def test_low_sample_rate_rejected():
    with pytest.raises(ValueError):
        extract_features(_tone(sr=4000), 4000)


def _vibrato_tone(f0=220.0, depth=0.05, rate_hz=5.0, duration=2.0, sr=SR):
    """Frequency-modulated sine: f(t) = f0 (1 + depth sin(2 pi rate t))."""
    t = np.arange(int(duration * sr)) / sr
    phase = 2 * np.pi * f0 * (t + (depth / (2 * np.pi * rate_hz))
                              * (1 - np.cos(2 * np.pi * rate_hz * t)))
    return 0.5 * np.sin(phase), t


def _expected_period_jitter(f0, depth, rate_hz, duration, sr):
    """Oracle: jitter of the true period track sampled at frame centers."""
    hop = HOP_S
    centers = np.arange(0, duration - FRAME_S, hop) + FRAME_S / 2
    freq = f0 * (1 + depth * np.sin(2 * np.pi * rate_hz * centers))
    periods = 1.0 / freq
    return 100.0 * np.mean(np.abs(np.diff(periods))) / periods.mean()


def test_one_percent_wobble_jitter():
    # depth 0.05 at 5 Hz yields ~1% frame-to-frame period jitter.
    signal, _t = _vibrato_tone()
    features = extract_features(signal, SR)
    assert features.jitter_pct == pytest.approx(1.0, abs=0.3)
    oracle = _expected_period_jitter(220.0, 0.05, 5.0, 2.0, SR)
    assert features.jitter_pct == pytest.approx(oracle, abs=0.3)
    assert features.pitch_std_hz > 0


def test_amplitude_wobble_shimmer():
    t = np.arange(int(2.0 * SR)) / SR
    depth, rate_hz = 0.05, 4.0
    envelope = 1.0 + depth * np.sin(2 * np.pi * rate_hz * t)
    signal = 0.4 * envelope * np.sin(2 * np.pi * 220.0 * t)
    features = extract_features(signal, SR)
    # Same derivation as jitter, applied to the amplitude track.
    centers = np.arange(0, 2.0 - FRAME_S, HOP_S) + FRAME_S / 2
    amps = 1.0 + depth * np.sin(2 * np.pi * rate_hz * centers)
    oracle = 100.0 * np.mean(np.abs(np.diff(amps))) / amps.mean()
    assert features.shimmer_pct == pytest.approx(oracle, abs=0.4)
    assert features.shimmer_pct > 0.3


def test_unvoiced_but_audible_clip():
    # A 30 Hz fundamental sits below the pitch search range: no interior
    # correlation peak, but plenty of energy.
    signal = _tone(f0=30.0)
    features = extract_features(signal, SR)
    assert not features.voiced
    assert features.pitch_median_hz == 0.0
    assert features.jitter_pct == 0.0
    assert features.loudness_dbfs > -60.0


def test_tempo_tracks_amplitude_modulation():
    t = np.arange(int(3.5 * SR)) / SR
    am = (1 + 0.3 * np.sin(2 * np.pi * 3.0 * t)) / 1.3
    signal = 0.5 * am * np.sin(2 * np.pi * 220.0 * t)
    features = extract_features(signal, SR)
    assert features.tempo_peaks_per_s == pytest.approx(3.0, abs=0.5)


def test_wav_roundtrip_int16_and_float(tmp_path):
    from scipy.io import wavfile

    signal = _tone(duration=0.6)
    int_path = tmp_path / "i.wav"
    wavfile.write(int_path, SR, (signal * 32767).astype(np.int16))
    loaded, sr = load_wav(int_path)
    assert sr == SR
    assert np.max(np.abs(loaded - signal)) < 1e-3

    float_path = tmp_path / "f.wav"
    wavfile.write(float_path, SR, signal.astype(np.float32))
    loaded_f, _sr = load_wav(float_path)
    assert np.max(np.abs(loaded_f - signal)) < 1e-6

    stereo_path = tmp_path / "s.wav"
    wavfile.write(stereo_path, SR, np.stack([signal, signal], axis=1).astype(np.float32))
    loaded_s, _sr = load_wav(stereo_path)
    assert loaded_s.ndim == 1
