"""Paralinguistic feature extraction from mono PCM audio.

Declared approximations of the named features, not a re-implementation of
any external toolkit: pitch by normalized autocorrelation with parabolic peak
refinement, loudness as RMS dBFS, jitter/shimmer as relative frame-to-frame
period/amplitude deviation over voiced frames, tempo as the peak rate of the
smoothed energy envelope. Frame 25 ms, hop 10 ms, voicing threshold 0.3,
pitch search range 50-600 Hz; parameters are pinned here.
"""

from __future__ import annotations

import numpy as np

from ..errors import SilentAudio, TooShort
from ..types import AcousticFeatures

FRAME_S = 0.025
HOP_S = 0.010
VOICING_THRESHOLD = 0.3
PITCH_MIN_HZ = 50.0
PITCH_MAX_HZ = 600.0
MIN_DURATION_S = 0.5
MIN_SAMPLE_RATE = 8000
SILENCE_FLOOR_DBFS = -60.0
_ENVELOPE_SMOOTH_FRAMES = 5


def frame_signal(samples: np.ndarray, sample_rate: int) -> np.ndarray:
    """(n_frames, frame_len) view of the signal at the pinned frame/hop."""
    frame_len = int(round(FRAME_S * sample_rate))
    hop_len = int(round(HOP_S * sample_rate))
    n = 1 + max(0, (len(samples) - frame_len) // hop_len)
    idx = np.arange(frame_len)[None, :] + hop_len * np.arange(n)[:, None]
    return samples[idx]


def _frame_pitch(frame: np.ndarray, sample_rate: int) -> tuple[float, float]:
    """(f0_hz, peak_correlation) for one frame; f0 is 0.0 when unvoiced.

    Normalized cross-correlation over the pitch lag range; among local maxima
    within 10% of the global peak the smallest lag wins, which suppresses
    period-multiple (octave-down) picks. The winning lag is refined by
    parabolic interpolation.
    """
    w = len(frame)
    lag_min = max(2, int(sample_rate / PITCH_MAX_HZ))
    lag_max = min(w - 2, int(sample_rate / PITCH_MIN_HZ))
    if lag_max <= lag_min:
        return 0.0, 0.0
    ac = np.correlate(frame, frame, mode="full")[w - 1:]
    csq = np.cumsum(frame * frame)
    total = csq[-1]
    if total <= 0:
        return 0.0, 0.0
    taus = np.arange(lag_min, lag_max + 1)
    e0 = csq[w - taus - 1]
    e1 = total - csq[taus - 1]
    denom = np.sqrt(e0 * e1)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(denom > 0, ac[taus] / denom, 0.0)
    # Voicing needs an interior local maximum: a monotone correlation curve
    # (e.g. a sub-range fundamental) must not count as pitched.
    interior = (r[1:-1] >= r[:-2]) & (r[1:-1] >= r[2:])
    maxima = np.flatnonzero(interior) + 1
    if maxima.size == 0:
        return 0.0, float(r.max())
    peak = float(r[maxima].max())
    if peak < VOICING_THRESHOLD:
        return 0.0, peak
    candidates = maxima[r[maxima] >= 0.9 * peak]
    i = int(candidates[0])
    lag = float(taus[i])
    if 0 < i < len(r) - 1:
        denom2 = r[i - 1] - 2.0 * r[i] + r[i + 1]
        if denom2 < 0:
            lag += 0.5 * (r[i - 1] - r[i + 1]) / denom2
    return sample_rate / lag, peak


def extract_features(samples, sample_rate: int) -> AcousticFeatures:
    """Extract the paralinguistic feature set from one clip.

    Raises TooShort below 0.5 s, SilentAudio when nothing is voiced and the
    level sits under -60 dBFS. A clip that is unvoiced but audible comes back
    with ``voiced=False`` and zeroed pitch/jitter/shimmer.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if sample_rate < MIN_SAMPLE_RATE:
        raise ValueError(f"sample rate {sample_rate} below minimum {MIN_SAMPLE_RATE}")
    if len(samples) < MIN_DURATION_S * sample_rate:
        raise TooShort(f"clip shorter than {MIN_DURATION_S}s")
    duration_s = len(samples) / sample_rate

    rms = float(np.sqrt(np.mean(samples * samples)))
    loudness = float(20.0 * np.log10(rms)) if rms > 0 else -float("inf")

    frames = frame_signal(samples, sample_rate)
    f0 = np.zeros(len(frames))
    peak_amp = np.zeros(len(frames))
    frame_rms = np.zeros(len(frames))
    for k, frame in enumerate(frames):
        f0[k], _corr = _frame_pitch(frame, sample_rate)
        peak_amp[k] = float(np.max(np.abs(frame)))
        frame_rms[k] = float(np.sqrt(np.mean(frame * frame)))
    voiced_mask = f0 > 0

    if not voiced_mask.any():
        if loudness < SILENCE_FLOOR_DBFS:
            raise SilentAudio(f"unvoiced clip at {loudness:.1f} dBFS")
        return AcousticFeatures(
            pitch_median_hz=0.0, pitch_std_hz=0.0,
            loudness_dbfs=loudness, jitter_pct=0.0, shimmer_pct=0.0,
            tempo_peaks_per_s=_tempo(frame_rms, duration_s), voiced=False,
        )

    voiced_f0 = f0[voiced_mask]
    periods = 1.0 / voiced_f0
    amps = peak_amp[voiced_mask]

    # Consecutive pairs = adjacent frames that are both voiced.
    both = voiced_mask[:-1] & voiced_mask[1:]
    p_series = 1.0 / np.where(voiced_mask, f0, np.nan)
    dp = np.abs(p_series[1:] - p_series[:-1])[both]
    a_series = np.where(voiced_mask, peak_amp, np.nan)
    da = np.abs(a_series[1:] - a_series[:-1])[both]
    jitter = 100.0 * float(dp.mean() / periods.mean()) if dp.size else 0.0
    shimmer = 100.0 * float(da.mean() / amps.mean()) if da.size and amps.mean() > 0 else 0.0

    return AcousticFeatures(
        pitch_median_hz=float(np.median(voiced_f0)),
        pitch_std_hz=float(voiced_f0.std()),
        loudness_dbfs=loudness,
        jitter_pct=jitter,
        shimmer_pct=shimmer,
        tempo_peaks_per_s=_tempo(frame_rms, duration_s),
        voiced=True,
    )


def _tempo(frame_rms: np.ndarray, duration_s: float) -> float:
    """Peaks of the smoothed energy envelope above its mean, per second."""
    if len(frame_rms) < 3:
        return 0.0
    kernel = np.ones(_ENVELOPE_SMOOTH_FRAMES) / _ENVELOPE_SMOOTH_FRAMES
    envelope = np.convolve(frame_rms, kernel, mode="same")
    mean = envelope.mean()
    # Relative margin keeps float noise on a flat envelope from counting.
    floor = mean * (1.0 + 1e-9)
    interior = (
        (envelope[1:-1] > envelope[:-2])
        & (envelope[1:-1] >= envelope[2:])
        & (envelope[1:-1] > floor)
    )
    return float(np.count_nonzero(interior) / duration_s)


def load_wav(path) -> tuple[np.ndarray, int]:
    """Read a PCM WAV (16-bit int or float) as mono float in [-1, 1]."""
    from scipy.io import wavfile

    sample_rate, data = wavfile.read(path)
    data = np.asarray(data)
    if data.ndim == 2:
        data = data.mean(axis=1)
    if data.dtype == np.int16:
        data = data.astype(float) / 32768.0
    elif data.dtype == np.int32:
        data = data.astype(float) / 2147483648.0
    else:
        data = data.astype(float)
    return data, int(sample_rate)
