"""Surface EMG cleaning and time/frequency feature extraction.

Muscle fatigue shows up most clearly in the spectrum: the median frequency
drifts downward as fatigue accumulates while overall activation (RMS, MAV)
tends to rise. The time-domain set follows the standard Hudgins features;
zero crossings and slope sign changes use an amplitude hysteresis tied to
the window RMS so the counts are unit independent.
"""
from __future__ import annotations

from typing import Dict

import numpy as np
from scipy.signal import welch

from .errors import DataError, InvalidSpecError
from .signals import (
    FilterKind,
    FilterSpec,
    SampledSignal,
    apply_filter,
    design_butterworth,
    design_notch,
)

MIN_CLEAN_FS_HZ = 120.0
NOTCH_HZ = 50.0
NOTCH_Q = 30.0
HIGHPASS_HZ = 10.0
HYSTERESIS_RMS_FRAC = 0.01
BAND_POWER_RANGE_HZ = (20.0, 450.0)
MIN_TIME_SPAN_S = 0.5
MIN_FREQ_SPAN_S = 1.0

TIME_FEATURE_NAMES = (
    "mav",
    "rms",
    "variance",
    "waveform_length",
    "zero_crossings",
    "slope_sign_changes",
    "integrated_emg",
)
FREQ_FEATURE_NAMES = (
    "mean_freq_hz",
    "median_freq_hz",
    "peak_freq_hz",
    "band_power_20_450",
)


def clean_emg(raw: SampledSignal, notch_hz: float = NOTCH_HZ, notch_q: float = NOTCH_Q) -> SampledSignal:
    """Remove mains interference and baseline drift.

    Applies a notch at ``notch_hz`` (default 50 Hz, Q 30) followed by a
    4th-order high-pass at 10 Hz, both zero phase.
    """
    fs = raw.sampling_rate_hz
    if fs <= MIN_CLEAN_FS_HZ:
        raise InvalidSpecError(
            f"EMG cleaning needs sampling rate > {MIN_CLEAN_FS_HZ} Hz, got {fs}"
        )
    out = apply_filter(raw, design_notch(notch_hz, notch_q, fs), zero_phase=True)
    hp = design_butterworth(FilterSpec(FilterKind.HIGHPASS, HIGHPASS_HZ, order=4), fs)
    return apply_filter(out, hp, zero_phase=True)


def _check_span(sig: SampledSignal, min_span_s: float, what: str) -> None:
    if sig.duration_s < min_span_s:
        raise DataError(
            f"{what} needs at least {min_span_s} s of signal, "
            f"got {sig.duration_s:.3f} s"
        )


def emg_time_features(sig: SampledSignal) -> Dict[str, float]:
    """Hudgins-style time-domain features over one window.

    Zero crossings and slope sign changes only count excursions larger
    than ``HYSTERESIS_RMS_FRAC`` times the window RMS, which suppresses
    counts driven by low-level noise.
    """
    _check_span(sig, MIN_TIME_SPAN_S, "time features")
    x = np.asarray(sig.samples, dtype=float)
    rms = float(np.sqrt(np.mean(x**2)))
    thr = HYSTERESIS_RMS_FRAC * rms

    dx = np.diff(x)
    sign_flip = ((x[:-1] > 0) & (x[1:] < 0)) | ((x[:-1] < 0) & (x[1:] > 0))
    zc = int(np.count_nonzero(sign_flip & (np.abs(dx) >= thr)))

    back = x[1:-1] - x[:-2]
    fwd = x[1:-1] - x[2:]
    extremum = back * fwd > 0
    big_enough = (np.abs(back) >= thr) | (np.abs(fwd) >= thr)
    ssc = int(np.count_nonzero(extremum & big_enough))

    return {
        "mav": float(np.mean(np.abs(x))),
        "rms": rms,
        "variance": float(np.var(x)),
        "waveform_length": float(np.sum(np.abs(dx))),
        "zero_crossings": float(zc),
        "slope_sign_changes": float(ssc),
        "integrated_emg": float(np.sum(np.abs(x))),
    }


def emg_freq_features(sig: SampledSignal) -> Dict[str, float]:
    """Spectral features from a Welch estimate (1 s Hann segments, 50% overlap).

    The DC bin is excluded so centroid and peak stay inside (0, fs/2).
    Median frequency is the first bin where cumulative power reaches half
    the total. ``band_power_20_450`` is the fraction of spectral power in
    20-450 Hz (clamped to Nyquist) times the signal mean square, which
    keeps it bounded by the total signal power.
    """
    _check_span(sig, MIN_FREQ_SPAN_S, "frequency features")
    fs = sig.sampling_rate_hz
    x = np.array(sig.samples, dtype=float)
    nperseg = int(round(fs))
    freqs, psd = welch(x, fs=fs, window="hann", nperseg=nperseg, noverlap=nperseg // 2)

    f = freqs[1:]
    p = psd[1:]
    total = float(np.sum(p))
    if total <= 0.0:
        return {name: 0.0 for name in FREQ_FEATURE_NAMES}

    mean_f = float(np.sum(f * p) / total)
    idx = int(np.searchsorted(np.cumsum(p), 0.5 * total))
    median_f = float(f[min(idx, f.size - 1)])
    peak_f = float(f[int(np.argmax(p))])

    lo, hi = BAND_POWER_RANGE_HZ
    hi = min(hi, fs / 2.0)
    in_band = (freqs >= lo) & (freqs <= hi)
    fraction = float(np.sum(psd[in_band]) / np.sum(psd))
    band_power = fraction * float(np.mean(x**2))

    return {
        "mean_freq_hz": mean_f,
        "median_freq_hz": median_f,
        "peak_freq_hz": peak_f,
        "band_power_20_450": band_power,
    }


def emg_features(sig: SampledSignal) -> Dict[str, float]:
    """All 11 EMG features for one window, time fields first."""
    out = emg_time_features(sig)
    out.update(emg_freq_features(sig))
    return out
