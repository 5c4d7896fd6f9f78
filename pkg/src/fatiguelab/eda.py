"""EDA cleaning, tonic/phasic split, SCR detection, and feature extraction.

The tonic component is a 0.05 Hz low-pass of the cleaned signal; phasic is
the remainder, so the two always reconstruct the input exactly. SCRs are
found on the phasic component as (local minimum, next local maximum) pairs
passing amplitude and rise-time criteria.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

import numpy as np

from .errors import DataError
from .signals import (
    FilterKind,
    FilterSpec,
    SampledSignal,
    apply_filter,
    design_butterworth,
)

#: Minimum SCR amplitude in microsiemens.
SCR_MIN_AMP_US = 0.01

#: Acceptable SCR rise time (onset to peak) in seconds.
SCR_RISE_RANGE_S = (0.5, 5.0)

#: Tonic extraction cutoff.
TONIC_CUTOFF_HZ = 0.05

FEATURE_NAMES = (
    "scr_count",
    "scr_rate_per_min",
    "scr_mean_amp",
    "scr_max_amp",
    "scr_amp_sum",
    "tonic_mean",
    "tonic_std",
    "tonic_slope",
    "phasic_mean",
    "phasic_std",
    "phasic_max",
)


@dataclass(frozen=True)
class EDADecomposition:
    """Tonic (slow baseline) and phasic (fast remainder) components."""

    tonic: SampledSignal
    phasic: SampledSignal

    def __post_init__(self):
        if self.tonic.n_samples != self.phasic.n_samples:
            raise DataError("tonic and phasic must have the same length")
        if self.tonic.sampling_rate_hz != self.phasic.sampling_rate_hz:
            raise DataError("tonic and phasic must share a sampling rate")

    @property
    def duration_s(self) -> float:
        return self.tonic.duration_s


@dataclass(frozen=True)
class SCRPeakSet:
    """Detected skin-conductance responses."""

    peak_times_s: np.ndarray
    onset_times_s: np.ndarray
    amplitudes_us: np.ndarray
    rise_times_s: np.ndarray

    def __post_init__(self):
        peaks = np.asarray(self.peak_times_s, dtype=float)
        onsets = np.asarray(self.onset_times_s, dtype=float)
        amps = np.asarray(self.amplitudes_us, dtype=float)
        rises = np.asarray(self.rise_times_s, dtype=float)
        if not (peaks.shape == onsets.shape == amps.shape == rises.shape):
            raise DataError("SCR arrays must have matching shapes")
        if peaks.size:
            if np.any(onsets >= peaks):
                raise DataError("every SCR onset must precede its peak")
            if np.any(np.diff(peaks) <= 0):
                raise DataError("SCR peak times must be strictly increasing")
            if np.any(amps < SCR_MIN_AMP_US):
                raise DataError(f"SCR amplitudes must be >= {SCR_MIN_AMP_US}")
        for name, arr in (
            ("peak_times_s", peaks),
            ("onset_times_s", onsets),
            ("amplitudes_us", amps),
            ("rise_times_s", rises),
        ):
            object.__setattr__(self, name, arr)

    @property
    def count(self) -> int:
        return int(self.peak_times_s.size)


def clean_eda(raw: SampledSignal) -> SampledSignal:
    """Order-4 zero-phase low-pass at 3 Hz.

    Raises:
        InvalidSpecError: sampling rate at or below 6 Hz (cutoff >= Nyquist).
    """
    cascade = design_butterworth(
        FilterSpec(FilterKind.LOWPASS, 3.0, order=4), raw.sampling_rate_hz
    )
    return apply_filter(raw, cascade, zero_phase=True)


def decompose(clean: SampledSignal) -> EDADecomposition:
    """Split a cleaned EDA signal into tonic and phasic components.

    Raises:
        DataError: input shorter than 10 s.
    """
    if clean.duration_s < 10.0:
        raise DataError(
            f"EDA decomposition needs >= 10 s, got {clean.duration_s:.2f} s"
        )
    cascade = design_butterworth(
        FilterSpec(FilterKind.LOWPASS, TONIC_CUTOFF_HZ, order=2), clean.sampling_rate_hz
    )
    tonic = apply_filter(clean, cascade, zero_phase=True)
    phasic = clean.with_samples(clean.samples - tonic.samples)
    return EDADecomposition(tonic=tonic, phasic=phasic)


def detect_scr_peaks(phasic: SampledSignal) -> SCRPeakSet:
    """Find SCRs on the phasic component.

    An onset is an upward zero-slope crossing (local minimum); its peak is
    the next downward crossing (local maximum). Events are kept when the
    peak-minus-onset amplitude reaches 0.01 uS and the rise time lies in
    [0.5, 5] s. An empty result is valid.
    """
    x = phasic.samples
    fs = phasic.sampling_rate_hz
    if x.size < 3:
        return SCRPeakSet(np.array([]), np.array([]), np.array([]), np.array([]))
    rising = np.diff(x) > 0
    # onset: slope turns non-positive -> positive; peak: positive -> non-positive
    onsets = np.flatnonzero(~rising[:-1] & rising[1:]) + 1
    peaks = np.flatnonzero(rising[:-1] & ~rising[1:]) + 1

    keep_peak, keep_onset = [], []
    j = 0
    for onset in onsets:
        while j < peaks.size and peaks[j] <= onset:
            j += 1
        if j == peaks.size:
            break
        peak = peaks[j]
        amp = x[peak] - x[onset]
        rise = (peak - onset) / fs
        if amp >= SCR_MIN_AMP_US and SCR_RISE_RANGE_S[0] <= rise <= SCR_RISE_RANGE_S[1]:
            keep_onset.append(onset)
            keep_peak.append(peak)

    t0 = phasic.start_time_s
    onset_arr = np.asarray(keep_onset, dtype=np.int64)
    peak_arr = np.asarray(keep_peak, dtype=np.int64)
    return SCRPeakSet(
        peak_times_s=t0 + peak_arr / fs,
        onset_times_s=t0 + onset_arr / fs,
        amplitudes_us=x[peak_arr] - x[onset_arr] if peak_arr.size else np.array([]),
        rise_times_s=(peak_arr - onset_arr) / fs,
    )


def eda_features(decomp: EDADecomposition, peaks: SCRPeakSet) -> Dict[str, float]:
    """Named EDA features; empty peak sets follow a defined-zero convention."""
    duration_min = decomp.duration_s / 60.0
    amps = peaks.amplitudes_us
    tonic = decomp.tonic.samples
    phasic = decomp.phasic.samples
    times = decomp.tonic.times()
    slope = float(np.polyfit(times, tonic, 1)[0])
    return {
        "scr_count": float(peaks.count),
        "scr_rate_per_min": peaks.count / duration_min,
        "scr_mean_amp": float(np.mean(amps)) if amps.size else 0.0,
        "scr_max_amp": float(np.max(amps)) if amps.size else 0.0,
        "scr_amp_sum": float(np.sum(amps)),
        "tonic_mean": float(np.mean(tonic)),
        "tonic_std": float(np.std(tonic)),
        "tonic_slope": slope,
        "phasic_mean": float(np.mean(phasic)),
        "phasic_std": float(np.std(phasic)),
        "phasic_max": float(np.max(phasic)),
    }
