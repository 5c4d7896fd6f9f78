"""R-peak detection (Pan-Tompkins style), RR cleaning, and HRV features.

The detector runs the classic stage chain — band-pass, derivative, squaring,
moving-window integration, dual adaptive thresholds with refractory period and
search-back — with the band-pass realized as an order-4 Butterworth 5-15 Hz so
the pipeline works at any sampling rate. All thresholds adapt to the signal,
so detection is invariant to amplitude scaling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks, welch

from .errors import DataError
from .signals import (
    FilterKind,
    FilterSpec,
    SampledSignal,
    apply_filter,
    design_butterworth,
    design_notch,
    resample_uniform,
)

#: Physiologic RR bounds in milliseconds.
RR_MIN_MS = 300.0
RR_MAX_MS = 2000.0

#: Refractory period between QRS complexes.
REFRACTORY_S = 0.2

#: HRV spectral bands in Hz.
VLF_BAND = (0.003, 0.04)
LF_BAND = (0.04, 0.15)
HF_BAND = (0.15, 0.4)

#: Tachogram resampling rate and Welch segment length for spectral HRV.
TACHOGRAM_FS = 4.0
WELCH_SEGMENT_S = 16.0

#: Minimum RR span for spectral features; shorter series get NaN markers.
MIN_SPECTRAL_SPAN_S = 30.0

#: Triangular-index bin width (1/128 s, the conventional value).
TRI_BIN_MS = 1000.0 / 128.0

HRV_TIME_FIELDS = (
    "mean_nn_ms",
    "sdnn_ms",
    "rmssd_ms",
    "sdsd_ms",
    "pnn50",
    "pnn20",
    "cvnn",
    "median_nn_ms",
    "mad_nn_ms",
    "hr_mean_bpm",
    "hr_min_bpm",
    "hr_max_bpm",
    "tri_index",
)

HRV_FREQ_FIELDS = (
    "vlf_power",
    "lf_power",
    "hf_power",
    "total_power",
    "lf_hf_ratio",
    "lf_norm",
    "hf_norm",
)


@dataclass(frozen=True)
class RPeakList:
    """Detected R-peak positions; strictly increasing, spacing >= 0.2 s."""

    sample_indices: np.ndarray
    times_s: np.ndarray
    sampling_rate_hz: float

    def __post_init__(self):
        idx = np.asarray(self.sample_indices, dtype=np.int64)
        t = np.asarray(self.times_s, dtype=np.float64)
        if idx.shape != t.shape or idx.ndim != 1:
            raise DataError("peak indices and times must be matching 1-D sequences")
        if idx.size >= 2:
            if np.any(np.diff(idx) <= 0):
                raise DataError("peak indices must be strictly increasing")
            if np.any(np.diff(t) < REFRACTORY_S - 1e-9):
                raise DataError("peaks violate the 0.2 s refractory spacing")
        object.__setattr__(self, "sample_indices", idx)
        object.__setattr__(self, "times_s", t)

    @property
    def n_peaks(self) -> int:
        return int(self.sample_indices.size)


@dataclass(frozen=True)
class RRSeries:
    """Beat-to-beat intervals; onset_times_s[i] is where interval i starts."""

    onset_times_s: np.ndarray
    intervals_ms: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.onset_times_s, dtype=np.float64)
        rr = np.asarray(self.intervals_ms, dtype=np.float64)
        if t.shape != rr.shape or t.ndim != 1:
            raise DataError("onset times and intervals must be matching 1-D sequences")
        if np.any(rr <= 0):
            raise DataError("RR intervals must be positive")
        object.__setattr__(self, "onset_times_s", t)
        object.__setattr__(self, "intervals_ms", rr)

    @classmethod
    def from_peaks(cls, peaks: RPeakList) -> "RRSeries":
        if peaks.n_peaks < 2:
            raise DataError("need >= 2 peaks to form RR intervals")
        t = peaks.times_s
        return cls(onset_times_s=t[:-1], intervals_ms=np.diff(t) * 1000.0)

    @property
    def n_intervals(self) -> int:
        return int(self.intervals_ms.size)

    def span_s(self) -> float:
        """Time covered from the first peak to the last."""
        if self.n_intervals == 0:
            return 0.0
        return float(
            self.onset_times_s[-1] + self.intervals_ms[-1] / 1000.0 - self.onset_times_s[0]
        )


def clean_ecg(sig: SampledSignal, notch_hz: float = 50.0, notch_q: float = 30.0) -> SampledSignal:
    """Standard ECG preprocessing: 0.5 Hz high-pass then a power-line notch."""
    fs = sig.sampling_rate_hz
    hp = design_butterworth(FilterSpec(FilterKind.HIGHPASS, 0.5, order=4), fs)
    out = apply_filter(sig, hp, zero_phase=True)
    if notch_hz < fs / 2.0:
        out = apply_filter(out, design_notch(notch_hz, notch_q, fs), zero_phase=True)
    return out


def _five_point_derivative(x: np.ndarray) -> np.ndarray:
    """Centered five-point derivative: (2(x[n+1]-x[n-1]) + x[n+2]-x[n-2]) / 8."""
    padded = np.pad(x, 2, mode="edge")
    return (
        2.0 * (padded[3:-1] - padded[1:-3]) + (padded[4:] - padded[:-4])
    ) / 8.0


def detect_r_peaks(sig: SampledSignal) -> RPeakList:
    """Locate R-peaks with adaptive dual thresholds.

    Stages: 5-15 Hz band-pass, five-point derivative, squaring, 150 ms
    moving-window integration. Integration peaks are classified signal/noise
    against running estimates (SPKI/NPKI); a missed-beat search-back fires
    when the gap exceeds 1.66x the recent RR average. Accepted peaks are
    refined to the local signal maximum within +-40 ms.

    Raises:
        DataError: signal shorter than 5 s or sampled below 100 Hz.
    """
    fs = sig.sampling_rate_hz
    if sig.duration_s < 5.0:
        raise DataError(f"R-peak detection needs >= 5 s, got {sig.duration_s:.2f} s")
    if fs < 100.0:
        raise DataError(f"R-peak detection needs fs >= 100 Hz, got {fs}")
    if np.ptp(sig.samples) == 0.0:
        # flat input has no QRS energy, only filter edge residue
        return RPeakList(np.array([], dtype=np.int64), np.array([]), fs)

    bp = apply_filter(
        sig,
        design_butterworth(FilterSpec(FilterKind.BANDPASS, 5.0, 15.0, order=4), fs),
        zero_phase=True,
    ).samples
    deriv = _five_point_derivative(bp)
    squared = deriv**2
    mwi = uniform_filter1d(squared, size=max(1, int(round(0.150 * fs))), mode="nearest")

    refractory_n = max(1, int(round(REFRACTORY_S * fs)))
    cand_idx, props = find_peaks(mwi, distance=refractory_n, height=0.0)
    if cand_idx.size == 0 or np.max(mwi) <= 0.0:
        empty = np.array([], dtype=np.int64)
        return RPeakList(empty, np.array([]), fs)
    cand_h = props["peak_heights"]

    # initialize running estimates from the first two seconds
    lead = mwi[: max(1, int(round(2.0 * fs)))]
    spki = 0.25 * float(np.max(lead))
    npki = 0.5 * float(np.mean(lead))

    accepted: List[int] = []
    rr_recent: List[float] = []
    last_scanned = -1  # candidates up to here were already judged

    def threshold1() -> float:
        return npki + 0.25 * (spki - npki)

    k = 0
    while k < cand_idx.size:
        idx, h = int(cand_idx[k]), float(cand_h[k])
        if h > threshold1():
            if accepted and idx - accepted[-1] < refractory_n:
                k += 1
                continue
            if accepted:
                rr_recent.append((idx - accepted[-1]) / fs)
                del rr_recent[:-8]
            accepted.append(idx)
            spki = 0.125 * h + 0.875 * spki
        else:
            npki = 0.125 * h + 0.875 * npki
            # search-back: long gap since the last beat -> re-examine skipped
            # candidates against the lower threshold
            if accepted and len(rr_recent) >= 2:
                gap = (idx - accepted[-1]) / fs
                if gap > 1.66 * float(np.mean(rr_recent)):
                    t2 = 0.5 * threshold1()
                    window = [
                        j
                        for j in range(last_scanned + 1, k + 1)
                        if cand_idx[j] > accepted[-1] + refractory_n
                        and cand_h[j] > t2
                    ]
                    if window:
                        j_best = max(window, key=lambda j: cand_h[j])
                        rr_recent.append((int(cand_idx[j_best]) - accepted[-1]) / fs)
                        del rr_recent[:-8]
                        accepted.append(int(cand_idx[j_best]))
                        spki = 0.25 * float(cand_h[j_best]) + 0.75 * spki
        last_scanned = k
        k += 1

    # refine each integration peak to the nearby signal maximum
    half = int(round(0.040 * fs))
    x = sig.samples
    refined: List[int] = []
    for idx in accepted:
        lo = max(0, idx - half)
        hi = min(x.size, idx + half + 1)
        r = lo + int(np.argmax(x[lo:hi]))
        if refined and r - refined[-1] < refractory_n:
            if x[r] > x[refined[-1]]:
                refined[-1] = r
            continue
        refined.append(r)

    idx_arr = np.asarray(refined, dtype=np.int64)
    return RPeakList(idx_arr, sig.start_time_s + idx_arr / fs, fs)


def _rolling_median(values: np.ndarray, window: int = 11) -> np.ndarray:
    half = window // 2
    out = np.empty_like(values)
    for i in range(values.size):
        lo = max(0, i - half)
        hi = min(values.size, i + half + 1)
        out[i] = np.median(values[lo : hi])
    return out


def clean_rr(raw: RRSeries) -> RRSeries:
    """Remove artifact intervals and fill the gaps by linear interpolation.

    An interval is an artifact when outside [300, 2000] ms or deviating more
    than 3 scaled MADs (1.4826 * median absolute deviation) from an 11-point
    rolling median. Interior gaps are interpolated over interval index;
    boundary gaps take the nearest valid value.

    Raises:
        DataError: fewer than 3 intervals, or fewer than 2 valid ones remain.
    """
    rr = raw.intervals_ms
    if rr.size < 3:
        raise DataError(f"RR cleaning needs >= 3 intervals, got {rr.size}")
    in_range = (rr >= RR_MIN_MS) & (rr <= RR_MAX_MS)
    rolmed = _rolling_median(rr)
    dev = np.abs(rr - rolmed)
    mad = float(np.median(dev))
    valid = in_range & (dev <= 3.0 * 1.4826 * mad + 1e-12)
    if int(valid.sum()) < 2:
        raise DataError("unusable RR series: fewer than 2 valid intervals")
    index = np.arange(rr.size, dtype=float)
    cleaned = np.interp(index, index[valid], rr[valid])
    return RRSeries(onset_times_s=raw.onset_times_s, intervals_ms=cleaned)


def hrv_time_features(rr: RRSeries) -> Dict[str, float]:
    """Time-domain HRV statistics over a cleaned RR series.

    SDNN and SDSD are population standard deviations; pNN50/pNN20 are
    fractions of successive differences beyond 50/20 ms; heart-rate fields
    come from 60000 / interval; tri_index is total beats over the modal
    histogram count at 1/128 s bins.

    Raises:
        DataError: fewer than 3 intervals.
    """
    x = rr.intervals_ms
    if x.size < 3:
        raise DataError(f"time-domain HRV needs >= 3 intervals, got {x.size}")
    diffs = np.diff(x)
    hr = 60000.0 / x
    mean_nn = float(np.mean(x))
    sdnn = float(np.std(x))

    edges_lo = math.floor(float(np.min(x)) / TRI_BIN_MS) * TRI_BIN_MS
    n_bins = max(1, int(math.ceil((float(np.max(x)) - edges_lo) / TRI_BIN_MS + 1e-9)))
    counts, _ = np.histogram(x, bins=n_bins, range=(edges_lo, edges_lo + n_bins * TRI_BIN_MS))

    return {
        "mean_nn_ms": mean_nn,
        "sdnn_ms": sdnn,
        "rmssd_ms": float(np.sqrt(np.mean(diffs**2))),
        "sdsd_ms": float(np.std(diffs)),
        "pnn50": float(np.mean(np.abs(diffs) > 50.0)),
        "pnn20": float(np.mean(np.abs(diffs) > 20.0)),
        "cvnn": sdnn / mean_nn,
        "median_nn_ms": float(np.median(x)),
        "mad_nn_ms": float(np.median(np.abs(x - np.median(x)))),
        "hr_mean_bpm": float(np.mean(hr)),
        "hr_min_bpm": float(np.min(hr)),
        "hr_max_bpm": float(np.max(hr)),
        "tri_index": x.size / float(np.max(counts)),
    }


def _band_power(freqs: np.ndarray, psd: np.ndarray, band) -> float:
    lo, hi = band
    mask = (freqs >= lo) & (freqs < hi)
    if not np.any(mask):
        return 0.0
    df = freqs[1] - freqs[0] if freqs.size > 1 else 1.0
    return float(np.sum(psd[mask]) * df)


def hrv_freq_features(rr: RRSeries) -> Dict[str, float]:
    """Spectral HRV from the 4 Hz-resampled tachogram (Welch, 16 s, Hann).

    Series spanning under 30 s cannot support the LF band; every field is
    then NaN (a missing marker to be imputed downstream), never silent zero.
    total_power is the sum of the three defined bands.
    """
    if rr.n_intervals < 3 or rr.span_s() < MIN_SPECTRAL_SPAN_S:
        return {name: float("nan") for name in HRV_FREQ_FIELDS}
    tach = resample_uniform(rr.onset_times_s, rr.intervals_ms, TACHOGRAM_FS)
    x = tach.samples - np.mean(tach.samples)
    nperseg = min(int(WELCH_SEGMENT_S * TACHOGRAM_FS), x.size)
    freqs, psd = welch(
        x, fs=TACHOGRAM_FS, window="hann", nperseg=nperseg, noverlap=nperseg // 2
    )
    vlf = _band_power(freqs, psd, VLF_BAND)
    lf = _band_power(freqs, psd, LF_BAND)
    hf = _band_power(freqs, psd, HF_BAND)
    total = vlf + lf + hf
    return {
        "vlf_power": vlf,
        "lf_power": lf,
        "hf_power": hf,
        "total_power": total,
        "lf_hf_ratio": lf / hf if hf > 0 else float("nan"),
        "lf_norm": lf / (lf + hf) if lf + hf > 0 else float("nan"),
        "hf_norm": hf / (lf + hf) if lf + hf > 0 else float("nan"),
    }
