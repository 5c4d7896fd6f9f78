"""Core signal types, IIR filter design/application, resampling and window slicing.

Everything here is a pure function of immutable inputs: `SampledSignal` freezes
its sample buffer on construction, so values can be shared freely across
threads and between the channel-specific modules built on top of this one.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy import signal as sps

from .errors import ContractError, DataError, InvalidSpecError


class Channel(str, Enum):
    """Recorded sensor channels (four EEG electrode positions, three body sensors)."""

    ECG = "ECG"
    EDA = "EDA"
    EMG = "EMG"
    EEG_TP9 = "EEG_TP9"
    EEG_AF7 = "EEG_AF7"
    EEG_AF8 = "EEG_AF8"
    EEG_TP10 = "EEG_TP10"


#: EEG electrodes in canonical order (left ear, left/right forehead, right ear).
EEG_CHANNELS = (Channel.EEG_TP9, Channel.EEG_AF7, Channel.EEG_AF8, Channel.EEG_TP10)

#: Physiological (non-EEG) channels in canonical order.
PHYSIO_CHANNELS = (Channel.ECG, Channel.EDA, Channel.EMG)


@dataclass(frozen=True)
class SampledSignal:
    """Uniformly sampled single-channel time series.

    Attributes:
        channel_id: which sensor the samples came from
        sampling_rate_hz: sample rate, strictly positive
        samples: 1-D float array; frozen (read-only) after construction
        start_time_s: absolute time of the first sample
    """

    channel_id: Channel
    sampling_rate_hz: float
    samples: np.ndarray
    start_time_s: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.sampling_rate_hz) or self.sampling_rate_hz <= 0:
            raise DataError(f"sampling rate must be > 0, got {self.sampling_rate_hz}")
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise DataError("samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(arr)):
            raise DataError(f"non-finite sample in channel {self.channel_id.value}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @property
    def n_samples(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sampling_rate_hz

    def times(self) -> np.ndarray:
        """Absolute sample times in seconds."""
        return self.start_time_s + np.arange(self.samples.size) / self.sampling_rate_hz

    def with_samples(self, samples: np.ndarray, start_time_s: Optional[float] = None) -> "SampledSignal":
        """New signal with the same channel/rate but different samples."""
        return SampledSignal(
            channel_id=self.channel_id,
            sampling_rate_hz=self.sampling_rate_hz,
            samples=samples,
            start_time_s=self.start_time_s if start_time_s is None else start_time_s,
        )


class FilterKind(str, Enum):
    HIGHPASS = "highpass"
    LOWPASS = "lowpass"
    BANDPASS = "bandpass"
    BANDSTOP = "bandstop"


@dataclass(frozen=True)
class FilterSpec:
    """Butterworth filter request; cutoffs are validated against Nyquist at design time."""

    kind: FilterKind
    cutoff_low_hz: float
    cutoff_high_hz: float = 0.0  # only used by band filters
    order: int = 4
    zero_phase: bool = True


@dataclass(frozen=True)
class BiquadCascade:
    """Second-order-section realization of an IIR filter.

    `sos` has shape (n_stages, 6) with rows (b0, b1, b2, a0=1, a1, a2).
    Every stage is checked for stability (poles strictly inside the unit circle).
    """

    sos: np.ndarray
    sampling_rate_hz: float

    def __post_init__(self):
        sos = np.asarray(self.sos, dtype=np.float64)
        if sos.ndim != 2 or sos.shape[1] != 6:
            raise InvalidSpecError(f"sos must have shape (n, 6), got {sos.shape}")
        for k, stage in enumerate(sos):
            poles = np.roots([1.0, stage[4], stage[5]])
            if np.any(np.abs(poles) >= 1.0):
                raise InvalidSpecError(f"unstable biquad stage {k}: pole magnitude >= 1")
        sos = sos.copy()
        sos.flags.writeable = False
        object.__setattr__(self, "sos", sos)

    @property
    def n_stages(self) -> int:
        return int(self.sos.shape[0])

    def frequency_response(self, freqs_hz: np.ndarray) -> np.ndarray:
        """Complex response of the cascade at the given frequencies."""
        _, h = sps.sosfreqz(self.sos, worN=np.asarray(freqs_hz, dtype=float), fs=self.sampling_rate_hz)
        return h


@dataclass(frozen=True)
class WindowPlan:
    """Window length and stride for slicing, or whole-block mode.

    `window_s=None` is the full-block sentinel: exactly one slice per block.
    Stride defaults to the window length (non-overlapping slices).
    """

    window_s: Optional[float]
    stride_s: Optional[float] = None

    def __post_init__(self):
        if self.window_s is None:
            if self.stride_s is not None:
                raise InvalidSpecError("full-block plan takes no stride")
            return
        if self.window_s <= 0:
            raise InvalidSpecError(f"window_s must be > 0, got {self.window_s}")
        stride = self.window_s if self.stride_s is None else self.stride_s
        if stride <= 0 or stride > self.window_s:
            raise InvalidSpecError(f"stride must be in (0, window], got {stride}")
        object.__setattr__(self, "stride_s", stride)

    @classmethod
    def full_block(cls) -> "WindowPlan":
        return cls(window_s=None)

    @property
    def is_full_block(self) -> bool:
        return self.window_s is None

    def label(self) -> str:
        """Short name used in reports, e.g. '10s' or 'full'."""
        if self.is_full_block:
            return "full"
        w = self.window_s
        return f"{w:g}s"


def design_butterworth(spec: FilterSpec, fs: float) -> BiquadCascade:
    """Design a Butterworth filter as a biquad cascade.

    Args:
        spec: filter kind, cutoff(s) in Hz, order
        fs: sampling rate the filter will run at

    Raises:
        InvalidSpecError: cutoff at/above Nyquist, bad band edges, or order
            outside [1, 16].
    """
    if fs <= 0:
        raise InvalidSpecError(f"fs must be > 0, got {fs}")
    if not 1 <= spec.order <= 16:
        raise InvalidSpecError(f"order must be in [1, 16], got {spec.order}")
    nyq = fs / 2.0
    if spec.kind in (FilterKind.LOWPASS, FilterKind.HIGHPASS):
        if not 0 < spec.cutoff_low_hz < nyq:
            raise InvalidSpecError(
                f"cutoff {spec.cutoff_low_hz} Hz must lie in (0, {nyq}) for fs={fs}"
            )
        wn = spec.cutoff_low_hz
    else:
        lo, hi = spec.cutoff_low_hz, spec.cutoff_high_hz
        if not 0 < lo < hi:
            raise InvalidSpecError(f"band filter needs 0 < low < high, got ({lo}, {hi})")
        if hi >= nyq:
            raise InvalidSpecError(f"high cutoff {hi} Hz must be below Nyquist {nyq}")
        wn = [lo, hi]
    sos = sps.butter(spec.order, wn, btype=spec.kind.value, fs=fs, output="sos")
    return BiquadCascade(sos=sos, sampling_rate_hz=fs)


def design_notch(f0_hz: float, q: float, fs: float) -> BiquadCascade:
    """Design a single-biquad notch (band-reject) filter at f0_hz.

    Q sets the rejection bandwidth: bw = f0 / Q.
    """
    if fs <= 0:
        raise InvalidSpecError(f"fs must be > 0, got {fs}")
    if not 0 < f0_hz < fs / 2.0:
        raise InvalidSpecError(f"notch frequency {f0_hz} Hz must lie in (0, {fs / 2.0})")
    if q <= 0:
        raise InvalidSpecError(f"notch Q must be > 0, got {q}")
    b, a = sps.iirnotch(f0_hz, q, fs=fs)
    sos = sps.tf2sos(b, a)
    return BiquadCascade(sos=sos, sampling_rate_hz=fs)


def apply_filter(sig: SampledSignal, cascade: BiquadCascade, zero_phase: bool = True) -> SampledSignal:
    """Run a signal through a biquad cascade.

    Zero-phase mode filters forward and backward with reflected edge padding
    (pad length three times the filter's effective tap count, clamped for very
    short inputs), so features keep their timing. Causal mode is a plain
    direct-form pass.

    Raises:
        ContractError: signal rate does not match the cascade's design rate.
    """
    if not np.isclose(sig.sampling_rate_hz, cascade.sampling_rate_hz, rtol=1e-9, atol=0.0):
        raise ContractError(
            f"signal rate {sig.sampling_rate_hz} != filter design rate {cascade.sampling_rate_hz}"
        )
    # scipy's sos routines need writable buffers; our arrays are frozen
    x = np.array(sig.samples)
    sos = np.array(cascade.sos)
    if zero_phase:
        ntaps = 2 * cascade.n_stages + 1
        padlen = min(3 * ntaps, x.size - 1)
        y = sps.sosfiltfilt(sos, x, padtype="even", padlen=padlen)
    else:
        y = sps.sosfilt(sos, x)
    return sig.with_samples(y)


def resample_uniform(
    timestamps_s: Sequence[float],
    values: Sequence[float],
    target_fs: float,
    channel_id: Channel = Channel.ECG,
) -> SampledSignal:
    """Linearly interpolate (time, value) pairs onto a uniform grid.

    The grid runs from the first to the last timestamp at `target_fs`.

    Raises:
        DataError: fewer than 2 points, or timestamps not strictly increasing.
    """
    t = np.asarray(timestamps_s, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if t.ndim != 1 or t.size < 2 or v.shape != t.shape:
        raise DataError("need >= 2 (timestamp, value) pairs of equal length")
    if not np.all(np.diff(t) > 0):
        raise DataError("timestamps must be strictly increasing")
    if target_fs <= 0:
        raise InvalidSpecError(f"target_fs must be > 0, got {target_fs}")
    n = int(np.floor((t[-1] - t[0]) * target_fs + 1e-9)) + 1
    grid = t[0] + np.arange(n) / target_fs
    samples = np.interp(grid, t, v)
    return SampledSignal(
        channel_id=channel_id,
        sampling_rate_hz=target_fs,
        samples=samples,
        start_time_s=float(t[0]),
    )


def slice_windows(sig: SampledSignal, plan: WindowPlan) -> list[SampledSignal]:
    """Cut a signal into window slices according to a plan.

    Slices start at multiples of the stride; a trailing partial window is
    discarded. Full-block plans return the whole signal as a single slice.

    Raises:
        DataError: signal shorter than one window in windowed mode.
    """
    if plan.is_full_block:
        return [sig]
    fs = sig.sampling_rate_hz
    win_n = max(1, int(round(plan.window_s * fs)))
    stride_n = max(1, int(round(plan.stride_s * fs)))
    n = sig.n_samples
    if n < win_n:
        raise DataError(
            f"signal of {sig.duration_s:.3f} s yields no {plan.window_s} s window"
        )
    out = []
    for start in range(0, n - win_n + 1, stride_n):
        out.append(
            sig.with_samples(
                sig.samples[start : start + win_n],
                start_time_s=sig.start_time_s + start / fs,
            )
        )
    return out
