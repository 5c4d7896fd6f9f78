"""EEG band decomposition and the 100-dimensional statistical feature vector.

Each electrode signal is split into the five canonical bands with zero-phase
band-pass filters, converted to an amplitude envelope (rectification plus a
0.5 s moving average), and summarized with five statistics per band. Four
electrodes times five bands times five statistics gives the 100 features.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Mapping, Tuple

import numpy as np
from scipy.ndimage import uniform_filter1d

from .errors import DataError
from .signals import (
    EEG_CHANNELS,
    Channel,
    FilterKind,
    FilterSpec,
    SampledSignal,
    apply_filter,
    design_butterworth,
)


@dataclass(frozen=True)
class BandDefinition:
    name: str
    low_hz: float
    high_hz: float


#: Canonical EEG bands, in feature order.
BANDS = (
    BandDefinition("delta", 0.5, 4.0),
    BandDefinition("theta", 4.0, 7.0),
    BandDefinition("alpha", 8.0, 12.0),
    BandDefinition("beta", 13.0, 30.0),
    BandDefinition("gamma", 30.0, 80.0),
)

BAND_NAMES = tuple(b.name for b in BANDS)

#: Statistics computed per band envelope, in feature order.
ENVELOPE_STATS = ("mean", "std", "min", "max", "median")

#: Moving-average smoothing length for envelopes.
ENVELOPE_SMOOTH_S = 0.5


def electrode_label(channel: Channel) -> str:
    """Short electrode name used in feature names, e.g. EEG_TP9 -> 'TP9'."""
    if channel not in EEG_CHANNELS:
        raise DataError(f"{channel.value} is not an EEG electrode")
    return channel.value.removeprefix("EEG_")


def band_edges(band: BandDefinition, fs: float) -> Tuple[float, float]:
    """Effective band edges at a given rate; the gamma high edge clamps to
    0.45*fs when the rate cannot represent the canonical 80 Hz."""
    high = min(band.high_hz, 0.45 * fs)
    if high <= band.low_hz:
        raise DataError(f"rate {fs} Hz cannot represent band {band.name}")
    return band.low_hz, high


def band_filter(sig: SampledSignal, band: BandDefinition) -> SampledSignal:
    """Zero-phase order-4 band-pass of one signal at the band's edges."""
    lo, hi = band_edges(band, sig.sampling_rate_hz)
    cascade = design_butterworth(
        FilterSpec(FilterKind.BANDPASS, lo, hi, order=4), sig.sampling_rate_hz
    )
    return apply_filter(sig, cascade, zero_phase=True)


def band_decompose(sig: SampledSignal) -> Dict[str, np.ndarray]:
    """Split one electrode into per-band amplitude envelopes.

    Returns a dict band name -> envelope array (same length as the input).
    Envelope = |band-passed signal| smoothed with a 0.5 s moving average.

    Raises:
        DataError: input shorter than 2 s.
    """
    if sig.duration_s < 2.0:
        raise DataError(
            f"EEG decomposition needs >= 2 s, got {sig.duration_s:.3f} s"
        )
    smooth_n = max(1, int(round(ENVELOPE_SMOOTH_S * sig.sampling_rate_hz)))
    out: Dict[str, np.ndarray] = {}
    for band in BANDS:
        filtered = band_filter(sig, band)
        out[band.name] = uniform_filter1d(
            np.abs(filtered.samples), size=smooth_n, mode="nearest"
        )
    return out


@dataclass(frozen=True)
class BandEnvelopeSet:
    """Envelopes for all 4 electrodes x 5 bands, keyed (electrode label, band name)."""

    envelopes: Mapping[Tuple[str, str], np.ndarray]
    sampling_rate_hz: float

    @classmethod
    def from_signals(cls, signals: Mapping[Channel, SampledSignal]) -> "BandEnvelopeSet":
        """Decompose the four electrode signals into the 20 envelope series.

        Raises:
            DataError: an electrode is missing from the mapping.
        """
        env: Dict[Tuple[str, str], np.ndarray] = {}
        fs = None
        for channel in EEG_CHANNELS:
            if channel not in signals:
                raise DataError(f"missing EEG electrode {channel.value}")
            sig = signals[channel]
            if fs is None:
                fs = sig.sampling_rate_hz
            label = electrode_label(channel)
            for band_name, series in band_decompose(sig).items():
                env[(label, band_name)] = series
        return cls(envelopes=env, sampling_rate_hz=float(fs))


def eeg_features(envelopes: BandEnvelopeSet) -> Dict[str, float]:
    """The 100-entry feature dict, ordered (electrode, band, stat).

    Names look like 'TP9.delta.mean'. Order is fixed: electrodes TP9, AF7,
    AF8, TP10; bands delta..gamma; stats mean, std, min, max, median.

    Raises:
        DataError: a (electrode, band) series is missing or empty.
    """
    out: Dict[str, float] = {}
    for channel in EEG_CHANNELS:
        label = electrode_label(channel)
        for band in BANDS:
            key = (label, band.name)
            if key not in envelopes.envelopes:
                raise DataError(f"missing envelope for electrode {label}, band {band.name}")
            series = np.asarray(envelopes.envelopes[key], dtype=float)
            if series.size == 0:
                raise DataError(f"empty envelope for electrode {label}, band {band.name}")
            prefix = f"{label}.{band.name}"
            out[f"{prefix}.mean"] = float(np.mean(series))
            out[f"{prefix}.std"] = float(np.std(series))
            out[f"{prefix}.min"] = float(np.min(series))
            out[f"{prefix}.max"] = float(np.max(series))
            out[f"{prefix}.median"] = float(np.median(series))
    return out


def eeg_feature_names() -> Tuple[str, ...]:
    """The fixed 100 feature names, in extraction order."""
    names = []
    for channel in EEG_CHANNELS:
        label = electrode_label(channel)
        for band in BANDS:
            for stat in ENVELOPE_STATS:
                names.append(f"{label}.{band.name}.{stat}")
    return tuple(names)
