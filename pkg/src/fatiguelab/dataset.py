"""Study ingestion, fatigue labeling, windowed examples, and splits.

This module turns a recorded study (manifest + channel CSVs) into model
inputs:

  ingest        -> RecordingBlock per (subject, session, reading)
  label_blocks  -> binary targets from a LabelPolicy (excluded blocks drop)
  make_examples -> windowed feature vectors or t x C sequences
  split_subjects / cv_folds -> subject-disjoint partitions

Feature extraction reuses the per-channel modules. Expensive per-block
work (R-peak detection, tonic/phasic decomposition, band envelopes,
EMG filtering) runs once per block; windows then slice the prepared
context. Sequence mode resamples every channel to a shared low rate
after an anti-alias low-pass, with EEG entering as its 20 band envelopes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from . import ecg as ecg_mod
from . import eda as eda_mod
from . import eeg as eeg_mod
from . import emg as emg_mod
from .errors import (
    AlignmentError,
    DataError,
    IngestionError,
    InvalidSpecError,
    SplitError,
)
from .signals import (
    Channel,
    EEG_CHANNELS,
    FilterKind,
    FilterSpec,
    PHYSIO_CHANNELS,
    SampledSignal,
    WindowPlan,
    apply_filter,
    design_butterworth,
    resample_uniform,
)

SESSION_NAMES = ("morning", "evening")
VALID_TASK_TAGS = ("baseline", "zero_back", "treadmill_rest", "two_back")
VAS_KEYS = ("tiredness", "physical", "cognitive", "sleepiness")

POSITIVE = "positive"
NEGATIVE = "negative"
EXCLUDED = "excluded"

MODALITY_EEG = "eeg"
MODALITY_PHYSIO = "physio"
MODALITY_ALL = "all"
MODALITY_SETS = (MODALITY_EEG, MODALITY_PHYSIO, MODALITY_ALL)

MODE_FEATURE = "feature"
MODE_SEQUENCE = "sequence"

#: Bump when feature names, order, or definitions change.
FEATURE_REGISTRY_VERSION = 1

#: Extra whole-window statistics over the cleaned ECG trace.
ECG_RAW_STATS = ("mean", "std", "min", "max", "median", "skew", "kurtosis")

#: Common rate for sequence-mode matrices.
SEQUENCE_RATE_HZ = 4.0

#: Channels may disagree in length by at most one sample of the coarsest rate.
ALIGNMENT_TOL_SAMPLES = 1

SPLIT_RATIOS = (0.70, 0.15, 0.15)

CACHE_FORMAT_VERSION = 1


# ------------------------------------------------------------------ types ----


@dataclass(frozen=True)
class RecordingBlock:
    """One sensor reading: all channel signals plus the survey scores."""

    subject_id: str
    session: str
    reading_index: int
    task_tag: str
    signals: Mapping[Channel, SampledSignal]
    vas: Mapping[str, int]

    def __post_init__(self):
        if self.session not in SESSION_NAMES:
            raise DataError(f"unknown session {self.session!r}")
        if not (1 <= int(self.reading_index) <= 5):
            raise DataError(f"reading_index must be in [1, 5], got {self.reading_index}")
        if self.task_tag not in VALID_TASK_TAGS:
            raise DataError(f"unknown task_tag {self.task_tag!r}")
        if not self.signals:
            raise DataError("block has no signals")
        vas = {}
        for key in VAS_KEYS:
            if key not in self.vas:
                raise DataError(f"missing VAS score {key!r}")
            value = int(self.vas[key])
            if not (1 <= value <= 10):
                raise DataError(f"VAS {key} must be in [1, 10], got {value}")
            vas[key] = value
        object.__setattr__(self, "signals", dict(self.signals))
        object.__setattr__(self, "vas", vas)

    @property
    def block_id(self) -> str:
        return f"{self.subject_id}/{self.session}/r{self.reading_index}"

    @property
    def duration_s(self) -> float:
        return min(sig.duration_s for sig in self.signals.values())


@dataclass(frozen=True)
class LabelPolicy:
    """Maps reading index to positive / negative / excluded for one target."""

    target: str
    mapping: Mapping[int, str]

    def __post_init__(self):
        if self.target not in ("CF", "PF"):
            raise InvalidSpecError(f"target must be CF or PF, got {self.target!r}")
        if set(self.mapping) != {1, 2, 3, 4, 5}:
            raise InvalidSpecError("policy must cover reading indices 1..5")
        bad = [v for v in self.mapping.values() if v not in (POSITIVE, NEGATIVE, EXCLUDED)]
        if bad:
            raise InvalidSpecError(f"invalid policy states: {bad}")
        object.__setattr__(self, "mapping", dict(self.mapping))

    def label_for(self, reading_index: int) -> Optional[int]:
        """1 / 0 for positive / negative, None when excluded."""
        state = self.mapping[int(reading_index)]
        if state == EXCLUDED:
            return None
        return 1 if state == POSITIVE else 0


CF_POLICY = LabelPolicy(
    target="CF",
    mapping={1: NEGATIVE, 2: NEGATIVE, 3: NEGATIVE, 4: POSITIVE, 5: POSITIVE},
)

PF_POLICY = LabelPolicy(
    target="PF",
    mapping={1: NEGATIVE, 2: NEGATIVE, 3: POSITIVE, 4: EXCLUDED, 5: EXCLUDED},
)


def policy_for_target(target: str) -> LabelPolicy:
    try:
        return {"CF": CF_POLICY, "PF": PF_POLICY}[target.upper()]
    except KeyError:
        raise InvalidSpecError(f"unknown label target {target!r}")


@dataclass(frozen=True)
class LabeledBlock:
    block: RecordingBlock
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise DataError(f"label must be 0 or 1, got {self.label}")


@dataclass(frozen=True)
class WindowExample:
    """One training example: a window of one block.

    ``values`` is a 1-D feature vector in feature mode and a t x C float
    matrix in sequence mode. The label is inherited from the parent block.
    """

    subject_id: str
    block_id: str
    slice_index: int
    label: int
    values: np.ndarray


@dataclass
class ExampleSet:
    """Examples plus the shared name list (feature names or channel names)."""

    mode: str
    names: Tuple[str, ...]
    examples: List[WindowExample]

    @property
    def n_examples(self) -> int:
        return len(self.examples)

    def labels(self) -> np.ndarray:
        return np.array([ex.label for ex in self.examples], dtype=np.int64)

    def subject_ids(self) -> Tuple[str, ...]:
        return tuple(ex.subject_id for ex in self.examples)

    def block_ids(self) -> Tuple[str, ...]:
        return tuple(ex.block_id for ex in self.examples)

    def feature_matrix(self) -> np.ndarray:
        if self.mode != MODE_FEATURE:
            raise DataError("feature_matrix is only defined for feature mode")
        return np.stack([ex.values for ex in self.examples]) if self.examples else np.empty((0, len(self.names)))

    def sequences(self) -> List[np.ndarray]:
        if self.mode != MODE_SEQUENCE:
            raise DataError("sequences is only defined for sequence mode")
        return [ex.values for ex in self.examples]

    def subset(self, subject_ids) -> "ExampleSet":
        """Examples belonging to the given subjects, order preserved."""
        keep = frozenset(subject_ids)
        return ExampleSet(
            mode=self.mode,
            names=self.names,
            examples=[ex for ex in self.examples if ex.subject_id in keep],
        )


@dataclass(frozen=True)
class SplitPlan:
    """Subject-disjoint train/validation/test assignment."""

    train: frozenset
    validation: frozenset
    test: frozenset
    seed: int

    def __post_init__(self):
        sets = (self.train, self.validation, self.test)
        total = sum(len(s) for s in sets)
        if len(self.train | self.validation | self.test) != total:
            raise SplitError("split sets overlap")

    @property
    def all_subjects(self) -> frozenset:
        return self.train | self.validation | self.test


# -------------------------------------------------------------- ingestion ----


def _scan_csv_rows(path: Path) -> None:
    """Locate the first malformed CSV row and raise with its line number."""
    with open(path, "r", encoding="utf-8") as fh:
        fh.readline()
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != 2:
                raise IngestionError(
                    f"{path}: line {lineno}: expected 2 fields, got {len(parts)}"
                )
            try:
                float(parts[0])
                float(parts[1])
            except ValueError:
                raise IngestionError(
                    f"{path}: line {lineno}: non-numeric sample {line.strip()!r}"
                )


def _read_channel_csv(path: Path, fs: float, channel: Channel) -> SampledSignal:
    if not path.exists():
        raise IngestionError(f"{path}: file not found")
    try:
        frame = pd.read_csv(path, dtype=np.float64)
    except (ValueError, pd.errors.ParserError):
        _scan_csv_rows(path)
        raise IngestionError(f"{path}: malformed CSV")
    if list(frame.columns) != ["t_s", "value"]:
        raise IngestionError(
            f"{path}: header must be 't_s,value', got {','.join(map(str, frame.columns))}"
        )
    if len(frame) < 2:
        raise IngestionError(f"{path}: needs >= 2 samples, got {len(frame)}")
    t = frame["t_s"].to_numpy()
    v = frame["value"].to_numpy()
    bad = ~(np.isfinite(t) & np.isfinite(v))
    if np.any(bad):
        raise IngestionError(f"{path}: line {int(np.argmax(bad)) + 2}: non-finite sample")
    steps = np.diff(t)
    if np.any(steps <= 0):
        raise IngestionError(
            f"{path}: line {int(np.argmax(steps <= 0)) + 3}: time not strictly increasing"
        )
    expected = t[0] + np.arange(t.size) / fs
    if float(np.max(np.abs(t - expected))) <= 0.25 / fs:
        # timestamps already sit on the declared uniform grid
        return SampledSignal(channel, fs, v, start_time_s=float(t[0]))
    return resample_uniform(t, v, fs, channel)


def _require(obj, key: str, ctx: str):
    if not isinstance(obj, dict) or key not in obj:
        raise IngestionError(f"{ctx}: missing field {key!r}")
    return obj[key]


def ingest(manifest_path) -> List[RecordingBlock]:
    """Load a study manifest and every referenced channel CSV.

    Returns one RecordingBlock per (subject, session, reading), in manifest
    order. CSV paths are resolved relative to the manifest's directory.

    Raises:
        IngestionError: missing/duplicate entries, malformed CSVs, or
            invalid sampling rates, with file and line context.
    """
    path = Path(manifest_path)
    if not path.exists():
        raise IngestionError(f"{path}: manifest not found")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise IngestionError(f"{path}: invalid JSON: {exc}")
    base = path.parent
    blocks: List[RecordingBlock] = []
    seen = set()
    for si, subj in enumerate(_require(doc, "subjects", str(path))):
        sctx = f"{path}: subjects[{si}]"
        sid = str(_require(subj, "id", sctx))
        for yi, sess in enumerate(_require(subj, "sessions", sctx)):
            yctx = f"{sctx}.sessions[{yi}]"
            name = _require(sess, "name", yctx)
            for ri, reading in enumerate(_require(sess, "readings", yctx)):
                rctx = f"{yctx}.readings[{ri}]"
                index = int(_require(reading, "index", rctx))
                key = (sid, name, index)
                if key in seen:
                    raise IngestionError(f"{rctx}: duplicate block {key}")
                seen.add(key)
                vas = _require(reading, "vas", rctx)
                if not isinstance(vas, dict):
                    raise IngestionError(f"{rctx}: vas must be an object")
                signals: Dict[Channel, SampledSignal] = {}
                for ci, entry in enumerate(_require(reading, "channels", rctx)):
                    cctx = f"{rctx}.channels[{ci}]"
                    raw_id = _require(entry, "channel_id", cctx)
                    try:
                        channel = Channel(raw_id)
                    except ValueError:
                        raise IngestionError(f"{cctx}: unknown channel_id {raw_id!r}")
                    fs = entry.get("sampling_rate_hz")
                    if not isinstance(fs, (int, float)) or not np.isfinite(fs) or fs <= 0:
                        raise IngestionError(
                            f"{cctx}: missing or invalid sampling_rate_hz ({fs!r})"
                        )
                    csv_path = base / str(_require(entry, "csv_path", cctx))
                    signals[channel] = _read_channel_csv(csv_path, float(fs), channel)
                try:
                    blocks.append(
                        RecordingBlock(
                            subject_id=sid,
                            session=str(name),
                            reading_index=index,
                            task_tag=str(_require(reading, "task_tag", rctx)),
                            signals=signals,
                            vas=vas,
                        )
                    )
                except DataError as exc:
                    raise IngestionError(f"{rctx}: {exc}")
    return blocks


def label_blocks(blocks: Sequence[RecordingBlock], policy: LabelPolicy) -> List[LabeledBlock]:
    """Attach binary targets per the policy; excluded readings are dropped."""
    out = []
    for block in blocks:
        label = policy.label_for(block.reading_index)
        if label is not None:
            out.append(LabeledBlock(block=block, label=label))
    return out


# ------------------------------------------------------- feature registry ----


def _physio_feature_names() -> Tuple[str, ...]:
    names = [f"ecg.{n}" for n in ecg_mod.HRV_TIME_FIELDS + ecg_mod.HRV_FREQ_FIELDS]
    names += [f"ecg.raw_{n}" for n in ECG_RAW_STATS]
    names += [f"eda.{n}" for n in eda_mod.FEATURE_NAMES]
    names += [f"emg.{n}" for n in emg_mod.TIME_FEATURE_NAMES + emg_mod.FREQ_FEATURE_NAMES]
    return tuple(names)


def feature_names(modality_set: str) -> Tuple[str, ...]:
    """Registry (version FEATURE_REGISTRY_VERSION) of feature columns.

    eeg -> 100 envelope statistics; physio -> 49 (27 ECG + 11 EDA +
    11 EMG); all -> physio then eeg, 149 columns.
    """
    eeg_names = tuple(f"eeg.{n}" for n in eeg_mod.eeg_feature_names())
    if modality_set == MODALITY_EEG:
        return eeg_names
    if modality_set == MODALITY_PHYSIO:
        return _physio_feature_names()
    if modality_set == MODALITY_ALL:
        return _physio_feature_names() + eeg_names
    raise InvalidSpecError(f"unknown modality set {modality_set!r}")


def sequence_channel_names(modality_set: str) -> Tuple[str, ...]:
    """Sequence-mode channel layout: 20 EEG envelopes, then ECG, EDA, EMG."""
    eeg_names = tuple(
        f"{eeg_mod.electrode_label(ch)}.{band.name}"
        for ch in EEG_CHANNELS
        for band in eeg_mod.BANDS
    )
    physio_names = tuple(ch.value for ch in PHYSIO_CHANNELS)
    if modality_set == MODALITY_EEG:
        return eeg_names
    if modality_set == MODALITY_PHYSIO:
        return physio_names
    if modality_set == MODALITY_ALL:
        return eeg_names + physio_names
    raise InvalidSpecError(f"unknown modality set {modality_set!r}")


def _required_channels(modality_set: str) -> Tuple[Channel, ...]:
    if modality_set == MODALITY_EEG:
        return EEG_CHANNELS
    if modality_set == MODALITY_PHYSIO:
        return PHYSIO_CHANNELS
    if modality_set == MODALITY_ALL:
        return EEG_CHANNELS + PHYSIO_CHANNELS
    raise InvalidSpecError(f"unknown modality set {modality_set!r}")


# ------------------------------------------------------ block preparation ----


@dataclass
class BlockContext:
    """Per-block preprocessing shared by all windows of that block."""

    labeled: LabeledBlock
    duration_s: float
    ecg_clean: Optional[SampledSignal] = None
    rr: Optional[ecg_mod.RRSeries] = None
    eda_decomp: Optional[eda_mod.EDADecomposition] = None
    scr: Optional[eda_mod.SCRPeakSet] = None
    emg_clean: Optional[SampledSignal] = None
    eeg_envelopes: Optional[eeg_mod.BandEnvelopeSet] = None


def _check_alignment(block: RecordingBlock, channels: Sequence[Channel]) -> float:
    missing = [ch.value for ch in channels if ch not in block.signals]
    if missing:
        raise DataError(f"{block.block_id}: missing channels {missing}")
    durations = [block.signals[ch].duration_s for ch in channels]
    coarsest_fs = min(block.signals[ch].sampling_rate_hz for ch in channels)
    spread = max(durations) - min(durations)
    if spread > ALIGNMENT_TOL_SAMPLES / coarsest_fs + 1e-9:
        raise AlignmentError(
            f"{block.block_id}: channel durations differ by {spread:.4f} s "
            f"(> {ALIGNMENT_TOL_SAMPLES} sample at {coarsest_fs} Hz)"
        )
    return min(durations)


def prepare_block(labeled: LabeledBlock, modality_set: str) -> BlockContext:
    """Run the per-block (window-independent) part of feature extraction."""
    block = labeled.block
    channels = _required_channels(modality_set)
    duration = _check_alignment(block, channels)
    ctx = BlockContext(labeled=labeled, duration_s=duration)
    if modality_set in (MODALITY_PHYSIO, MODALITY_ALL):
        ctx.ecg_clean = ecg_mod.clean_ecg(block.signals[Channel.ECG])
        peaks = ecg_mod.detect_r_peaks(ctx.ecg_clean)
        if peaks.n_peaks >= 4:
            try:
                ctx.rr = ecg_mod.clean_rr(ecg_mod.RRSeries.from_peaks(peaks))
            except DataError:
                ctx.rr = None
        ctx.eda_decomp = eda_mod.decompose(eda_mod.clean_eda(block.signals[Channel.EDA]))
        ctx.scr = eda_mod.detect_scr_peaks(ctx.eda_decomp.phasic)
        ctx.emg_clean = emg_mod.clean_emg(block.signals[Channel.EMG])
    if modality_set in (MODALITY_EEG, MODALITY_ALL):
        ctx.eeg_envelopes = eeg_mod.BandEnvelopeSet.from_signals(block.signals)
    return ctx


# ----------------------------------------------------- feature extraction ----


def _slice_samples(sig: SampledSignal, t0: float, t1: float) -> np.ndarray:
    fs = sig.sampling_rate_hz
    i0 = int(round(t0 * fs))
    i1 = min(int(round(t1 * fs)), sig.n_samples)
    return sig.samples[i0:i1]


def _raw_stats(x: np.ndarray) -> Dict[str, float]:
    mean = float(np.mean(x))
    std = float(np.std(x))
    out = {
        "mean": mean,
        "std": std,
        "min": float(np.min(x)),
        "max": float(np.max(x)),
        "median": float(np.median(x)),
    }
    if std > 0:
        z = (x - mean) / std
        out["skew"] = float(np.mean(z**3))
        out["kurtosis"] = float(np.mean(z**4) - 3.0)
    else:
        out["skew"] = 0.0
        out["kurtosis"] = 0.0
    return out


def _ecg_window_features(ctx: BlockContext, t0: float, t1: float) -> List[float]:
    hrv: Dict[str, float] = {
        n: float("nan") for n in ecg_mod.HRV_TIME_FIELDS + ecg_mod.HRV_FREQ_FIELDS
    }
    if ctx.rr is not None:
        mask = (ctx.rr.onset_times_s >= t0) & (ctx.rr.onset_times_s < t1)
        if int(mask.sum()) >= 3:
            sub = ecg_mod.RRSeries(
                onset_times_s=ctx.rr.onset_times_s[mask],
                intervals_ms=ctx.rr.intervals_ms[mask],
            )
            hrv.update(ecg_mod.hrv_time_features(sub))
            hrv.update(ecg_mod.hrv_freq_features(sub))
    values = [hrv[n] for n in ecg_mod.HRV_TIME_FIELDS + ecg_mod.HRV_FREQ_FIELDS]
    stats = _raw_stats(_slice_samples(ctx.ecg_clean, t0, t1))
    values += [stats[n] for n in ECG_RAW_STATS]
    return values


def _eda_window_features(ctx: BlockContext, t0: float, t1: float) -> List[float]:
    decomp = ctx.eda_decomp
    tonic = decomp.tonic.with_samples(_slice_samples(decomp.tonic, t0, t1), start_time_s=t0)
    phasic = decomp.phasic.with_samples(_slice_samples(decomp.phasic, t0, t1), start_time_s=t0)
    window = eda_mod.EDADecomposition(tonic=tonic, phasic=phasic)
    keep = (ctx.scr.peak_times_s >= t0) & (ctx.scr.peak_times_s < t1)
    peaks = eda_mod.SCRPeakSet(
        peak_times_s=ctx.scr.peak_times_s[keep],
        onset_times_s=ctx.scr.onset_times_s[keep],
        amplitudes_us=ctx.scr.amplitudes_us[keep],
        rise_times_s=ctx.scr.rise_times_s[keep],
    )
    feats = eda_mod.eda_features(window, peaks)
    return [feats[n] for n in eda_mod.FEATURE_NAMES]


def _emg_window_features(ctx: BlockContext, t0: float, t1: float) -> List[float]:
    sig = ctx.emg_clean.with_samples(_slice_samples(ctx.emg_clean, t0, t1), start_time_s=t0)
    feats = emg_mod.emg_features(sig)
    return [feats[n] for n in emg_mod.TIME_FEATURE_NAMES + emg_mod.FREQ_FEATURE_NAMES]


def _eeg_window_features(ctx: BlockContext, t0: float, t1: float) -> List[float]:
    env = ctx.eeg_envelopes
    fs = env.sampling_rate_hz
    i0 = int(round(t0 * fs))
    sliced = {}
    for key, series in env.envelopes.items():
        i1 = min(int(round(t1 * fs)), series.size)
        sliced[key] = series[i0:i1]
    window = eeg_mod.BandEnvelopeSet(envelopes=sliced, sampling_rate_hz=fs)
    feats = eeg_mod.eeg_features(window)
    return list(feats.values())


def _window_grid(duration_s: float, plan: WindowPlan) -> List[Tuple[float, float]]:
    if plan.is_full_block:
        return [(0.0, duration_s)]
    win = plan.window_s
    stride = plan.stride_s
    if duration_s + 1e-9 < win:
        raise DataError(
            f"block of {duration_s:.2f} s is shorter than the {win} s window"
        )
    n = int(np.floor((duration_s - win) / stride + 1e-9)) + 1
    return [(k * stride, k * stride + win) for k in range(n)]


def _feature_vector(ctx: BlockContext, modality_set: str, t0: float, t1: float) -> np.ndarray:
    values: List[float] = []
    if modality_set in (MODALITY_PHYSIO, MODALITY_ALL):
        values += _ecg_window_features(ctx, t0, t1)
        values += _eda_window_features(ctx, t0, t1)
        values += _emg_window_features(ctx, t0, t1)
    if modality_set in (MODALITY_EEG, MODALITY_ALL):
        values += _eeg_window_features(ctx, t0, t1)
    return np.array(values, dtype=np.float64)


# ----------------------------------------------------- sequence extraction ----


def _to_grid(x: np.ndarray, fs: float, grid: np.ndarray, channel: Channel, seq_fs: float) -> np.ndarray:
    sig = SampledSignal(channel, fs, x)
    if fs > 2.0 * seq_fs:
        lp = design_butterworth(
            FilterSpec(FilterKind.LOWPASS, 0.4 * seq_fs, order=4), fs
        )
        sig = apply_filter(sig, lp, zero_phase=True)
    times = np.arange(sig.n_samples) / fs
    return np.interp(grid, times, sig.samples)


def _sequence_matrix(
    ctx: BlockContext, modality_set: str, seq_fs: float
) -> np.ndarray:
    block = ctx.labeled.block
    n_steps = int(np.floor(ctx.duration_s * seq_fs + 1e-9))
    grid = np.arange(n_steps) / seq_fs
    cols: List[np.ndarray] = []
    if modality_set in (MODALITY_EEG, MODALITY_ALL):
        env = ctx.eeg_envelopes
        for channel in EEG_CHANNELS:
            label = eeg_mod.electrode_label(channel)
            for band in eeg_mod.BANDS:
                series = env.envelopes[(label, band.name)]
                cols.append(_to_grid(series, env.sampling_rate_hz, grid, channel, seq_fs))
    if modality_set in (MODALITY_PHYSIO, MODALITY_ALL):
        for channel in PHYSIO_CHANNELS:
            sig = block.signals[channel]
            cols.append(
                _to_grid(np.array(sig.samples), sig.sampling_rate_hz, grid, channel, seq_fs)
            )
    return np.stack(cols, axis=1)


def make_examples(
    labeled_blocks: Sequence[LabeledBlock],
    plan: WindowPlan,
    mode: str = MODE_FEATURE,
    modality_set: str = MODALITY_ALL,
    sequence_rate_hz: float = SEQUENCE_RATE_HZ,
    contexts: Optional[Mapping[str, BlockContext]] = None,
) -> ExampleSet:
    """Slice labeled blocks into windowed examples.

    Every window inherits its block's label. Feature mode concatenates the
    per-channel extractors into one vector per window; sequence mode emits
    t x C matrices at ``sequence_rate_hz``. ``contexts`` may carry
    previously prepared per-block work keyed by block_id.

    Raises:
        AlignmentError: channel durations in a block disagree beyond one
            sample of the coarsest rate.
        DataError: missing channels or blocks shorter than the window.
    """
    if mode not in (MODE_FEATURE, MODE_SEQUENCE):
        raise InvalidSpecError(f"unknown example mode {mode!r}")
    if modality_set not in MODALITY_SETS:
        raise InvalidSpecError(f"unknown modality set {modality_set!r}")
    names = (
        feature_names(modality_set)
        if mode == MODE_FEATURE
        else sequence_channel_names(modality_set)
    )
    examples: List[WindowExample] = []
    for labeled in labeled_blocks:
        block_id = labeled.block.block_id
        if contexts is not None and block_id in contexts:
            ctx = contexts[block_id]
        else:
            ctx = prepare_block(labeled, modality_set)
        if mode == MODE_FEATURE:
            for k, (t0, t1) in enumerate(_window_grid(ctx.duration_s, plan)):
                examples.append(
                    WindowExample(
                        subject_id=labeled.block.subject_id,
                        block_id=block_id,
                        slice_index=k,
                        label=labeled.label,
                        values=_feature_vector(ctx, modality_set, t0, t1),
                    )
                )
        else:
            matrix = _sequence_matrix(ctx, modality_set, sequence_rate_hz)
            if plan.is_full_block:
                windows = [matrix]
            else:
                win_n = max(1, int(round(plan.window_s * sequence_rate_hz)))
                stride_n = max(1, int(round(plan.stride_s * sequence_rate_hz)))
                if matrix.shape[0] < win_n:
                    raise DataError(
                        f"{block_id}: sequence of {matrix.shape[0]} steps is "
                        f"shorter than the {win_n}-step window"
                    )
                count = (matrix.shape[0] - win_n) // stride_n + 1
                windows = [matrix[k * stride_n : k * stride_n + win_n] for k in range(count)]
            for k, w in enumerate(windows):
                examples.append(
                    WindowExample(
                        subject_id=labeled.block.subject_id,
                        block_id=block_id,
                        slice_index=k,
                        label=labeled.label,
                        values=w,
                    )
                )
    return ExampleSet(mode=mode, names=names, examples=examples)


# ----------------------------------------------------------------- splits ----


def _largest_remainder_sizes(n: int, ratios: Sequence[float]) -> List[int]:
    quotas = [n * r for r in ratios]
    sizes = [int(np.floor(q)) for q in quotas]
    leftovers = n - sum(sizes)
    order = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - sizes[i]), i))
    for i in order[:leftovers]:
        sizes[i] += 1
    # every set gets at least one subject when n allows it
    for i in range(len(sizes)):
        while sizes[i] == 0 and max(sizes) > 1:
            j = int(np.argmax(sizes))
            sizes[j] -= 1
            sizes[i] += 1
    return sizes


def split_subjects(subject_labels: Mapping[str, Sequence[int]], seed: int = 0) -> SplitPlan:
    """Subject-disjoint 70/15/15 split, stratified on positive fraction.

    ``subject_labels`` maps subject id to that subject's block labels.
    Subjects are ordered by their positive-label fraction (ties shuffled by
    the seed) and dealt proportionally, so each fraction stratum spreads
    across train/validation/test.

    Raises:
        SplitError: fewer than 3 subjects.
    """
    subjects = sorted(subject_labels)
    n = len(subjects)
    if n < 3:
        raise SplitError(f"need >= 3 subjects to split, got {n}")
    sizes = _largest_remainder_sizes(n, SPLIT_RATIOS)
    frac = {
        s: float(np.mean(subject_labels[s])) if len(subject_labels[s]) else 0.0
        for s in subjects
    }
    rng = np.random.default_rng(seed)
    order = [subjects[i] for i in rng.permutation(n)]
    order.sort(key=lambda s: frac[s])  # stable sort keeps ties shuffled
    counts = [0, 0, 0]
    assigned: List[List[str]] = [[], [], []]
    for s in order:
        deficits = [
            (sizes[i] - counts[i]) / sizes[i] if sizes[i] else -1.0 for i in range(3)
        ]
        pick = int(np.argmax(deficits))
        assigned[pick].append(s)
        counts[pick] += 1
    return SplitPlan(
        train=frozenset(assigned[0]),
        validation=frozenset(assigned[1]),
        test=frozenset(assigned[2]),
        seed=seed,
    )


def cv_folds(subjects: Sequence[str], k: int = 5, seed: int = 0) -> List[Tuple[str, ...]]:
    """Deal subjects into k disjoint folds with sizes differing by <= 1.

    Raises:
        SplitError: k < 2 or fewer subjects than folds.
    """
    subs = sorted(set(subjects))
    if k < 2:
        raise SplitError(f"need k >= 2 folds, got {k}")
    if len(subs) < k:
        raise SplitError(f"cannot make {k} folds from {len(subs)} subjects")
    rng = np.random.default_rng(seed)
    order = [subs[i] for i in rng.permutation(len(subs))]
    folds: List[List[str]] = [[] for _ in range(k)]
    for i, s in enumerate(order):
        folds[i % k].append(s)
    return [tuple(sorted(f)) for f in folds]


# ------------------------------------------------------------------ cache ----


def save_examples(path, example_set: ExampleSet) -> None:
    """Write an ExampleSet as NPZ plus a JSON sidecar of names.

    Layout: ``values`` is the stacked example data (feature rows, or all
    sequence steps concatenated with ``lengths`` giving each example's step
    count), plus labels, subject and block ids, and slice indices. The
    sidecar ``<path>.meta.json`` holds the mode and name list.
    """
    path = Path(path)
    es = example_set
    arrays = {
        "labels": es.labels(),
        "subject_ids": np.array(es.subject_ids(), dtype=np.str_),
        "block_ids": np.array(es.block_ids(), dtype=np.str_),
        "slice_indices": np.array([ex.slice_index for ex in es.examples], dtype=np.int64),
    }
    if es.mode == MODE_FEATURE:
        arrays["values"] = es.feature_matrix()
        arrays["lengths"] = np.zeros(0, dtype=np.int64)
    else:
        seqs = es.sequences()
        arrays["values"] = (
            np.concatenate(seqs, axis=0) if seqs else np.empty((0, len(es.names)))
        )
        arrays["lengths"] = np.array([s.shape[0] for s in seqs], dtype=np.int64)
    with open(path, "wb") as fh:
        np.savez_compressed(fh, **arrays)
    meta = {
        "format_version": CACHE_FORMAT_VERSION,
        "registry_version": FEATURE_REGISTRY_VERSION,
        "mode": es.mode,
        "names": list(es.names),
    }
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")


def load_examples(path) -> ExampleSet:
    """Inverse of save_examples.

    Raises:
        DataError: missing files or an unsupported format version.
    """
    path = Path(path)
    meta_path = Path(str(path) + ".meta.json")
    if not path.exists() or not meta_path.exists():
        raise DataError(f"examples cache incomplete: {path} (+ sidecar) required")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    if meta.get("format_version") != CACHE_FORMAT_VERSION:
        raise DataError(
            f"unsupported cache format version {meta.get('format_version')!r}"
        )
    with np.load(path, allow_pickle=False) as data:
        labels = data["labels"]
        subject_ids = data["subject_ids"]
        block_ids = data["block_ids"]
        slice_indices = data["slice_indices"]
        values = data["values"]
        lengths = data["lengths"]
    mode = meta["mode"]
    examples = []
    if mode == MODE_FEATURE:
        rows = [values[i] for i in range(values.shape[0])]
    else:
        offsets = np.concatenate([[0], np.cumsum(lengths)])
        rows = [values[offsets[i] : offsets[i + 1]] for i in range(lengths.size)]
    for i, row in enumerate(rows):
        examples.append(
            WindowExample(
                subject_id=str(subject_ids[i]),
                block_id=str(block_ids[i]),
                slice_index=int(slice_indices[i]),
                label=int(labels[i]),
                values=row,
            )
        )
    return ExampleSet(mode=mode, names=tuple(meta["names"]), examples=examples)
