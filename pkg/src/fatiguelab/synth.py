"""Deterministic synthetic signals and studies with exact ground truth.

Every generator is a pure function of its config; the RNG is always PCG64
seeded through numpy's SeedSequence with documented entropy tuples, so the
same config produces bit-identical output on any platform.

Per-channel streams inside one config are decorrelated by mixing a fixed
channel slot into the seed entropy: (seed, 0) ECG, (seed, 1) EDA, (seed, 2)
EMG, (seed, 3+k) for EEG electrode k.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import eeg as eeg_mod
from .errors import InvalidSpecError
from .signals import EEG_CHANNELS, Channel, SampledSignal


def _rng(*entropy: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


# ------------------------------------------------------------------ configs ----

@dataclass(frozen=True)
class ECGParams:
    hr_bpm: float = 60.0
    rr_sd_ms: float = 0.0
    rr_mod_freq_hz: float = 0.0
    rr_mod_depth_ms: float = 0.0
    noise_rms: float = 0.0
    baseline_amp: float = 0.0
    baseline_freq_hz: float = 0.2

    def __post_init__(self):
        if self.rr_sd_ms < 0 or self.rr_mod_depth_ms < 0 or self.noise_rms < 0:
            raise InvalidSpecError("ECG variability/noise parameters must be >= 0")


@dataclass(frozen=True)
class EDAParams:
    tonic_level_us: float = 2.0
    tonic_slope_us_per_min: float = 0.0
    scr_rate_per_min: float = 4.0
    scr_amp_us: float = 0.3
    scr_min_spacing_s: float = 3.0
    noise_rms_us: float = 0.0

    def __post_init__(self):
        if self.tonic_level_us < 0 or self.scr_rate_per_min < 0 or self.scr_amp_us < 0:
            raise InvalidSpecError("EDA levels/rates must be >= 0")
        if self.scr_min_spacing_s <= 0 or self.noise_rms_us < 0:
            raise InvalidSpecError("EDA spacing must be > 0 and noise >= 0")


@dataclass(frozen=True)
class EMGParams:
    rms_level: float = 1.0
    median_freq_hz: float = 80.0
    spectral_width_hz: float = 30.0

    def __post_init__(self):
        if self.rms_level < 0 or self.median_freq_hz <= 0 or self.spectral_width_hz <= 0:
            raise InvalidSpecError("EMG level must be >= 0 and frequencies > 0")


@dataclass(frozen=True)
class EEGParams:
    #: relative band powers in canonical order delta, theta, alpha, beta, gamma
    band_weights: Tuple[float, ...] = (0.30, 0.18, 0.22, 0.20, 0.10)
    rms_uv: float = 20.0

    def __post_init__(self):
        w = np.asarray(self.band_weights, dtype=float)
        if w.size != len(eeg_mod.BANDS) or np.any(w < 0):
            raise InvalidSpecError("band_weights must be 5 values >= 0")
        if abs(float(w.sum()) - 1.0) > 1e-6:
            raise InvalidSpecError(f"band_weights must sum to 1, got {w.sum()}")
        if self.rms_uv < 0:
            raise InvalidSpecError("rms_uv must be >= 0")


@dataclass(frozen=True)
class SynthConfig:
    """All synthesis knobs for one recording block."""

    seed: int = 0
    duration_s: float = 60.0
    ecg_fs: float = 200.0
    eda_fs: float = 32.0
    emg_fs: float = 320.0
    eeg_fs: float = 128.0
    ecg: ECGParams = field(default_factory=ECGParams)
    eda: EDAParams = field(default_factory=EDAParams)
    emg: EMGParams = field(default_factory=EMGParams)
    eeg: EEGParams = field(default_factory=EEGParams)

    def __post_init__(self):
        if self.duration_s <= 0:
            raise InvalidSpecError(f"duration_s must be > 0, got {self.duration_s}")
        for fs in (self.ecg_fs, self.eda_fs, self.emg_fs, self.eeg_fs):
            if fs <= 0:
                raise InvalidSpecError(f"sampling rates must be > 0, got {fs}")


@dataclass
class GroundTruth:
    """Exact construction-time truth for one generated signal."""

    r_peak_times_s: Optional[np.ndarray] = None
    rr_ms: Optional[np.ndarray] = None
    scr_onset_times_s: Optional[np.ndarray] = None
    scr_peak_times_s: Optional[np.ndarray] = None
    scr_amplitudes_us: Optional[np.ndarray] = None
    emg_median_freq_hz: Optional[float] = None
    emg_rms: Optional[float] = None
    eeg_band_weights: Optional[Dict[str, float]] = None


# ----------------------------------------------------------------- gen_ecg ----

#: QRS morphology as (offset_s, width_s, amplitude) Gaussian components:
#: P, Q, R, S, T waves relative to the R peak.
ECG_WAVES = (
    (-0.200, 0.025, 0.12),
    (-0.028, 0.010, -0.15),
    (0.000, 0.012, 1.00),
    (0.030, 0.010, -0.22),
    (0.220, 0.045, 0.32),
)

#: Bateman SCR kernel time constants (rise, decay) in seconds.
SCR_TAU_RISE = 0.7
SCR_TAU_DECAY = 3.0


def gen_ecg(cfg: SynthConfig) -> Tuple[SampledSignal, GroundTruth]:
    """Template ECG: Gaussian-mixture beats on an RR sequence of
    base + sinusoidal modulation + seeded jitter.

    Raises:
        InvalidSpecError: heart rate outside [30, 220] bpm.
    """
    p = cfg.ecg
    if not 30.0 <= p.hr_bpm <= 220.0:
        raise InvalidSpecError(f"hr_bpm must be in [30, 220], got {p.hr_bpm}")
    rng = _rng(cfg.seed, 0)
    base_ms = 60000.0 / p.hr_bpm

    r_times: List[float] = []
    rr_list: List[float] = []
    t = 0.5  # first R; binary-exact so zero-variability RR diffs stay exact
    while t <= cfg.duration_s - 0.1:
        r_times.append(t)
        rr = base_ms + p.rr_mod_depth_ms * math.sin(2 * math.pi * p.rr_mod_freq_hz * t)
        if p.rr_sd_ms > 0:
            rr += rng.normal(0.0, p.rr_sd_ms)
        rr = min(max(rr, 300.0), 2500.0)
        rr_list.append(rr)
        t = t + rr / 1000.0
    r_arr = np.asarray(r_times)
    rr_arr = np.asarray(rr_list[: max(len(r_times) - 1, 0)])

    n = int(round(cfg.duration_s * cfg.ecg_fs))
    times = np.arange(n) / cfg.ecg_fs
    x = np.zeros(n)
    for r in r_arr:
        i0 = max(0, int(math.ceil((r - 0.36) * cfg.ecg_fs)))
        i1 = min(n, int(math.floor((r + 0.46) * cfg.ecg_fs)) + 1)
        tt = times[i0:i1] - r
        for mu, width, amp in ECG_WAVES:
            x[i0:i1] += amp * np.exp(-((tt - mu) ** 2) / (2 * width**2))
    if p.baseline_amp > 0:
        x += p.baseline_amp * np.sin(2 * math.pi * p.baseline_freq_hz * times)
    if p.noise_rms > 0:
        x += rng.normal(0.0, p.noise_rms, size=n)

    sig = SampledSignal(Channel.ECG, cfg.ecg_fs, x)
    return sig, GroundTruth(r_peak_times_s=r_arr, rr_ms=rr_arr)


# ----------------------------------------------------------------- gen_eda ----

def scr_kernel_peak_offset_s() -> float:
    """Time from SCR onset to the Bateman kernel's peak."""
    t1, t2 = SCR_TAU_RISE, SCR_TAU_DECAY
    return math.log(t2 / t1) * t1 * t2 / (t2 - t1)


def gen_eda(cfg: SynthConfig) -> Tuple[SampledSignal, GroundTruth]:
    """Tonic line plus Bateman-shaped SCR bumps at seeded Poisson onsets."""
    p = cfg.eda
    rng = _rng(cfg.seed, 1)
    n = int(round(cfg.duration_s * cfg.eda_fs))
    times = np.arange(n) / cfg.eda_fs
    x = p.tonic_level_us + p.tonic_slope_us_per_min * times / 60.0

    peak_dt = scr_kernel_peak_offset_s()
    peak_val = math.exp(-peak_dt / SCR_TAU_DECAY) - math.exp(-peak_dt / SCR_TAU_RISE)
    onsets: List[float] = []
    amps: List[float] = []
    if p.scr_rate_per_min > 0:
        mean_gap = 60.0 / p.scr_rate_per_min
        exp_scale = max(mean_gap - p.scr_min_spacing_s, 1e-6)
        t = 2.0 + rng.exponential(exp_scale)
        while t < cfg.duration_s - 4.0:
            onsets.append(t)
            amps.append(p.scr_amp_us * rng.uniform(0.6, 1.4))
            t += p.scr_min_spacing_s + rng.exponential(exp_scale)
    for onset, amp in zip(onsets, amps):
        i0 = int(math.ceil(onset * cfg.eda_fs))
        tt = times[i0:] - onset
        x[i0:] += (amp / peak_val) * (
            np.exp(-tt / SCR_TAU_DECAY) - np.exp(-tt / SCR_TAU_RISE)
        )
    if p.noise_rms_us > 0:
        x += rng.normal(0.0, p.noise_rms_us, size=n)
    x = np.maximum(x, 0.01)

    onset_arr = np.asarray(onsets)
    truth = GroundTruth(
        scr_onset_times_s=onset_arr,
        scr_peak_times_s=onset_arr + peak_dt,
        scr_amplitudes_us=np.asarray(amps),
    )
    return SampledSignal(Channel.EDA, cfg.eda_fs, x), truth


# ----------------------------------------------------------------- gen_emg ----

def gen_emg(cfg: SynthConfig) -> Tuple[SampledSignal, GroundTruth]:
    """Gaussian noise spectrally shaped to a target median frequency and RMS.

    The shaping envelope is a Gaussian bump centered on the requested median
    frequency; the truth records the exact median of the shaped spectrum
    (which shifts slightly below the center when the bump clips at Nyquist).
    """
    p = cfg.emg
    rng = _rng(cfg.seed, 2)
    n = int(round(cfg.duration_s * cfg.emg_fs))
    white = rng.standard_normal(n)
    freqs = np.fft.rfftfreq(n, 1.0 / cfg.emg_fs)
    envelope = np.exp(-((freqs - p.median_freq_hz) ** 2) / (2 * p.spectral_width_hz**2))
    envelope[0] = 0.0  # zero-mean output
    spectrum = np.fft.rfft(white) * envelope
    x = np.fft.irfft(spectrum, n)
    rms = float(np.sqrt(np.mean(x**2)))
    if rms <= 0:
        raise InvalidSpecError("degenerate EMG spectrum: zero power")
    x *= p.rms_level / rms

    power = envelope**2
    cdf = np.cumsum(power)
    k = int(np.searchsorted(cdf, 0.5 * cdf[-1]))
    truth = GroundTruth(
        emg_median_freq_hz=float(freqs[k]),
        emg_rms=p.rms_level,
    )
    return SampledSignal(Channel.EMG, cfg.emg_fs, x), truth


# ----------------------------------------------------------------- gen_eeg ----

def gen_eeg(cfg: SynthConfig, channel: Channel = Channel.EEG_TP9) -> Tuple[SampledSignal, GroundTruth]:
    """Band-weighted noise for one electrode.

    The amplitude spectrum is piecewise constant: band b gets weight
    sqrt(w_b / bandwidth_b) so each band carries the requested fraction of
    total power. Output is scaled to the requested total RMS.
    """
    p = cfg.eeg
    if channel not in EEG_CHANNELS:
        raise InvalidSpecError(f"{channel.value} is not an EEG electrode")
    slot = 3 + EEG_CHANNELS.index(channel)
    rng = _rng(cfg.seed, slot)
    n = int(round(cfg.duration_s * cfg.eeg_fs))
    freqs = np.fft.rfftfreq(n, 1.0 / cfg.eeg_fs)
    envelope = np.zeros_like(freqs)
    for band, weight in zip(eeg_mod.BANDS, p.band_weights):
        if weight <= 0:
            continue
        lo, hi = eeg_mod.band_edges(band, cfg.eeg_fs)
        mask = (freqs >= lo) & (freqs < hi)
        envelope[mask] = math.sqrt(weight / (hi - lo))
    spectrum = np.fft.rfft(rng.standard_normal(n)) * envelope
    x = np.fft.irfft(spectrum, n)
    rms = float(np.sqrt(np.mean(x**2)))
    if rms <= 0:
        raise InvalidSpecError("degenerate EEG spectrum: zero power")
    x *= p.rms_uv / rms

    weights = {b.name: float(w) for b, w in zip(eeg_mod.BANDS, p.band_weights)}
    return SampledSignal(channel, cfg.eeg_fs, x), GroundTruth(eeg_band_weights=weights)


# --------------------------------------------------------------- gen_study ----

#: Protocol: reading index -> task performed just before the reading.
TASK_TAGS = {1: "baseline", 2: "zero_back", 3: "treadmill_rest", 4: "two_back", 5: "two_back"}
SESSIONS = ("morning", "evening")
CF_POSITIVE_READINGS = frozenset({4, 5})
PF_POSITIVE_READINGS = frozenset({3})
PF_EXCLUDED_READINGS = frozenset({4, 5})
VAS_KEYS = ("tiredness", "physical", "cognitive", "sleepiness")


@dataclass(frozen=True)
class FatigueShift:
    """Parameter deltas applied to a block in the fatigued state."""

    hr_rise_bpm: float = 0.0
    rr_sd_drop_frac: float = 0.0
    scr_rate_rise_per_min: float = 0.0
    scr_amp_boost_frac: float = 0.0
    emg_mf_drop_hz: float = 0.0
    emg_rms_boost_frac: float = 0.0
    theta_boost: float = 0.0
    beta_boost: float = 0.0


#: Cognitive-fatigue signature: mostly EEG theta plus mild autonomic arousal.
CF_SHIFT = FatigueShift(
    hr_rise_bpm=6.0,
    rr_sd_drop_frac=0.30,
    scr_rate_rise_per_min=1.5,
    scr_amp_boost_frac=0.10,
    emg_mf_drop_hz=4.0,
    theta_boost=0.12,
)

#: Physical-fatigue signature: muscle spectrum compression plus strong
#: cardiovascular/electrodermal response, little EEG change.
PF_SHIFT = FatigueShift(
    hr_rise_bpm=18.0,
    rr_sd_drop_frac=0.45,
    scr_rate_rise_per_min=4.0,
    scr_amp_boost_frac=0.50,
    emg_mf_drop_hz=22.0,
    emg_rms_boost_frac=0.30,
    beta_boost=0.04,
)


@dataclass(frozen=True)
class EffectConfig:
    """Fatigue effect magnitudes; scale=0 produces a null study (no signal)."""

    scale: float = 1.0
    cf: FatigueShift = field(default_factory=lambda: CF_SHIFT)
    pf: FatigueShift = field(default_factory=lambda: PF_SHIFT)

    def __post_init__(self):
        if self.scale < 0:
            raise InvalidSpecError(f"effect scale must be >= 0, got {self.scale}")


def _time_decimals(fs: float) -> int:
    """Decimal places that render k/fs timestamps exactly (capped at 9)."""
    fs_int = int(round(fs))
    if abs(fs - fs_int) > 1e-9:
        return 9
    for d in range(10):
        if (10**d) % fs_int == 0:
            return d
    return 9


def _write_channel_csv(path: Path, sig: SampledSignal) -> None:
    # row-by-row %-formatting beats pandas' float_format path by ~5x here
    nd = max(_time_decimals(sig.sampling_rate_hz), 6)
    fmt = f"%.{nd}f,%.6f"
    rows = zip(sig.times().tolist(), sig.samples.tolist())
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("t_s,value\n")
        f.write("\n".join(fmt % row for row in rows))
        f.write("\n")


def _subject_baseline(rng: np.random.Generator) -> Dict[str, float]:
    """Per-subject resting physiology drawn from population distributions."""
    w = np.asarray([0.30, 0.18, 0.22, 0.20, 0.10])
    w = w + rng.normal(0.0, 0.015, size=5)
    w = np.clip(w, 0.02, None)
    w = w / w.sum()
    return {
        "hr_bpm": float(np.clip(rng.normal(64.0, 6.0), 45.0, 100.0)),
        "rr_sd_ms": float(np.clip(rng.normal(45.0, 8.0), 15.0, None)),
        "rr_mod_freq_hz": float(rng.uniform(0.08, 0.12)),
        "rr_mod_depth_ms": float(np.clip(rng.normal(25.0, 5.0), 0.0, None)),
        "tonic_level_us": float(rng.uniform(1.5, 4.0)),
        "scr_rate_per_min": float(np.clip(rng.normal(3.0, 0.7), 0.5, 8.0)),
        "scr_amp_us": float(rng.uniform(0.2, 0.5)),
        "emg_rms": float(rng.uniform(0.8, 1.2)),
        "emg_mf_hz": float(np.clip(rng.normal(85.0, 6.0), 60.0, 110.0)),
        "eeg_rms_uv": float(rng.uniform(15.0, 25.0)),
        "w_delta": float(w[0]),
        "w_theta": float(w[1]),
        "w_alpha": float(w[2]),
        "w_beta": float(w[3]),
        "w_gamma": float(w[4]),
    }


def _block_params(
    base: Dict[str, float], shift: Optional[FatigueShift], scale: float, rng: np.random.Generator
) -> Dict[str, float]:
    """Apply a scaled fatigue shift plus small within-subject jitter."""
    s = scale
    jit = lambda lo, hi: float(rng.uniform(lo, hi))  # noqa: E731
    p = dict(base)
    p["hr_bpm"] = base["hr_bpm"] * jit(0.97, 1.03)
    p["rr_sd_ms"] = base["rr_sd_ms"] * jit(0.9, 1.1)
    p["scr_rate_per_min"] = base["scr_rate_per_min"] * jit(0.85, 1.15)
    p["scr_amp_us"] = base["scr_amp_us"] * jit(0.9, 1.1)
    p["emg_rms"] = base["emg_rms"] * jit(0.95, 1.05)
    p["emg_mf_hz"] = base["emg_mf_hz"] * jit(0.97, 1.03)
    p["tonic_level_us"] = base["tonic_level_us"] * jit(0.95, 1.05)
    if shift is not None and s > 0:
        p["hr_bpm"] = min(p["hr_bpm"] + shift.hr_rise_bpm * s, 180.0)
        p["rr_sd_ms"] = p["rr_sd_ms"] * (1.0 - shift.rr_sd_drop_frac * s)
        p["scr_rate_per_min"] = min(p["scr_rate_per_min"] + shift.scr_rate_rise_per_min * s, 10.0)
        p["scr_amp_us"] = p["scr_amp_us"] * (1.0 + shift.scr_amp_boost_frac * s)
        p["emg_mf_hz"] = max(p["emg_mf_hz"] - shift.emg_mf_drop_hz * s, 30.0)
        p["emg_rms"] = p["emg_rms"] * (1.0 + shift.emg_rms_boost_frac * s)
        p["w_theta"] = base["w_theta"] + shift.theta_boost * s
        p["w_beta"] = base["w_beta"] + shift.beta_boost * s
    w = np.asarray([p["w_delta"], p["w_theta"], p["w_alpha"], p["w_beta"], p["w_gamma"]])
    w = w / w.sum()
    p["w_delta"], p["w_theta"], p["w_alpha"], p["w_beta"], p["w_gamma"] = (float(v) for v in w)
    return p


def _vas_scores(reading: int, scale: float, rng: np.random.Generator) -> Dict[str, int]:
    mu = {"tiredness": 2.5, "physical": 2.0, "cognitive": 2.0, "sleepiness": 3.0}
    if reading == 2:
        bump = {"tiredness": 0.3, "physical": 0.0, "cognitive": 0.5, "sleepiness": 0.2}
    elif reading == 3:
        bump = {"tiredness": 2.5 * scale, "physical": 5.0 * scale, "cognitive": 1.0 * scale, "sleepiness": 1.0 * scale}
    elif reading == 4:
        bump = {"tiredness": 3.0 * scale, "physical": 1.0 * scale, "cognitive": 5.0 * scale, "sleepiness": 3.5 * scale}
    elif reading == 5:
        bump = {"tiredness": 3.5 * scale, "physical": 1.0 * scale, "cognitive": 5.5 * scale, "sleepiness": 4.0 * scale}
    else:
        bump = {k: 0.0 for k in VAS_KEYS}
    return {
        k: int(np.clip(round(rng.normal(mu[k] + bump[k], 0.8)), 1, 10)) for k in VAS_KEYS
    }


def _block_seed(seed: int, si: int, sess_i: int, reading: int) -> int:
    return int(np.random.SeedSequence((seed, si, sess_i, reading)).generate_state(1)[0])


def block_labels(reading: int) -> Tuple[int, Optional[int]]:
    """(CF label, PF label or None when excluded) for a reading index."""
    cf = 1 if reading in CF_POSITIVE_READINGS else 0
    if reading in PF_EXCLUDED_READINGS:
        pf = None
    else:
        pf = 1 if reading in PF_POSITIVE_READINGS else 0
    return cf, pf


def gen_study(
    out_dir,
    n_subjects: int = 32,
    effect: Optional[EffectConfig] = None,
    seed: int = 0,
    block_duration_s: float = 56.0,
    duration_jitter_frac: float = 0.08,
    ecg_fs: float = 200.0,
    eda_fs: float = 32.0,
    emg_fs: float = 320.0,
    eeg_fs: float = 128.0,
) -> Tuple[Path, dict]:
    """Write a full synthetic study to disk: manifest.json, truth.json, CSVs.

    Layout: out_dir/manifest.json, out_dir/truth.json,
    out_dir/csv/<subject>/<session>_r<reading>_<channel>.csv.

    Each subject gets 2 sessions x 5 readings. Fatigued readings (3 for PF,
    4 and 5 for CF) get parameter shifts per the effect config. Returns the
    manifest path and the truth dict.

    Raises:
        InvalidSpecError: fewer than 3 subjects.
    """
    if n_subjects < 3:
        raise InvalidSpecError(f"need >= 3 subjects, got {n_subjects}")
    effect = effect if effect is not None else EffectConfig()
    out_dir = Path(out_dir)
    (out_dir / "csv").mkdir(parents=True, exist_ok=True)

    manifest_subjects = []
    truth_blocks = []
    for si in range(n_subjects):
        subject_id = f"S{si + 1:02d}"
        base = _subject_baseline(_rng(seed, si, 1000))
        subj_dir = out_dir / "csv" / subject_id
        subj_dir.mkdir(exist_ok=True)
        sessions = []
        for sess_i, session in enumerate(SESSIONS):
            readings = []
            for reading in range(1, 6):
                block_rng = _rng(seed, si, sess_i, reading, 2000)
                cf_label, pf_label = block_labels(reading)
                if reading in PF_POSITIVE_READINGS:
                    shift = effect.pf
                elif reading in CF_POSITIVE_READINGS:
                    shift = effect.cf
                else:
                    shift = None
                params = _block_params(base, shift, effect.scale, block_rng)
                duration = block_duration_s * float(
                    block_rng.uniform(1.0 - duration_jitter_frac, 1.0 + duration_jitter_frac)
                )
                cfg = SynthConfig(
                    seed=_block_seed(seed, si, sess_i, reading),
                    duration_s=duration,
                    ecg_fs=ecg_fs,
                    eda_fs=eda_fs,
                    emg_fs=emg_fs,
                    eeg_fs=eeg_fs,
                    ecg=ECGParams(
                        hr_bpm=params["hr_bpm"],
                        rr_sd_ms=params["rr_sd_ms"],
                        rr_mod_freq_hz=params["rr_mod_freq_hz"],
                        rr_mod_depth_ms=params["rr_mod_depth_ms"],
                        noise_rms=0.03,
                        baseline_amp=0.10,
                        baseline_freq_hz=float(block_rng.uniform(0.15, 0.25)),
                    ),
                    eda=EDAParams(
                        tonic_level_us=params["tonic_level_us"],
                        tonic_slope_us_per_min=float(block_rng.uniform(-0.1, 0.1)),
                        scr_rate_per_min=params["scr_rate_per_min"],
                        scr_amp_us=params["scr_amp_us"],
                        noise_rms_us=0.004,
                    ),
                    emg=EMGParams(rms_level=params["emg_rms"], median_freq_hz=params["emg_mf_hz"]),
                    eeg=EEGParams(
                        band_weights=(
                            params["w_delta"],
                            params["w_theta"],
                            params["w_alpha"],
                            params["w_beta"],
                            params["w_gamma"],
                        ),
                        rms_uv=params["eeg_rms_uv"],
                    ),
                )

                stem = f"{session}_r{reading}"
                channels = []
                ecg_sig, ecg_truth = gen_ecg(cfg)
                eda_sig, eda_truth = gen_eda(cfg)
                emg_sig, emg_truth = gen_emg(cfg)
                for sig in (ecg_sig, eda_sig, emg_sig):
                    rel = f"csv/{subject_id}/{stem}_{sig.channel_id.value}.csv"
                    _write_channel_csv(out_dir / rel, sig)
                    channels.append(
                        {
                            "channel_id": sig.channel_id.value,
                            "sampling_rate_hz": sig.sampling_rate_hz,
                            "csv_path": rel,
                        }
                    )
                for electrode in EEG_CHANNELS:
                    sig, _ = gen_eeg(cfg, channel=electrode)
                    rel = f"csv/{subject_id}/{stem}_{electrode.value}.csv"
                    _write_channel_csv(out_dir / rel, sig)
                    channels.append(
                        {
                            "channel_id": electrode.value,
                            "sampling_rate_hz": sig.sampling_rate_hz,
                            "csv_path": rel,
                        }
                    )

                vas = _vas_scores(reading, effect.scale, block_rng)
                readings.append(
                    {
                        "index": reading,
                        "task_tag": TASK_TAGS[reading],
                        "vas": vas,
                        "channels": channels,
                    }
                )
                truth_blocks.append(
                    {
                        "subject_id": subject_id,
                        "session": session,
                        "reading_index": reading,
                        "task_tag": TASK_TAGS[reading],
                        "label_cf": cf_label,
                        "label_pf": pf_label,
                        "duration_s": duration,
                        "vas": vas,
                        "params": {
                            "hr_bpm": params["hr_bpm"],
                            "rr_sd_ms": params["rr_sd_ms"],
                            "scr_rate_per_min": params["scr_rate_per_min"],
                            "emg_median_freq_hz": emg_truth.emg_median_freq_hz,
                            "theta_weight": params["w_theta"],
                        },
                        "r_peak_times_s": [float(round(t, 6)) for t in ecg_truth.r_peak_times_s],
                        "scr_onset_times_s": [float(round(t, 6)) for t in eda_truth.scr_onset_times_s],
                        "scr_peak_times_s": [float(round(t, 6)) for t in eda_truth.scr_peak_times_s],
                        "scr_amplitudes_us": [float(round(a, 6)) for a in eda_truth.scr_amplitudes_us],
                    }
                )
            sessions.append({"name": session, "readings": readings})
        manifest_subjects.append({"id": subject_id, "sessions": sessions})

    manifest = {"subjects": manifest_subjects}
    manifest_path = out_dir / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=1)
    truth = {
        "seed": seed,
        "n_subjects": n_subjects,
        "effect": asdict(effect),
        "blocks": truth_blocks,
    }
    with open(out_dir / "truth.json", "w", encoding="utf-8") as f:
        json.dump(truth, f, indent=1)
    return manifest_path, truth
