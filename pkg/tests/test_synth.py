"""Tests for the synthetic-signal and synthetic-study generators."""
import hashlib
import json
import math
from pathlib import Path

import numpy as np
import pytest

from fatiguelab import eeg as eeg_mod
from fatiguelab.errors import InvalidSpecError
from fatiguelab.signals import Channel
from fatiguelab.synth import (
    ECGParams,
    EDAParams,
    EEGParams,
    EMGParams,
    EffectConfig,
    SynthConfig,
    gen_ecg,
    gen_eda,
    gen_eeg,
    gen_emg,
    gen_study,
    scr_kernel_peak_offset_s,
)


# ---------------------------------------------------------------------- ecg ----

def test_ecg_constant_rate_exact_rr():
    cfg = SynthConfig(seed=1, duration_s=60.0, ecg=ECGParams(hr_bpm=60.0))
    sig, truth = gen_ecg(cfg)
    assert sig.channel_id is Channel.ECG
    rr_s = np.diff(truth.r_peak_times_s)
    assert np.all(rr_s == 1.0)
    assert np.all(truth.rr_ms == 1000.0)
    assert truth.rr_ms.size == truth.r_peak_times_s.size - 1


def test_ecg_r_peaks_near_unit_amplitude():
    cfg = SynthConfig(seed=2, duration_s=30.0, ecg=ECGParams(hr_bpm=70.0))
    sig, truth = gen_ecg(cfg)
    idx = np.round(truth.r_peak_times_s * cfg.ecg_fs).astype(int)
    peaks = sig.samples[idx]
    assert np.all(peaks > 0.9) and np.all(peaks < 1.1)


def test_ecg_modulation_peaks_at_requested_frequency():
    cfg = SynthConfig(
        seed=3,
        duration_s=120.0,
        ecg=ECGParams(hr_bpm=70.0, rr_mod_freq_hz=0.25, rr_mod_depth_ms=50.0),
    )
    _, truth = gen_ecg(cfg)
    t = truth.r_peak_times_s[:-1]
    rr = truth.rr_ms - np.mean(truth.rr_ms)
    fs_tach = 4.0
    grid = np.arange(t[0], t[-1], 1.0 / fs_tach)
    tach = np.interp(grid, t, rr)
    spectrum = np.abs(np.fft.rfft(tach * np.hanning(tach.size)))
    freqs = np.fft.rfftfreq(tach.size, 1.0 / fs_tach)
    peak_freq = freqs[1:][np.argmax(spectrum[1:])]
    assert abs(peak_freq - 0.25) < 0.05


def test_ecg_seed_determinism():
    cfg = SynthConfig(seed=7, duration_s=20.0, ecg=ECGParams(hr_bpm=80.0, rr_sd_ms=30.0))
    a, ta = gen_ecg(cfg)
    b, tb = gen_ecg(cfg)
    assert np.array_equal(a.samples, b.samples)
    assert np.array_equal(ta.r_peak_times_s, tb.r_peak_times_s)
    c, _ = gen_ecg(SynthConfig(seed=8, duration_s=20.0, ecg=ECGParams(hr_bpm=80.0, rr_sd_ms=30.0)))
    assert not np.array_equal(a.samples, c.samples)


@pytest.mark.parametrize("hr", [25.0, 230.0])
def test_ecg_rejects_bad_heart_rate(hr):
    with pytest.raises(InvalidSpecError):
        gen_ecg(SynthConfig(ecg=ECGParams(hr_bpm=hr)))


def test_ecg_param_validation():
    with pytest.raises(InvalidSpecError):
        ECGParams(rr_sd_ms=-1.0)


# ---------------------------------------------------------------------- eda ----

def test_scr_kernel_peak_offset_matches_numeric_argmax():
    t = np.linspace(0.0, 5.0, 500001)
    kernel = np.exp(-t / 3.0) - np.exp(-t / 0.7)
    assert abs(scr_kernel_peak_offset_s() - t[np.argmax(kernel)]) < 1e-4


def test_eda_truth_consistency():
    cfg = SynthConfig(
        seed=4,
        duration_s=90.0,
        eda=EDAParams(scr_rate_per_min=5.0, scr_amp_us=0.4, scr_min_spacing_s=4.0),
    )
    sig, truth = gen_eda(cfg)
    n = truth.scr_onset_times_s.size
    assert truth.scr_peak_times_s.shape == (n,)
    assert truth.scr_amplitudes_us.shape == (n,)
    assert n > 0
    if n > 1:
        assert np.all(np.diff(truth.scr_onset_times_s) >= 4.0)
    assert np.allclose(truth.scr_peak_times_s - truth.scr_onset_times_s, scr_kernel_peak_offset_s())
    assert np.all(truth.scr_amplitudes_us >= 0.4 * 0.6 - 1e-12)
    assert np.all(sig.samples >= 0.01)


def test_eda_bump_peaks_at_recorded_time_and_amplitude():
    # sparse bumps: each realized local max should sit at truth peak time
    cfg = SynthConfig(
        seed=5,
        duration_s=120.0,
        eda=EDAParams(scr_rate_per_min=1.5, scr_amp_us=0.5, scr_min_spacing_s=20.0),
    )
    sig, truth = gen_eda(cfg)
    fs = cfg.eda_fs
    for onset, peak_t, amp in zip(
        truth.scr_onset_times_s, truth.scr_peak_times_s, truth.scr_amplitudes_us
    ):
        i_peak = int(round(peak_t * fs))
        i_on = int(round(onset * fs))
        rise = sig.samples[i_peak] - sig.samples[i_on]
        assert rise == pytest.approx(amp, rel=0.1)


def test_eda_zero_rate_no_bumps():
    cfg = SynthConfig(seed=6, duration_s=30.0, eda=EDAParams(scr_rate_per_min=0.0))
    sig, truth = gen_eda(cfg)
    assert truth.scr_onset_times_s.size == 0
    assert np.allclose(sig.samples, cfg.eda.tonic_level_us)


def test_eda_param_validation():
    with pytest.raises(InvalidSpecError):
        EDAParams(scr_rate_per_min=-1.0)
    with pytest.raises(InvalidSpecError):
        EDAParams(scr_min_spacing_s=0.0)


# ---------------------------------------------------------------------- emg ----

def test_emg_exact_rms():
    cfg = SynthConfig(seed=9, duration_s=60.0, emg=EMGParams(rms_level=2.0))
    sig, truth = gen_emg(cfg)
    rms = np.sqrt(np.mean(sig.samples**2))
    assert rms == pytest.approx(2.0, rel=1e-12)
    assert truth.emg_rms == 2.0


def test_emg_median_frequency_of_realization():
    cfg = SynthConfig(seed=10, duration_s=60.0, emg=EMGParams(median_freq_hz=80.0))
    sig, truth = gen_emg(cfg)
    assert truth.emg_median_freq_hz == pytest.approx(80.0, abs=2.0)
    power = np.abs(np.fft.rfft(sig.samples)) ** 2
    freqs = np.fft.rfftfreq(sig.n_samples, 1.0 / cfg.emg_fs)
    cdf = np.cumsum(power)
    realized = freqs[np.searchsorted(cdf, 0.5 * cdf[-1])]
    assert realized == pytest.approx(truth.emg_median_freq_hz, rel=0.07)


def test_emg_median_shifts_with_target():
    lo_cfg = SynthConfig(seed=11, duration_s=30.0, emg=EMGParams(median_freq_hz=55.0))
    hi_cfg = SynthConfig(seed=11, duration_s=30.0, emg=EMGParams(median_freq_hz=95.0))
    _, lo = gen_emg(lo_cfg)
    _, hi = gen_emg(hi_cfg)
    assert lo.emg_median_freq_hz < hi.emg_median_freq_hz - 20.0


def test_emg_param_validation():
    with pytest.raises(InvalidSpecError):
        EMGParams(median_freq_hz=0.0)


# ---------------------------------------------------------------------- eeg ----

def test_eeg_alpha_only_round_trip():
    cfg = SynthConfig(
        seed=12,
        duration_s=30.0,
        eeg_fs=256.0,
        eeg=EEGParams(band_weights=(0.0, 0.0, 1.0, 0.0, 0.0)),
    )
    sig, truth = gen_eeg(cfg, channel=Channel.EEG_AF7)
    assert truth.eeg_band_weights["alpha"] == 1.0
    powers = {}
    for band in eeg_mod.BANDS:
        filtered = eeg_mod.band_filter(sig, band)
        powers[band.name] = float(np.mean(filtered.samples**2))
    assert powers["alpha"] / sum(powers.values()) >= 0.95


def test_eeg_rms_scaling():
    cfg = SynthConfig(seed=13, duration_s=20.0, eeg=EEGParams(rms_uv=20.0))
    sig, _ = gen_eeg(cfg)
    assert np.sqrt(np.mean(sig.samples**2)) == pytest.approx(20.0, rel=1e-12)


def test_eeg_electrodes_differ_and_are_deterministic():
    cfg = SynthConfig(seed=14, duration_s=10.0)
    tp9a, _ = gen_eeg(cfg, channel=Channel.EEG_TP9)
    tp9b, _ = gen_eeg(cfg, channel=Channel.EEG_TP9)
    af7, _ = gen_eeg(cfg, channel=Channel.EEG_AF7)
    assert np.array_equal(tp9a.samples, tp9b.samples)
    assert not np.array_equal(tp9a.samples, af7.samples)


def test_eeg_weight_validation():
    with pytest.raises(InvalidSpecError):
        EEGParams(band_weights=(0.5, 0.5, 0.5, 0.0, 0.0))
    with pytest.raises(InvalidSpecError):
        EEGParams(band_weights=(-0.1, 0.4, 0.3, 0.2, 0.2))
    with pytest.raises(InvalidSpecError):
        gen_eeg(SynthConfig(), channel=Channel.ECG)


# -------------------------------------------------------------------- study ----

def _study_digest(root: Path) -> dict:
    digests = {}
    for path in sorted(root.rglob("*.csv")):
        digests[str(path.relative_to(root))] = hashlib.sha256(path.read_bytes()).hexdigest()
    return digests


def test_gen_study_structure_and_determinism(tmp_path):
    kwargs = dict(n_subjects=3, seed=21, block_duration_s=8.0)
    manifest_path, truth = gen_study(tmp_path / "a", **kwargs)
    manifest = json.loads(manifest_path.read_text())

    assert len(manifest["subjects"]) == 3
    assert len(truth["blocks"]) == 3 * 2 * 5
    for subject in manifest["subjects"]:
        assert len(subject["sessions"]) == 2
        for session in subject["sessions"]:
            assert [r["index"] for r in session["readings"]] == [1, 2, 3, 4, 5]
            for reading in session["readings"]:
                assert len(reading["channels"]) == 7
                for chan in reading["channels"]:
                    csv_path = tmp_path / "a" / chan["csv_path"]
                    assert csv_path.exists()
                    header = csv_path.open().readline().strip()
                    assert header == "t_s,value"
                for key, value in reading["vas"].items():
                    assert 1 <= value <= 10

    # label protocol: per session CF = [0,0,0,1,1], PF = [0,0,1,None,None]
    for block in truth["blocks"]:
        ri = block["reading_index"]
        assert block["label_cf"] == (1 if ri in (4, 5) else 0)
        if ri in (4, 5):
            assert block["label_pf"] is None
        else:
            assert block["label_pf"] == (1 if ri == 3 else 0)

    # same seed, byte-identical CSVs
    gen_study(tmp_path / "b", **kwargs)
    da = _study_digest(tmp_path / "a")
    db = _study_digest(tmp_path / "b")
    assert da == db and len(da) == 3 * 2 * 5 * 7


def test_gen_study_effect_shifts_parameters(tmp_path):
    _, truth = gen_study(tmp_path / "s", n_subjects=3, seed=5, block_duration_s=6.0)
    by_reading = {}
    for block in truth["blocks"]:
        by_reading.setdefault(block["reading_index"], []).append(block["params"])

    def mean_of(reading, key):
        return np.mean([p[key] for p in by_reading[reading]])

    # PF blocks: big EMG median drop, HR rise; CF blocks: theta boost
    assert mean_of(3, "emg_median_freq_hz") < mean_of(1, "emg_median_freq_hz") - 10.0
    assert mean_of(3, "hr_bpm") > mean_of(1, "hr_bpm") + 8.0
    assert mean_of(4, "theta_weight") > mean_of(1, "theta_weight") + 0.05
    assert mean_of(3, "scr_rate_per_min") > mean_of(1, "scr_rate_per_min") + 1.5


def test_gen_study_null_effect_has_no_shifts(tmp_path):
    _, truth = gen_study(
        tmp_path / "n", n_subjects=3, seed=5, block_duration_s=6.0, effect=EffectConfig(scale=0.0)
    )
    by_reading = {}
    for block in truth["blocks"]:
        by_reading.setdefault(block["reading_index"], []).append(block["params"])
    mf1 = np.mean([p["emg_median_freq_hz"] for p in by_reading[1]])
    mf3 = np.mean([p["emg_median_freq_hz"] for p in by_reading[3]])
    assert abs(mf1 - mf3) < 8.0  # only jitter-level differences remain


def test_gen_study_rejects_too_few_subjects(tmp_path):
    with pytest.raises(InvalidSpecError):
        gen_study(tmp_path / "x", n_subjects=2)
