"""Tests for EMG cleaning and feature extraction."""
import numpy as np
import pytest

from fatiguelab.emg import (
    FREQ_FEATURE_NAMES,
    TIME_FEATURE_NAMES,
    clean_emg,
    emg_features,
    emg_freq_features,
    emg_time_features,
)
from fatiguelab.errors import DataError, InvalidSpecError
from fatiguelab.signals import Channel, SampledSignal
from fatiguelab.synth import EMGParams, SynthConfig, gen_emg


def make_sig(x, fs=1000.0):
    return SampledSignal(Channel.EMG, fs, np.asarray(x, dtype=float))


def tone(freq, fs=1000.0, dur=4.0, amp=1.0, phase=0.0):
    t = np.arange(int(dur * fs)) / fs
    return make_sig(amp * np.sin(2 * np.pi * freq * t + phase), fs)


def tone_gain_db(freq, fs=1000.0, dur=6.0):
    """Power gain of clean_emg at one frequency, edges trimmed."""
    sig = tone(freq, fs, dur)
    out = clean_emg(sig)
    trim = int(fs)
    k = int(round(freq * (dur - 2.0)))
    a_in = np.abs(np.fft.rfft(sig.samples[trim:-trim]))[k]
    a_out = np.abs(np.fft.rfft(out.samples[trim:-trim]))[k]
    return 20.0 * np.log10(a_out / a_in)


def square_wave_20(n=1000):
    """Unit square at 10 Hz over 1 s at fs 1000 with exactly 20 sign flips.

    Half period is 50 samples; the phase puts transitions at samples
    25, 75, ..., 975, so all 20 alternations are interior.
    """
    k = np.arange(n)
    return np.where(((k + 25) // 50) % 2 == 0, 1.0, -1.0)


# --------------------------------------------------------------- cleaning ----

def test_clean_notches_50hz():
    assert tone_gain_db(50.0) <= -40.0


def test_clean_passes_100hz():
    assert abs(tone_gain_db(100.0)) <= 1.0


def test_clean_removes_dc():
    sig = make_sig(np.ones(4000) * 1.0)
    out = clean_emg(sig)
    assert abs(np.mean(out.samples[500:-500])) < 1e-3


def test_clean_rejects_low_rate():
    with pytest.raises(InvalidSpecError):
        clean_emg(SampledSignal(Channel.EMG, 100.0, np.zeros(500)))


# ----------------------------------------------------------- time features ----

def test_time_zero_signal_all_zero():
    feats = emg_time_features(make_sig(np.zeros(1000)))
    for name in TIME_FEATURE_NAMES:
        assert feats[name] == 0.0


def test_time_doubling_scales_linear_fields():
    rng = np.random.default_rng(7)
    x = rng.normal(0, 1, 2000)
    f1 = emg_time_features(make_sig(x))
    f2 = emg_time_features(make_sig(2.0 * x))
    for name in ("mav", "rms", "waveform_length", "integrated_emg"):
        assert f2[name] == pytest.approx(2.0 * f1[name], rel=1e-12)
    assert f2["variance"] == pytest.approx(4.0 * f1["variance"], rel=1e-12)
    assert f2["zero_crossings"] == f1["zero_crossings"]
    assert f2["slope_sign_changes"] == f1["slope_sign_changes"]


def test_time_square_wave_zero_crossings():
    feats = emg_time_features(make_sig(square_wave_20()))
    assert feats["zero_crossings"] == 20.0
    assert feats["rms"] == pytest.approx(1.0)
    assert feats["mav"] == pytest.approx(1.0)


def test_time_hysteresis_suppresses_tiny_flip():
    x = square_wave_20()
    # soften one transition into a sub-threshold crossing: the only sign
    # flip there is now 0.001 -> -0.001, below 0.01 * rms
    x[24] = 0.001
    x[25] = -0.001
    feats = emg_time_features(make_sig(x))
    assert feats["zero_crossings"] == 19.0


def test_time_cosine_slope_sign_changes():
    fs = 200.0
    k = np.arange(200)
    x = np.cos(np.pi * k / 10.0)  # 10 Hz, extrema land on samples 0, 10, ..., 190
    feats = emg_time_features(make_sig(x, fs))
    assert feats["slope_sign_changes"] == 19.0  # sample 0 is a boundary


def test_time_counts_are_integral():
    rng = np.random.default_rng(3)
    feats = emg_time_features(make_sig(rng.normal(0, 1, 1500)))
    assert feats["zero_crossings"].is_integer()
    assert feats["slope_sign_changes"].is_integer()
    assert feats["zero_crossings"] >= 0
    assert feats["slope_sign_changes"] >= 0


def test_time_too_short():
    with pytest.raises(DataError):
        emg_time_features(make_sig(np.zeros(400)))  # 0.4 s at 1 kHz


# ------------------------------------------------------- frequency features ----

def test_freq_pure_tone():
    feats = emg_freq_features(tone(100.0))
    assert feats["median_freq_hz"] == pytest.approx(100.0, abs=2.0)
    assert feats["mean_freq_hz"] == pytest.approx(100.0, abs=2.0)
    assert feats["peak_freq_hz"] == pytest.approx(100.0, abs=1.0)
    assert feats["band_power_20_450"] == pytest.approx(0.5, rel=0.1)


def test_freq_flat_band_noise_median():
    rng = np.random.default_rng(11)
    fs, dur = 1000.0, 8.0
    x = rng.normal(0, 1, int(fs * dur))
    spec = np.fft.rfft(x)
    freqs = np.fft.rfftfreq(x.size, 1.0 / fs)
    spec[(freqs < 20.0) | (freqs > 200.0)] = 0.0
    shaped = np.fft.irfft(spec, x.size)
    feats = emg_freq_features(make_sig(shaped, fs))
    assert feats["median_freq_hz"] == pytest.approx(110.0, abs=10.0)


def test_freq_two_tone_centroid():
    t = np.arange(4000) / 1000.0
    x = np.sin(2 * np.pi * 60.0 * t) + np.sin(2 * np.pi * 180.0 * t)
    feats = emg_freq_features(make_sig(x))
    assert feats["mean_freq_hz"] == pytest.approx(120.0, abs=3.0)


def test_freq_scale_invariance():
    rng = np.random.default_rng(5)
    x = rng.normal(0, 1, 6000)
    f1 = emg_freq_features(make_sig(x))
    f2 = emg_freq_features(make_sig(5.0 * x))
    assert f2["median_freq_hz"] == f1["median_freq_hz"]
    assert f2["mean_freq_hz"] == pytest.approx(f1["mean_freq_hz"], rel=1e-12)
    assert f2["peak_freq_hz"] == f1["peak_freq_hz"]


@pytest.mark.parametrize("seed", [0, 4])
def test_freq_band_power_parseval_bound(seed):
    cfg = SynthConfig(seed=seed, duration_s=30.0)
    sig, _ = gen_emg(cfg)
    feats = emg_freq_features(sig)
    total_power = float(np.mean(np.asarray(sig.samples) ** 2))
    assert feats["band_power_20_450"] <= total_power + 1e-9


def test_freq_median_monotone_in_center():
    medians = []
    for mf in (60.0, 80.0, 100.0, 120.0):
        cfg = SynthConfig(
            seed=2, duration_s=30.0, emg=EMGParams(median_freq_hz=mf)
        )
        sig, _ = gen_emg(cfg)
        medians.append(emg_freq_features(sig)["median_freq_hz"])
    assert all(b > a for a, b in zip(medians, medians[1:]))


def test_freq_matches_generator_truth():
    cfg = SynthConfig(seed=9, duration_s=40.0, emg=EMGParams(median_freq_hz=80.0))
    sig, truth = gen_emg(cfg)
    feats = emg_freq_features(clean_emg(sig))
    assert feats["median_freq_hz"] == pytest.approx(truth.emg_median_freq_hz, abs=8.0)


def test_freq_zero_signal_defined_zero():
    feats = emg_freq_features(make_sig(np.zeros(2000)))
    for name in FREQ_FEATURE_NAMES:
        assert feats[name] == 0.0


def test_freq_too_short():
    with pytest.raises(DataError):
        emg_freq_features(make_sig(np.zeros(900)))


def test_combined_feature_layout():
    rng = np.random.default_rng(1)
    feats = emg_features(make_sig(rng.normal(0, 1, 2000)))
    assert list(feats.keys()) == list(TIME_FEATURE_NAMES) + list(FREQ_FEATURE_NAMES)
