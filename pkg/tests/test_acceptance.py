"""Release acceptance gate: one test per criterion, tolerances pinned.

Run with -v to get a single pass/fail line per criterion. Criteria 7 and
10 also enforce their wall-clock budgets. Published reference numbers are
asserted as embedded constants only (criterion 11); nothing here compares
a trained model against them.
"""
import math
import time

import numpy as np
import pytest

import fatiguelab.dataset as ds
import fatiguelab.eval as ev
from fatiguelab.ecg import (
    RRSeries,
    detect_r_peaks,
    hrv_freq_features,
    hrv_time_features,
)
from fatiguelab.eda import clean_eda, decompose, detect_scr_peaks
from fatiguelab.eeg import (
    BANDS,
    BandEnvelopeSet,
    band_decompose,
    band_edges,
    eeg_feature_names,
    eeg_features,
)
from fatiguelab.errors import DataError
from fatiguelab.models import (
    LSTMConfig,
    RFConfig,
    classify_block,
    fit_pca,
    forest_votes,
    predict_blocks,
    project,
    train_logreg,
    train_lstm,
    train_rf,
    train_svm,
)
from fatiguelab.models.lstm import init_params, lstm_loss_and_grads, pad_sequences
from fatiguelab.models.model import prepare_feature_matrix
from fatiguelab.signals import (
    EEG_CHANNELS,
    Channel,
    FilterKind,
    FilterSpec,
    SampledSignal,
    WindowPlan,
    apply_filter,
    design_butterworth,
    design_notch,
    slice_windows,
)
from fatiguelab.synth import (
    ECGParams,
    EffectConfig,
    SCR_TAU_DECAY,
    SCR_TAU_RISE,
    SynthConfig,
    gen_ecg,
    gen_study,
    scr_kernel_peak_offset_s,
)

NAMES_2D = ("f0", "f1")


# ----------------------------------------------------------------- helpers ----


def tone_amplitude(x: np.ndarray, fs: float, freq: float, skip_s: float = 2.0) -> float:
    """Single-bin FFT amplitude, trimming filter transients at both ends."""
    skip = int(skip_s * fs)
    seg = x[skip : x.size - skip]
    n = seg.size
    k = int(round(freq * n / fs))
    return 2.0 * abs(np.fft.rfft(seg)[k]) / n


def match_peaks(detected_s, truth_s, tol_s=0.020):
    used = np.zeros(len(truth_s), dtype=bool)
    tp = 0
    for t in detected_s:
        d = np.abs(np.asarray(truth_s) - t)
        j = int(np.argmin(d))
        if d[j] <= tol_s and not used[j]:
            used[j] = True
            tp += 1
    return tp, len(detected_s) - tp


def rr_from_intervals(intervals_ms):
    onsets = np.concatenate([[0.0], np.cumsum(intervals_ms[:-1])]) / 1000.0
    return RRSeries(
        onset_times_s=onsets, intervals_ms=np.asarray(intervals_ms, dtype=float)
    )


def bump_train(onsets, amp, fs=32.0, dur_s=60.0, level=2.0):
    t = np.arange(int(dur_s * fs)) / fs
    x = np.full(t.size, level)
    peak_dt = scr_kernel_peak_offset_s()
    peak_val = math.exp(-peak_dt / SCR_TAU_DECAY) - math.exp(-peak_dt / SCR_TAU_RISE)
    for onset in onsets:
        tt = t - onset
        mask = tt >= 0
        x[mask] += (amp / peak_val) * (
            np.exp(-tt[mask] / SCR_TAU_DECAY) - np.exp(-tt[mask] / SCR_TAU_RISE)
        )
    return SampledSignal(Channel.EDA, fs, x)


def blobs(n_per=100, scale=0.5, seed=0):
    rng = np.random.default_rng(seed)
    neg = rng.normal([-2.0, -2.0], scale, size=(n_per, 2))
    pos = rng.normal([2.0, 2.0], scale, size=(n_per, 2))
    return np.vstack([neg, pos]), np.array([0] * n_per + [1] * n_per)


def xor_data(n_per=50, scale=0.4, seed=1):
    rng = np.random.default_rng(seed)
    parts, labels = [], []
    for cx, cy, lab in [(-2, -2, 0), (2, 2, 0), (-2, 2, 1), (2, -2, 1)]:
        parts.append(rng.normal([cx, cy], scale, size=(n_per, 2)))
        labels += [lab] * n_per
    return np.vstack(parts), np.array(labels)


def linear_accuracy(model, X, y):
    Xs = (X - model.standardization.mean) / model.standardization.std
    z = Xs @ model.params["w"] + model.params["b"]
    return np.mean((z >= 0.0) == (y == 1))


def rf_accuracy(model, X, y, names=NAMES_2D):
    Xs = prepare_feature_matrix(model, X, names)
    votes = forest_votes(model.params["trees"], Xs)
    return np.mean((votes >= 0.5) == (y == 1))


def channel_mean_task(n, seed, margin=1.0, n_channels=2):
    rng = np.random.default_rng(seed)
    seqs, labels = [], []
    for _ in range(n):
        lab = int(rng.integers(0, 2))
        t = int(rng.integers(15, 26))
        s = rng.normal(scale=0.5, size=(t, n_channels))
        s[:, 0] += margin if lab else -margin
        seqs.append(s)
        labels.append(lab)
    return seqs, np.array(labels)


def cell_block_predictions(blocks, target, modality, plan, model_kind, config):
    """Fit on train+validation subjects, return test-block (predicted, actual)."""
    labeled = ds.label_blocks(blocks, ds.policy_for_target(target))
    subject_labels = {}
    for lb in labeled:
        subject_labels.setdefault(lb.block.subject_id, []).append(lb.label)
    split = ds.split_subjects(subject_labels, seed=0)
    contexts = {lb.block.block_id: ds.prepare_block(lb, modality) for lb in labeled}
    mode = ds.MODE_SEQUENCE if model_kind == "lstm" else ds.MODE_FEATURE
    es = ds.make_examples(labeled, plan, mode, modality, contexts=contexts)
    fit_set = es.subset(sorted(split.train | split.validation))
    test_set = es.subset(sorted(split.test))
    if model_kind == "lstm":
        model = train_lstm(fit_set.sequences(), fit_set.labels(), fit_set.names, config)
    else:
        model = train_rf(fit_set.feature_matrix(), fit_set.labels(), fit_set.names, config)
    bp = predict_blocks(model, test_set)
    return np.asarray(bp.predicted), np.asarray(bp.actual)


def cell_block_accuracy(blocks, target, modality, plan, model_kind, config):
    pred, act = cell_block_predictions(blocks, target, modality, plan, model_kind, config)
    return float(np.mean(pred == act))


# ---------------------------------------------------------------- criteria ----


def test_01_dsp_notch_and_highpass():
    """Notch >= 40 dB at 50 Hz, <= 1 dB loss at 5 Hz; HP kills DC < 1e-3."""
    for fs in (128.0, 250.0, 256.0):
        t = np.arange(int(8.0 * fs)) / fs
        notch = design_notch(50.0, 30.0, fs)
        x50 = np.sin(2 * np.pi * 50.0 * t)
        out50 = apply_filter(SampledSignal(Channel.ECG, fs, x50), notch).samples
        att_db = 20.0 * np.log10(
            tone_amplitude(out50, fs, 50.0) / tone_amplitude(x50, fs, 50.0)
        )
        assert att_db <= -40.0, f"fs={fs}: notch attenuation {att_db:.1f} dB"
        x5 = np.sin(2 * np.pi * 5.0 * t)
        out5 = apply_filter(SampledSignal(Channel.ECG, fs, x5), notch).samples
        loss_db = -20.0 * np.log10(
            tone_amplitude(out5, fs, 5.0) / tone_amplitude(x5, fs, 5.0)
        )
        assert loss_db <= 1.0, f"fs={fs}: passband loss {loss_db:.2f} dB"

        hp = design_butterworth(FilterSpec(FilterKind.HIGHPASS, 0.5), fs)
        td = np.arange(int(20.0 * fs)) / fs
        dc = 3.0 + 0.1 * np.sin(2 * np.pi * 2.0 * td)
        resid = apply_filter(SampledSignal(Channel.ECG, fs, dc), hp).samples
        assert abs(float(np.mean(resid))) < 1e-3


def test_02_qrs_detection_sweep_and_noise():
    """Clean sweep 50-180 bpm: sens >= 99%, FP <= 1%, timing <= 20 ms; 10 dB SNR: sens >= 95%."""
    for bpm in (50, 76, 102, 128, 154, 180):
        cfg = SynthConfig(
            seed=bpm, duration_s=60.0, ecg=ECGParams(hr_bpm=float(bpm), rr_sd_ms=40.0)
        )
        sig, truth = gen_ecg(cfg)
        peaks = detect_r_peaks(sig)
        tp, fp = match_peaks(peaks.times_s, truth.r_peak_times_s, tol_s=0.020)
        n_truth = truth.r_peak_times_s.size
        assert tp / n_truth >= 0.99, f"{bpm} bpm: sensitivity {tp / n_truth:.3f}"
        assert fp <= 0.01 * n_truth, f"{bpm} bpm: {fp} false detections"

    cfg = SynthConfig(seed=5, duration_s=60.0, ecg=ECGParams(hr_bpm=75.0, rr_sd_ms=40.0))
    sig, truth = gen_ecg(cfg)
    rng = np.random.default_rng(17)
    sigma = np.sqrt(np.mean(sig.samples**2) / 10.0)  # 10 dB SNR
    noisy = sig.with_samples(sig.samples + rng.normal(0.0, sigma, sig.n_samples))
    tp, _ = match_peaks(detect_r_peaks(noisy).times_s, truth.r_peak_times_s)
    assert tp / truth.r_peak_times_s.size >= 0.95


def test_03_hrv_closed_forms():
    """Constant RR -> SDNN=RMSSD=0; 790/810 -> RMSSD=20+-1e-9; 0.25 Hz -> HF >= 0.8."""
    const = hrv_time_features(rr_from_intervals(np.full(60, 800.0)))
    assert const["sdnn_ms"] == 0.0
    assert const["rmssd_ms"] == 0.0

    alt = hrv_time_features(rr_from_intervals(np.tile([790.0, 810.0], 40)))
    assert abs(alt["rmssd_ms"] - 20.0) <= 1e-9

    intervals, t = [], 0.0
    while t < 120.0:
        rr = 800.0 + 50.0 * np.sin(2 * np.pi * 0.25 * t)
        intervals.append(rr)
        t += rr / 1000.0
    feats = hrv_freq_features(rr_from_intervals(np.asarray(intervals)))
    assert feats["hf_power"] / feats["total_power"] >= 0.8


def test_04_eda_reconstruction_and_counts():
    """tonic+phasic == input to 1e-9 RMS; spaced suprathreshold bumps counted exactly."""
    rng = np.random.default_rng(3)
    x = 2.0 + np.cumsum(rng.normal(0, 0.01, size=32 * 30))
    decomp = decompose(SampledSignal(Channel.EDA, 32.0, x))
    err = decomp.tonic.samples + decomp.phasic.samples - x
    assert np.sqrt(np.mean(err**2)) <= 1e-9

    # amplitude 0.5 uS is 50x the 0.01 uS detection floor; spacing >= 8 s
    for onsets in ([5.0, 15.0, 25.0, 35.0, 45.0], [8.0, 16.0, 24.0], [10.0, 40.0]):
        sig = bump_train(onsets, amp=0.5)
        peaks = detect_scr_peaks(decompose(clean_eda(sig)).phasic)
        assert peaks.count == len(onsets), f"onsets {onsets}: count {peaks.count}"


def test_05_eeg_band_localization_and_width():
    """Band-center tones dominate >= 10x in their own envelope; 100 features."""
    fs = 256.0
    t = np.arange(int(8.0 * fs)) / fs
    for band in BANDS:
        lo, hi = band_edges(band, fs)
        sig = SampledSignal(
            Channel.EEG_AF7, fs, np.sin(2 * np.pi * 0.5 * (lo + hi) * t)
        )
        env = band_decompose(sig)
        target = np.mean(env[band.name])
        for other in BANDS:
            if other.name != band.name:
                assert target >= 10.0 * np.mean(env[other.name]), (
                    f"{band.name} tone leaks into {other.name}"
                )

    assert len(eeg_feature_names()) == 100
    signals = {
        ch: SampledSignal(ch, fs, np.sin(2 * np.pi * 10.0 * t)) for ch in EEG_CHANNELS
    }
    feats = eeg_features(BandEnvelopeSet.from_signals(signals))
    assert len(feats) == 100


def test_06_slicing_and_majority_vote():
    """Slice counts match the closed formula; vote matches enumeration; tie -> 1."""
    rng = np.random.default_rng(11)
    rates = (32.0, 128.0, 200.0, 250.0, 256.0, 320.0)
    checked = 0
    for _ in range(200):
        fs = float(rng.choice(rates))
        dur = float(rng.uniform(2.0, 60.0))
        window = float(rng.uniform(0.5, 15.0))
        stride = float(window * rng.uniform(0.3, 1.0))
        sig = SampledSignal(Channel.ECG, fs, np.zeros(int(round(dur * fs))))
        plan = WindowPlan(window, stride)
        win_n = max(1, int(round(window * fs)))
        stride_n = max(1, int(round(plan.stride_s * fs)))
        if sig.n_samples < win_n:
            with pytest.raises(DataError):
                slice_windows(sig, plan)
            continue
        expected = (sig.n_samples - win_n) // stride_n + 1
        assert len(slice_windows(sig, plan)) == expected
        checked += 1
    assert checked >= 150  # the property was exercised, not skipped

    for n in range(1, 10):
        for bits in range(2**n):
            labels = [(bits >> i) & 1 for i in range(n)]
            pos = sum(labels)
            expected = 1 if pos >= n - pos else 0
            assert classify_block(labels) == expected
    assert classify_block([0, 1]) == 1
    assert classify_block([0, 0, 1, 1]) == 1


def test_07_model_baselines():
    """Linear models pass blobs / fail XOR; RF passes XOR; LSTM grads + learning."""
    t0 = time.monotonic()
    X, y = blobs()
    assert linear_accuracy(train_logreg(X, y, NAMES_2D), X, y) >= 0.95
    assert linear_accuracy(train_svm(X, y, NAMES_2D), X, y) >= 0.95
    Xx, yx = xor_data()
    assert linear_accuracy(train_logreg(Xx, yx, NAMES_2D), Xx, yx) <= 0.60
    assert linear_accuracy(train_svm(Xx, yx, NAMES_2D), Xx, yx) <= 0.60

    rf = train_rf(Xx, yx, NAMES_2D, RFConfig(seed=0))
    Xt, yt = xor_data(n_per=40, seed=2)
    assert rf_accuracy(rf, Xt, yt) >= 0.90

    rng = np.random.default_rng(7)
    hidden, n_channels, batch, t_len = 8, 3, 4, 20
    params = init_params(n_channels, hidden, rng)
    seqs = [rng.normal(size=(t_len - k, n_channels)) for k in range(batch)]
    Xs, mask = pad_sequences(seqs)
    yv = np.array([0.0, 1.0, 1.0, 0.0])
    _, grads = lstm_loss_and_grads(params, Xs, mask, yv)
    eps = 1e-6
    for key in ("W", "U", "b", "w_out", "b_out"):
        analytic = grads[key]
        numeric = np.zeros_like(analytic)
        flat, num_flat = params[key].ravel(), numeric.ravel()
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            up, _ = lstm_loss_and_grads(params, Xs, mask, yv)
            flat[j] = orig - eps
            down, _ = lstm_loss_and_grads(params, Xs, mask, yv)
            flat[j] = orig
            num_flat[j] = (up - down) / (2.0 * eps)
        denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
        assert np.linalg.norm(analytic - numeric) / denom <= 1e-4, key

    train, y_train = channel_mean_task(60, seed=10)
    test, y_test = channel_mean_task(40, seed=11)
    model = train_lstm(
        train, y_train, ("c0", "c1"),
        LSTMConfig(hidden_size=16, epochs=30, learning_rate=0.01, seed=0),
    )
    from fatiguelab.models import lstm_probabilities

    probs = lstm_probabilities(model, test)
    assert np.mean((probs >= 0.5) == (y_test == 1)) >= 0.95
    assert time.monotonic() - t0 < 300.0


def test_08_pca_properties():
    """Orthonormal rows; exact rank-k reconstruction; width-189 projection."""
    rng = np.random.default_rng(2)
    X = rng.normal(size=(80, 12))
    pca = fit_pca(X, 6)
    gram = pca.components @ pca.components.T
    assert np.max(np.abs(gram - np.eye(6))) <= 1e-8

    basis = rng.normal(size=(3, 15))
    low_rank = rng.normal(size=(50, 3)) @ basis
    pca3 = fit_pca(low_rank, 3)
    coords = project(pca3, low_rank)
    recon = coords @ pca3.components + pca3.mean
    assert np.max(np.abs(recon - low_rank)) <= 1e-6

    wide = rng.normal(size=(400, 210))
    pca189 = fit_pca(wide, 189)
    assert not pca189.clamped
    assert project(pca189, wide).shape == (400, 189)


def test_09_split_sizes_and_leakage():
    """32 subjects -> 22/5/5; no subject shared across splits or CV folds."""
    subject_labels = {f"S{i:02d}": [0, 1] * 5 for i in range(1, 33)}
    split = ds.split_subjects(subject_labels, seed=0)
    assert (len(split.train), len(split.validation), len(split.test)) == (22, 5, 5)
    assert split.train | split.validation | split.test == set(subject_labels)
    assert not split.train & split.validation
    assert not split.train & split.test
    assert not split.validation & split.test

    folds = ds.cv_folds(sorted(split.train), k=5, seed=0)
    assert len(folds) == 5
    seen = [s for fold in folds for s in fold]
    assert len(seen) == len(set(seen)) == 22  # disjoint and exhaustive
    for fold in folds:
        for s in fold:
            assert s in split.train
            assert s not in split.validation and s not in split.test


def test_10_end_to_end_synthetic_study(tmp_path):
    """32 subjects, 3 seeds: RF/PF@10s >= 0.90, LSTM/CF/full >= 0.85, null in 0.5+-0.1.

    The fatigue labels are structurally imbalanced (3 negative + 2 positive
    readings per session), so a signal-free study drives raw accuracy to
    the majority rate of 0.6 exactly on the band edge. The null check
    therefore scores class-balanced accuracy, whose chance level is 0.5
    for any base rate.
    """
    t0 = time.monotonic()
    seeds = (7, 101, 202)
    rf_accs, lstm_accs, null_accs = [], [], []
    for seed in seeds:
        manifest, _ = gen_study(tmp_path / f"eff{seed}", n_subjects=32, seed=seed)
        blocks = ds.ingest(manifest)
        rf_accs.append(
            cell_block_accuracy(
                blocks, "PF", ds.MODALITY_PHYSIO, WindowPlan(10.0), "rf", RFConfig(seed=0)
            )
        )
        lstm_accs.append(
            cell_block_accuracy(
                blocks, "CF", ds.MODALITY_ALL, WindowPlan.full_block(), "lstm",
                LSTMConfig(hidden_size=24, epochs=15, learning_rate=0.02, seed=0),
            )
        )
    for seed in seeds:
        manifest, _ = gen_study(
            tmp_path / f"null{seed}",
            n_subjects=32,
            effect=EffectConfig(scale=0.0),
            seed=seed,
        )
        blocks = ds.ingest(manifest)
        pred, act = cell_block_predictions(
            blocks, "CF", ds.MODALITY_PHYSIO, WindowPlan(10.0), "rf", RFConfig(seed=0)
        )
        sens = float(np.mean(pred[act == 1] == 1))
        spec = float(np.mean(pred[act == 0] == 0))
        null_accs.append(0.5 * (sens + spec))
    assert np.mean(rf_accs) >= 0.90, f"RF/PF per-seed {rf_accs}"
    assert np.mean(lstm_accs) >= 0.85, f"LSTM/CF per-seed {lstm_accs}"
    assert 0.4 <= np.mean(null_accs) <= 0.6, f"null per-seed {null_accs}"
    assert time.monotonic() - t0 < 900.0


def test_11_reference_constants_not_reproduced(tmp_path):
    """Published numbers ship as constants; deltas are informational only."""
    ref = ev.REFERENCE_RESULTS
    assert ref[("PF", "physio")]["rf"]["accuracy_pct"]["10s"] == 80.5
    assert ref[("PF", "physio")]["rf"]["avg_recall"] == 0.88
    assert ref[("CF", "all")]["lstm"]["accuracy_pct"]["full"] == 84.1
    assert ref[("CF", "all")]["lstm"]["avg_recall"] == 0.90
    for table in ref.values():
        for entry in table.values():
            assert set(entry["accuracy_pct"]) == {"5s", "10s", "20s", "full"}

    # the default grid covers exactly the four published tables
    assert [(t.target, t.modality_set) for t in ev.DEFAULT_TABLES] == [
        ("CF", "eeg"),
        ("CF", "physio"),
        ("PF", "physio"),
        ("CF", "all"),
    ]

    manifest, _ = gen_study(tmp_path / "tiny", n_subjects=4, seed=0)
    blocks = ds.ingest(manifest)
    cfg = ev.ExperimentConfig(
        tables=(ev.TableSpec("PF", ds.MODALITY_PHYSIO),),
        windows=(WindowPlan(10.0),),
        models=("rf",),
        n_folds=2,
        model_configs={"rf": RFConfig(n_trees=15)},
    )
    report = ev.run_experiment(blocks, cfg)
    cell = report.cells[0]
    assert cell.reference_accuracy_pct == 80.5
    assert cell.reference_avg_recall == 0.88
    assert "never pass/fail" in report.metadata["reference_note"]
