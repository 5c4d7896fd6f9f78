"""Muscle and brain signal features.

Shows the EMG median-frequency pipeline against a shaped-noise oracle,
then the EEG band decomposition and the 100-wide feature vector.
"""
import numpy as np

from fatiguelab.eeg import BandEnvelopeSet, band_decompose, eeg_features
from fatiguelab.emg import clean_emg, emg_features
from fatiguelab.signals import EEG_CHANNELS
from fatiguelab.synth import EEGParams, EMGParams, SynthConfig, gen_eeg, gen_emg

print("== EMG ==")
for target_mf in (85.0, 62.0):
    cfg = SynthConfig(
        seed=21, duration_s=30.0, emg=EMGParams(median_freq_hz=target_mf, rms_level=1.5)
    )
    sig, truth = gen_emg(cfg)
    feats = emg_features(clean_emg(sig))
    print(f"  shaped to {target_mf:.0f} Hz -> measured median "
          f"{feats['median_freq_hz']:.1f} Hz, rms {feats['rms']:.2f} "
          f"(truth {truth.emg_median_freq_hz:.1f} Hz)")
print("  (median frequency dropping with fatigue is the key EMG marker)")

print("\n== EEG ==")
# a fatigued profile: elevated theta weight
cfg = SynthConfig(
    seed=22,
    duration_s=30.0,
    eeg=EEGParams(band_weights=(0.30, 0.35, 0.20, 0.10, 0.05)),
)
signals = {}
for ch in EEG_CHANNELS:
    sig, truth = gen_eeg(cfg, channel=ch)
    signals[ch] = sig

env = band_decompose(signals[EEG_CHANNELS[0]])
total = sum(float(np.mean(e**2)) for e in env.values())
print(f"  requested weights {truth.eeg_band_weights}")
print("  measured power fractions on one electrode:")
for band, series in env.items():
    print(f"    {band:>6}: {np.mean(series**2) / total:.2f}")

feats = eeg_features(BandEnvelopeSet.from_signals(signals))
print(f"\n  full feature vector: {len(feats)} values "
      f"(4 electrodes x 5 bands x 5 statistics)")
for name in [k for k in feats if k.startswith("TP9.theta")]:
    print(f"    {name} = {feats[name]:.3f}")
