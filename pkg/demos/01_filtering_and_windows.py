"""Filter design and window slicing.

Designs the standard cleaning filters, measures their response on test
tones, and shows how a signal is cut into classification windows.
"""
import numpy as np

from fatiguelab.signals import (
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


def tone_amplitude(x, fs, freq, skip_s=2.0):
    skip = int(skip_s * fs)
    seg = x[skip : x.size - skip]
    k = int(round(freq * seg.size / fs))
    return 2.0 * abs(np.fft.rfft(seg)[k]) / seg.size


fs = 250.0
t = np.arange(int(8.0 * fs)) / fs

print("== mains notch (50 Hz, Q=30) ==")
notch = design_notch(50.0, 30.0, fs)
print(f"realized as {notch.sos.shape[0]} biquad section(s)")
for freq in (5.0, 35.0, 50.0):
    x = np.sin(2 * np.pi * freq * t)
    out = apply_filter(SampledSignal(Channel.ECG, fs, x), notch).samples
    gain_db = 20 * np.log10(tone_amplitude(out, fs, freq) / tone_amplitude(x, fs, freq))
    print(f"  {freq:5.1f} Hz tone -> {gain_db:+7.1f} dB")

print("\n== drift removal (0.5 Hz high-pass, order 4, zero phase) ==")
hp = design_butterworth(FilterSpec(FilterKind.HIGHPASS, 0.5), fs)
drifting = 3.0 + 0.1 * np.sin(2 * np.pi * 2.0 * t)
cleaned = apply_filter(SampledSignal(Channel.ECG, fs, drifting), hp).samples
print(f"  input mean {np.mean(drifting):.3f} -> output mean {np.mean(cleaned):+.2e}")

print("\n== window slicing ==")
sig = SampledSignal(Channel.ECG, fs, np.arange(int(56.0 * fs), dtype=float))
for plan in (WindowPlan(5.0), WindowPlan(10.0), WindowPlan(20.0), WindowPlan.full_block()):
    slices = slice_windows(sig, plan)
    sizes = {s.n_samples for s in slices}
    print(f"  plan {plan.label():>4}: {len(slices):2d} slice(s) of {sorted(sizes)} samples")
print("(a trailing partial window is dropped, full-block keeps everything)")
