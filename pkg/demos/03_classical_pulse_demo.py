#!/usr/bin/env python3
"""Classical pulse-train run through a two-stage cascade, as on a scope.

Four 100 ps pulses in 400 ps bins (all with the same phase, i.e. the f0
pattern) pass through 800 ps and 400 ps delay stages. The bright port
shows the 7-peak pattern with a maximal centre peak; the dark port is
empty there. An 8 GHz detector broadens the peaks but barely moves the
area-based visibility.
"""

from pathlib import Path

import numpy as np

from dlisim import (
    DetectorModel,
    PulseTrainSpec,
    delay_interfere_waveform,
    detect,
    synthesize_frame,
    visibility_from_areas,
    write_power_csv,
)

OUT = Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)

TAU = 400e-12
frame = synthesize_frame(PulseTrainSpec(100e-12, TAU, (1, 1, 1, 1)), 5e-12)
print(f"synthesized frame: {frame.samples.size} samples, "
      f"energy {frame.energy:.6f}")

plus1, _ = delay_interfere_waveform(frame, 800e-12, 0.0)
bright_wf, dark_wf = delay_interfere_waveform(plus1, 400e-12, 0.0)
window = (3 * TAU, 4 * TAU)  # the fully-interfering centre bin

for bw_ghz in (1e6, 12.5, 8.0):  # 1e6 GHz ~ unfiltered
    det = DetectorModel(bandwidth_hz=bw_ghz * 1e9)
    bright = detect(bright_wf, det)
    dark = detect(dark_wf, det)
    v = visibility_from_areas(bright, dark, window)
    label = "unfiltered" if bw_ghz > 1e3 else f"{bw_ghz:.3g} GHz"
    print(f"  detection {label:>10}: V = {v:.6f}")

det8 = DetectorModel(bandwidth_hz=8e9)
bright = detect(bright_wf, det8)
dark = detect(dark_wf, det8)
write_power_csv(bright, OUT / "pulse_bright_8ghz.csv")
write_power_csv(dark, OUT / "pulse_dark_8ghz.csv")
print(f"wrote {OUT / 'pulse_bright_8ghz.csv'}")

print("\nvisibility across the C-band (receiver re-tuned per channel):")
for lam_nm in range(1525, 1570, 5):
    frame_l = synthesize_frame(PulseTrainSpec(100e-12, TAU, (1, 1, 1, 1)),
                               5e-12, wavelength_m=lam_nm * 1e-9)
    p1, _ = delay_interfere_waveform(frame_l, 800e-12, 0.0)
    b_wf, d_wf = delay_interfere_waveform(p1, 400e-12, 0.0)
    v = visibility_from_areas(detect(b_wf, det8), detect(d_wf, det8), window)
    print(f"  {lam_nm} nm: V = {v:.6f}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(8, 5))
    axes[0].plot(bright.times * 1e12, bright.values, "C0")
    axes[0].set_ylabel("bright port power")
    axes[1].plot(dark.times * 1e12, dark.values, "C3")
    axes[1].set_ylabel("dark port power")
    axes[1].set_xlabel("time (ps)")
    for ax in axes:
        ax.axvspan(window[0] * 1e12, window[1] * 1e12, alpha=0.15, color="k")
    fig.tight_layout()
    fig.savefig(OUT / "pulse_ports.png", dpi=150)
    print(f"\nwrote {OUT / 'pulse_ports.png'}")
except ImportError:
    print("\nmatplotlib not installed; skipped the figure")
