#!/usr/bin/env python3
"""Hour-long stability run: what an interferometer's fringe actually sees.

At the pi/2 operating point the output powers respond linearly to small
path changes, so the recorded powers can be inverted back into a path
series. The catch: a wandering laser frequency produces exactly the same
signature, so part of the apparent drift is the laser, not the device.
The run below has a quiet device (no thermal steps) probed by a laser
with a 1 MHz RMS frequency walk.
"""

from pathlib import Path

import numpy as np

from dlisim import (
    InterferometerSpec,
    LaserModel,
    PathResponseModel,
    TdpsCurve,
    ThermalModel,
    extract_path_from_power,
    fit_polynomial,
    pearson_correlation,
    rmse_to_frequency,
    simulate_drift_trace,
    write_trace_csv,
)

OUT = Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)

C = 299792458.0
spec = InterferometerSpec.from_bins(1, 400e-12)  # 2.5 GHz FSR, 12 cm path
laser = LaserModel(C / 1550e-9, rms_drift_hz=1e6, correlation_time_s=120.0)
# room regulation wanders by a few hundredths of a degree over the hour
thermal = ThermalModel(1.3, ((600.0, 22.05), (1800.0, 21.96), (2700.0, 22.02)),
                       22.0)
path = PathResponseModel(1.4, 0.10, 0.0)
tdps = TdpsCurve("linear", 26.0, 22.0)

trace = simulate_drift_trace(thermal, path, tdps, laser, spec,
                             p0_w=200e-6, duration_s=3600.0, dt_s=1.0, seed=17)
write_trace_csv(trace, OUT / "stability_run.csv")
print(f"wrote {OUT / 'stability_run.csv'} ({len(trace)} samples)")

recovered = extract_path_from_power(trace, alpha=1.0, wavelength_m=1550e-9)
print(f"apparent drift span: {recovered.min():+.3f} .. {recovered.max():+.3f} nm")
print(f"apparent drift RMS:  {np.sqrt(np.mean(recovered ** 2)):.3f} nm "
      f"(1 MHz of laser walk alone is worth "
      f"{spec.nominal_path_m * 1e6 / (C / 1550e-9) * 1e9:.2f} nm)")

# a straight-line fit mimics the slow-trend analysis of a lab run
line = fit_polynomial(trace.time_s / 3600.0, recovered, 1)
slope = line.params[1]
rmse = line.rmse
print(f"\nlinear trend: {slope:+.3f} nm/hr, RMSE about the line {rmse:.3f} nm")
print(f"that RMSE corresponds to a laser frequency variation of "
      f"{rmse_to_frequency(rmse, spec.nominal_path_m, laser.center_frequency_hz) / 1e6:.3f} MHz")

corr = pearson_correlation(trace.temperature_c, recovered)
print(f"correlation with the temperature record: {corr:+.3f} "
      f"(laser walk keeps it well below 1)")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(8, 5))
    axes[0].plot(trace.time_s / 60.0, recovered, lw=0.7)
    axes[0].plot(trace.time_s / 60.0,
                 line.params[0] + slope * trace.time_s / 3600.0, "r")
    axes[0].set_ylabel("apparent path change (nm)")
    axes[1].plot(trace.time_s / 60.0, trace.p_plus_w * 1e6, lw=0.7)
    axes[1].set_ylabel("P+ (uW)")
    axes[1].set_xlabel("time (min)")
    fig.tight_layout()
    fig.savefig(OUT / "stability_run.png", dpi=150)
    print(f"wrote {OUT / 'stability_run.png'}")
except ImportError:
    print("matplotlib not installed; skipped the figure")
