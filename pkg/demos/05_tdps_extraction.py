#!/usr/bin/env python3
"""Temperature-dependent path shift extracted from staged heating runs.

Heating the device in steps and waiting out the transients gives one
(settled temperature, settled path shift) point per step. The transients
are double exponentials (fast housing coupling plus slow glass coupling),
so each interval is fit to recover its asymptote, the increments are
accumulated, and the resulting curve is fit with a line or, when the
residuals demand it, a parabola whose vertex marks the athermal point.
"""

import numpy as np

from dlisim import (
    InterferometerSpec,
    LaserModel,
    PathResponseModel,
    TdpsCurve,
    ThermalModel,
    simulate_drift_trace,
    tdps_pipeline,
)

C = 299792458.0
SPEC = InterferometerSpec.from_bins(1, 400e-12)
# A well-stabilized probe laser matters here: its frequency walk shows up
# as a slow apparent path trend, and with only half a decay constant of
# the slow component in a 6 h window, too much of it can leave the slow
# rate unidentifiable (the fit then errors out rather than guessing).
PROBE = LaserModel(C / 1550e-9, 0.2e6, 60.0)


def heating_intervals(curve, targets, laser, start_c=22.0):
    traces = []
    prev = start_c
    for i, target in enumerate(targets):
        thermal = ThermalModel(1.3, ((0.0, target),), prev)
        response = PathResponseModel(1.4, 0.10, 0.0)
        traces.append(simulate_drift_trace(
            thermal, response, curve, laser, SPEC, 200e-6,
            duration_s=6 * 3600.0, dt_s=10.0, seed=300 + i))
        prev = target
    return traces


print("case 1: device with a linear 26 nm/C equilibrium curve")
truth_linear = TdpsCurve("linear", 26.0, 22.0)
result = tdps_pipeline(heating_intervals(
    truth_linear, [32.35, 36.1, 41.6, 50.78], PROBE))
print(f"  selected degree {result.selected_degree}; "
      f"recovered slope {result.curve.slope_nm_per_c:.2f} nm/C (truth 26)")
for temp, shift in zip(result.temperatures_c, result.cumulative_shift_nm):
    print(f"    T_eq {temp:6.2f} C -> cumulative shift {shift:8.2f} nm")

print("\ncase 2: device with a quadratic curve, athermal at 37.1 C")
truth_quad = TdpsCurve("quadratic", 0.0, 37.1, curvature_nm_per_c2=-1.5)
result = tdps_pipeline(heating_intervals(
    truth_quad, [27.89, 34.69, 43.90, 50.94], PROBE))
print(f"  selected degree {result.selected_degree}; vertex "
      f"{result.curve.reference_c:.2f} C (truth 37.1); local slope at 22 C "
      f"{result.curve.slope(22.0):.1f} nm/C")

print("\nper-interval transient fits of case 2 (rates per hour):")
for i, fit in enumerate(result.path_fits):
    y_inf, a1, r1, a2, r2 = fit.params
    print(f"  interval {i}: fast {r1:5.2f}, slow {r2:5.3f}, "
          f"increment {a1 + a2:+8.2f} nm, rmse {fit.rmse:.3f} nm")
print("note the fast rate tracking the thermal rate (1.3/hr): the housing")
print("drags the optics; the slow rate is the glass catching up.")
