#!/usr/bin/env python3
"""Time-bin and frequency states, and why they form a measurement pair.

A frame of d time bins supports two natural bases: "which bin is the
photon in" and the DFT of that, where every bin is occupied and the
information lives in the bin-to-bin phase ramp. The two are mutually
unbiased: measuring one basis tells you nothing about a state prepared in
the other, which is exactly the property an intrusion check needs.
"""

import numpy as np

from dlisim import dft_oracle, inner_product, make_frequency_state, make_time_state

d = 4

print(f"frequency states for d = {d} (amplitude per bin):")
for n in range(d):
    state = make_frequency_state(d, n)
    row = "  ".join(f"{a.real:+.3f}{a.imag:+.3f}j" for a in state.amplitudes)
    phases = np.angle(state.amplitudes) % (2 * np.pi)
    print(f"  f{n}: {row}   phases/pi: {np.round(phases / np.pi, 3)}")

print("\noverlap |<t_m|f_n>|^2 (should be 1/d everywhere):")
for m in range(d):
    t_state = make_time_state(d, m)
    overlaps = [abs(inner_product(t_state, make_frequency_state(d, n))) ** 2
                for n in range(d)]
    print(f"  t{m}: {np.round(overlaps, 6)}")

print("\nbrute-force DFT coefficients of a single-bin state t0:")
coeffs = dft_oracle(make_time_state(d, 0))
print(" ", np.round(coeffs, 6), "->  flat, phase-free: maximal basis conflict")

print("\nDFT coefficients of f2 (a basis eigencase):")
print(" ", np.round(dft_oracle(make_frequency_state(d, 2)), 6))
