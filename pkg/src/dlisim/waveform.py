"""Sampled-envelope simulation of pulsed frames through delay interferometers.

The optical carrier is never sampled; waveforms are complex baseband
envelopes, and any carrier phase picked up in the delayed arm is folded into
the interferometer phase argument. Detection squares the envelope and
applies a Bessel-type low-pass magnitude response, mimicking an
oscilloscope front end of finite bandwidth.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as _signal

from .errors import DomainError, UndefinedVisibilityError

DEFAULT_SAMPLE_PERIOD_S = 5e-12
DEFAULT_WAVELENGTH_M = 1550e-9

_RESOLUTION_FACTOR = 20          # >= 20 samples per bin
_DELAY_SNAP_TOL = 1e-3           # fraction of a sample period


@dataclass(frozen=True, eq=False)
class SampledWaveform:
    """Complex field envelope on a uniform time grid."""

    sample_period_s: float
    samples: np.ndarray
    wavelength_m: float = DEFAULT_WAVELENGTH_M

    def __post_init__(self):
        if self.sample_period_s <= 0:
            raise DomainError("sample period must be positive")
        if self.wavelength_m <= 0:
            raise DomainError("wavelength must be positive")
        samples = np.array(self.samples, dtype=np.complex128)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.sample_period_s

    def power(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.sample_period_s)


@dataclass(frozen=True)
class PulseTrainSpec:
    """Frame pattern: Gaussian peaks of one intensity FWHM, one per bin.

    ``weights[m]`` is the complex field weight of bin ``m``. ``guard_bins``
    empty bins trail each frame; the default d-1 is the smallest count that
    keeps the 2d-1 spread bins of neighbouring frames from overlapping
    after the full cascade.
    """

    fwhm_s: float
    bin_width_s: float
    weights: tuple
    guard_bins: int | None = None
    repetitions: int = 1

    def __post_init__(self):
        if self.fwhm_s <= 0 or self.bin_width_s <= 0:
            raise DomainError("FWHM and bin width must be positive")
        if self.fwhm_s >= self.bin_width_s:
            raise DomainError("pulse FWHM must be smaller than the bin width")
        weights = tuple(complex(w) for w in self.weights)
        if len(weights) < 1:
            raise DomainError("need at least one bin weight")
        if self.repetitions < 1:
            raise DomainError("repetitions must be >= 1")
        guards = self.guard_bins
        if guards is None:
            guards = len(weights) - 1
        elif guards < len(weights) - 1:
            raise DomainError(
                f"guard_bins must be >= d-1 = {len(weights) - 1}, got {guards}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "guard_bins", guards)

    @property
    def dimension(self) -> int:
        return len(self.weights)

    @property
    def frame_period_s(self) -> float:
        return (self.dimension + self.guard_bins) * self.bin_width_s


@dataclass(frozen=True)
class DetectorModel:
    """Low-pass photoreceiver/oscilloscope model: -3 dB at ``bandwidth_hz``."""

    bandwidth_hz: float
    order: int = 4

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise DomainError("detector bandwidth must be positive")
        if self.order < 1:
            raise DomainError("filter order must be >= 1")


@dataclass(frozen=True, eq=False)
class PowerTrace:
    """Real detected power on the same grid as the waveform it came from."""

    sample_period_s: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.size) * self.sample_period_s

    def area(self, t_start: float, t_stop: float) -> float:
        """Rectangle-rule integral of the trace over [t_start, t_stop)."""
        t = self.times
        mask = (t >= t_start) & (t < t_stop)
        return float(np.sum(self.values[mask]) * self.sample_period_s)


def synthesize_frame(spec: PulseTrainSpec,
                     sample_period_s: float = DEFAULT_SAMPLE_PERIOD_S,
                     wavelength_m: float = DEFAULT_WAVELENGTH_M) -> SampledWaveform:
    """Build the pulse-train envelope for one or more frames.

    Peaks sit at the centre of their bins and carry the per-bin complex
    weight on the field. Each frame's energy is normalized to 1.
    """
    if sample_period_s <= 0:
        raise DomainError("sample period must be positive")
    if sample_period_s > spec.bin_width_s / _RESOLUTION_FACTOR:
        raise DomainError(
            f"sample period {sample_period_s} too coarse for bin width "
            f"{spec.bin_width_s} (need <= bin/{_RESOLUTION_FACTOR})")
    total_t = spec.repetitions * spec.frame_period_s
    n = int(round(total_t / sample_period_s))
    t = np.arange(n) * sample_period_s
    # Intensity FWHM -> field Gaussian: |G|^2 must have the requested width.
    sigma_i = spec.fwhm_s / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    env = np.zeros(n, dtype=np.complex128)
    for rep in range(spec.repetitions):
        frame_start = rep * spec.frame_period_s
        for m, w in enumerate(spec.weights):
            if w == 0:
                continue
            center = frame_start + (m + 0.5) * spec.bin_width_s
            env += w * np.exp(-((t - center) ** 2) / (4.0 * sigma_i ** 2))
    frame_energy = float(np.sum(np.abs(env) ** 2) * sample_period_s) / spec.repetitions
    if frame_energy > 0:
        env /= math.sqrt(frame_energy)
    return SampledWaveform(sample_period_s, env, wavelength_m)


def delay_interfere_waveform(wf: SampledWaveform, delay_s: float,
                             phase_rad: float, alpha: float = 1.0,
                             split_fraction: float = 0.5):
    """One delay interferometer acting on a sampled envelope.

    Same two-port transfer as the bin-level device, with the bin delay
    replaced by a sample delay. The delay must land on the sample grid to
    within a 1e-3 fraction of a sample.
    """
    if delay_s <= 0:
        raise DomainError("delay must be positive")
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must be in (0, 1], got {alpha}")
    if not 0.0 < split_fraction < 1.0:
        raise DomainError(f"split_fraction must be in (0, 1), got {split_fraction}")
    ratio = delay_s / wf.sample_period_s
    shift = int(round(ratio))
    if shift < 1 or abs(ratio - shift) > _DELAY_SNAP_TOL:
        raise DomainError(
            f"delay {delay_s} is not an integer number of samples "
            f"(period {wf.sample_period_s})")
    n = wf.samples.size
    direct = np.zeros(n + shift, dtype=np.complex128)
    delayed = np.zeros(n + shift, dtype=np.complex128)
    direct[:n] = wf.samples
    delayed[shift:] = wf.samples * np.exp(1j * phase_rad)
    w_direct = math.sqrt(split_fraction)
    w_delayed = math.sqrt(1.0 - split_fraction)
    scale = math.sqrt(alpha) / math.sqrt(2.0)
    plus = scale * (w_direct * direct + w_delayed * delayed)
    minus = scale * (w_delayed * direct - w_direct * delayed)
    return (SampledWaveform(wf.sample_period_s, plus, wf.wavelength_m),
            SampledWaveform(wf.sample_period_s, minus, wf.wavelength_m))


def detect(wf: SampledWaveform, det: DetectorModel) -> PowerTrace:
    """Detected power trace: |envelope|^2 through the detector's low-pass.

    The filter is applied as a zero-phase magnitude response in the
    frequency domain, so the DC gain (and hence the pulse area) is exactly
    preserved. A bandwidth at or above Nyquist returns the power unchanged.
    """
    power = np.abs(wf.samples) ** 2
    nyquist = 0.5 / wf.sample_period_s
    if det.bandwidth_hz >= nyquist:
        return PowerTrace(wf.sample_period_s, power)
    b, a = _signal.bessel(det.order, 2.0 * math.pi * det.bandwidth_hz,
                          btype="low", analog=True, norm="mag")
    freqs = np.fft.rfftfreq(power.size, wf.sample_period_s)
    _, response = _signal.freqs(b, a, worN=2.0 * math.pi * freqs)
    spectrum = np.fft.rfft(power) * np.abs(response)
    filtered = np.fft.irfft(spectrum, n=power.size)
    return PowerTrace(wf.sample_period_s, filtered)


def visibility_from_areas(bright: PowerTrace, dark: PowerTrace,
                          window: tuple) -> float:
    """Area contrast (A+ - A-) / (A+ + A-) over a time window.

    The window should cover the fully-interfering central peak and nothing
    else; that is the caller's responsibility.
    """
    t_start, t_stop = window
    if t_stop <= t_start:
        raise DomainError("window must have positive length")
    a_plus = bright.area(t_start, t_stop)
    a_minus = dark.area(t_start, t_stop)
    if a_plus + a_minus == 0.0:
        raise UndefinedVisibilityError("no detected area in the window")
    return (a_plus - a_minus) / (a_plus + a_minus)


def bin_energies(wf: SampledWaveform, bin_width_s: float, n_bins: int,
                 start_s: float = 0.0) -> np.ndarray:
    """Envelope energy integrated per time bin (for cross-checks)."""
    power = np.abs(wf.samples) ** 2
    t = wf.times
    out = np.empty(n_bins)
    for b in range(n_bins):
        lo = start_s + b * bin_width_s
        mask = (t >= lo) & (t < lo + bin_width_s)
        out[b] = float(np.sum(power[mask]) * wf.sample_period_s)
    return out


def cw_fringe_visibility(split_fraction: float, delay_s: float = 400e-12,
                         sample_period_s: float = DEFAULT_SAMPLE_PERIOD_S,
                         n_samples: int = 2048) -> float:
    """Steady-state fringe contrast of one device probed with CW light.

    Simulated, not the closed form: the constant envelope is run through the
    device at the fringe maximum and minimum and the plateau powers are
    compared. An imbalanced splitter caps the contrast at 2*sqrt(g*(1-g)).
    """
    cw = SampledWaveform(sample_period_s, np.ones(n_samples, dtype=complex))
    settle = int(round(delay_s / sample_period_s)) + 1
    core = slice(settle, n_samples - settle)
    p_max, _ = delay_interfere_waveform(cw, delay_s, 0.0,
                                        split_fraction=split_fraction)
    p_min, _ = delay_interfere_waveform(cw, delay_s, math.pi,
                                        split_fraction=split_fraction)
    hi = float(np.mean(np.abs(p_max.samples[core]) ** 2))
    lo = float(np.mean(np.abs(p_min.samples[core]) ** 2))
    return (hi - lo) / (hi + lo)


def split_fraction_for_visibility(target: float, tol: float = 1e-10,
                                  max_iter: int = 200) -> float:
    """Splitter power fraction whose simulated CW fringe contrast hits ``target``.

    Bisection over (0, 0.5]: the contrast grows monotonically from 0 at a
    fully one-sided splitter to 1 at a balanced one.
    """
    if not 0.0 < target <= 1.0:
        raise DomainError(f"target visibility must be in (0, 1], got {target}")
    lo, hi = 1e-9, 0.5
    v_lo = cw_fringe_visibility(lo)
    v_hi = cw_fringe_visibility(hi)
    if not v_lo <= target <= v_hi:
        raise DomainError(f"target {target} outside attainable range "
                          f"[{v_lo:.3g}, {v_hi:.6g}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if cw_fringe_visibility(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def write_power_csv(trace: PowerTrace, path) -> None:
    """Two-column CSV: time_s, power_W."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time_s", "power_W"])
        for t, p in zip(trace.times, trace.values):
            writer.writerow([f"{t:.12g}", f"{p:.12g}"])
