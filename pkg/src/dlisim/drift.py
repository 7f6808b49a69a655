"""Forward models of the slow physics that detunes a delay interferometer.

The path difference of a passively compensated device wanders with the
housing temperature on two time scales (a fast, housing-coupled response
and a slow, glass-coupled one), its equilibrium value follows a linear or
quadratic temperature curve, and the probe laser's residual frequency walk
masquerades as extra path change. These pieces combine into synthetic power
traces at a chosen fringe operating point.

Rates are quoted per hour everywhere (the natural scale of the dynamics);
time axes are stored in seconds.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as _C

from .errors import CsvFormatError, DomainError, UndefinedVisibilityError
from .optics import InterferometerSpec

SECONDS_PER_HOUR = 3600.0
DEFAULT_REF_JITTER_REL = 1e-4    # laser power wander, relative RMS

TRACE_CSV_HEADER = ["time_s", "temperature_C", "delta_L_nm",
                    "p_plus_W", "p_minus_W", "p_ref_W"]


@dataclass(frozen=True)
class ThermalModel:
    """Housing temperature: first-order relaxation toward a stepped target.

    ``schedule`` is a sequence of (step time in seconds, target in Celsius);
    before the first step the temperature sits at ``initial_c``.
    """

    rate_per_hr: float
    schedule: tuple
    initial_c: float

    def __post_init__(self):
        if self.rate_per_hr <= 0:
            raise DomainError("thermal rate must be positive")
        steps = tuple((float(t), float(target)) for t, target in self.schedule)
        if any(t2 <= t1 for (t1, _), (t2, _) in zip(steps, steps[1:])):
            raise DomainError("schedule times must be strictly increasing")
        object.__setattr__(self, "schedule", steps)


@dataclass(frozen=True)
class PathResponseModel:
    """Double-exponential path transient after a temperature step.

    The fast rate tracks the housing; the slow one the optics inside.
    ``fast_fraction`` splits the step asymptote between the two components.
    """

    fast_rate_per_hr: float
    slow_rate_per_hr: float
    asymptote_nm: float
    fast_fraction: float = 0.7

    def __post_init__(self):
        if not self.fast_rate_per_hr > self.slow_rate_per_hr > 0:
            raise DomainError(
                f"rates must satisfy fast > slow > 0, got "
                f"{self.fast_rate_per_hr} and {self.slow_rate_per_hr}")
        if not 0.0 <= self.fast_fraction <= 1.0:
            raise DomainError("fast_fraction must be in [0, 1]")


@dataclass(frozen=True)
class TdpsCurve:
    """Equilibrium path shift versus temperature.

    value(T) = offset + slope*(T - T_ref) + curvature*(T - T_ref)^2.
    A linear curve has zero curvature; a quadratic one is usually stated
    with ``reference_c`` at its vertex (zero local slope there).
    """

    form: str
    slope_nm_per_c: float
    reference_c: float
    curvature_nm_per_c2: float = 0.0
    offset_nm: float = 0.0

    def __post_init__(self):
        if self.form not in ("linear", "quadratic"):
            raise DomainError(f"unknown TDPS form {self.form!r}")
        if self.form == "linear" and self.curvature_nm_per_c2 != 0.0:
            raise DomainError("linear curve must have zero curvature")

    def value(self, temperature_c):
        dt = np.asarray(temperature_c, dtype=float) - self.reference_c
        out = self.offset_nm + self.slope_nm_per_c * dt \
            + self.curvature_nm_per_c2 * dt ** 2
        return float(out) if np.isscalar(temperature_c) else out

    def slope(self, temperature_c):
        dt = np.asarray(temperature_c, dtype=float) - self.reference_c
        out = self.slope_nm_per_c + 2.0 * self.curvature_nm_per_c2 * dt
        return float(out) if np.isscalar(temperature_c) else out


@dataclass(frozen=True)
class LaserModel:
    """Frequency-stabilized probe laser with bounded residual drift."""

    center_frequency_hz: float
    rms_drift_hz: float
    correlation_time_s: float
    seed: int = 0

    def __post_init__(self):
        if self.center_frequency_hz <= 0:
            raise DomainError("center frequency must be positive")
        if self.rms_drift_hz < 0:
            raise DomainError("RMS drift bound must be >= 0")
        if self.correlation_time_s <= 0:
            raise DomainError("correlation time must be positive")

    @property
    def wavelength_m(self) -> float:
        return _C / self.center_frequency_hz


@dataclass(frozen=True, eq=False)
class DriftTrace:
    """Uniformly sampled record of one stability run."""

    time_s: np.ndarray
    temperature_c: np.ndarray
    delta_l_nm: np.ndarray
    p_plus_w: np.ndarray
    p_minus_w: np.ndarray
    p_ref_w: np.ndarray

    def __post_init__(self):
        arrays = {}
        n = None
        for name in ("time_s", "temperature_c", "delta_l_nm",
                     "p_plus_w", "p_minus_w", "p_ref_w"):
            arr = np.array(getattr(self, name), dtype=float)
            if n is None:
                n = arr.size
            elif arr.size != n:
                raise DomainError(f"column {name} has length {arr.size}, expected {n}")
            arr.setflags(write=False)
            arrays[name] = arr
        if n < 2:
            raise DomainError("trace needs at least two samples")
        dt = np.diff(arrays["time_s"])
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-12):
            raise DomainError("time axis must be uniform")
        if np.any(arrays["p_plus_w"] < 0) or np.any(arrays["p_minus_w"] < 0) \
                or np.any(arrays["p_ref_w"] < 0):
            raise DomainError("powers must be non-negative")
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    @property
    def dt_s(self) -> float:
        return float(self.time_s[1] - self.time_s[0])

    def __len__(self) -> int:
        return self.time_s.size


def output_power(p0_w: float, alpha: float, wavelength_m: float,
                 delta_l0_m: float, delta_l_m: float, phase_rad: float):
    """Two-port fringe powers: P+- = (alpha*P0/2) * (1 +- cos(phase + k*dL)).

    ``phase_rad`` is the operating point set by fine tuning (k times the
    nominal path is already folded into it); at pi/2 this sits on the
    steepest fringe slope, where P+- = (alpha*P0/2)*(1 -+ sin(k*dL)).
    ``delta_l0_m`` is carried for bookkeeping and unit checks only.
    """
    if wavelength_m <= 0:
        raise DomainError("wavelength must be positive")
    if np.any(np.asarray(p0_w) < 0):
        raise DomainError("input power must be >= 0")
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must be in (0, 1], got {alpha}")
    if delta_l0_m <= 0:
        raise DomainError("nominal path must be positive")
    k = 2.0 * math.pi / wavelength_m
    theta = phase_rad + k * np.asarray(delta_l_m, dtype=float)
    half = 0.5 * alpha * np.asarray(p0_w, dtype=float)
    p_plus = half * (1.0 + np.cos(theta))
    p_minus = half * (1.0 - np.cos(theta))
    if np.isscalar(delta_l_m) and np.isscalar(p0_w):
        return float(p_plus), float(p_minus)
    return p_plus, p_minus


def fringe_visibility(p_plus, p_minus):
    """(P+ - P-) / (P+ + P-) for scalars or elementwise for arrays."""
    plus = np.asarray(p_plus, dtype=float)
    minus = np.asarray(p_minus, dtype=float)
    total = plus + minus
    if np.any(total == 0.0):
        raise UndefinedVisibilityError("zero total power")
    v = (plus - minus) / total
    return float(v) if v.ndim == 0 else v


def apparent_path_from_frequency(df_hz, delta_l0_m: float, f0_hz: float):
    """Path change (meters) that mimics a laser frequency offset.

    A fractional frequency shift and a fractional path shift move the fringe
    identically, so dL_apparent = delta_l0 * df / f0.
    """
    if f0_hz <= 0:
        raise DomainError("center frequency must be positive")
    out = delta_l0_m * np.asarray(df_hz, dtype=float) / f0_hz
    return float(out) if np.isscalar(df_hz) else out


def thermal_response(model: ThermalModel, t_s):
    """Temperature at time(s) ``t_s``, continuous across schedule steps."""
    t = np.asarray(t_s, dtype=float)
    if np.any(t < 0):
        raise DomainError("time must be >= 0")
    temps = np.full(t.shape, model.initial_c, dtype=float)
    current = model.initial_c
    for i, (t_step, target) in enumerate(model.schedule):
        next_t = model.schedule[i + 1][0] if i + 1 < len(model.schedule) else None
        # temperature reached at the end of this interval seeds the next one
        mask = t >= t_step if next_t is None else (t >= t_step) & (t < next_t)
        dt_hr = (t[mask] - t_step) / SECONDS_PER_HOUR
        temps[mask] = target + (current - target) * np.exp(-model.rate_per_hr * dt_hr)
        if next_t is not None:
            span_hr = (next_t - t_step) / SECONDS_PER_HOUR
            current = target + (current - target) * math.exp(-model.rate_per_hr * span_hr)
    return float(temps) if np.isscalar(t_s) else temps


def path_response(model: PathResponseModel, weights: tuple, t_s):
    """Double-exponential approach to the step asymptote.

    dL(t) = dL_inf - A1*exp(-r1*t) - A2*exp(-r2*t), in nanometers, with the
    weights (A1, A2) chosen by the caller (A1 + A2 = dL_inf for a transient
    that starts from zero).
    """
    a1, a2 = float(weights[0]), float(weights[1])
    t = np.asarray(t_s, dtype=float)
    if np.any(t < 0):
        raise DomainError("time must be >= 0")
    t_hr = t / SECONDS_PER_HOUR
    out = (model.asymptote_nm
           - a1 * np.exp(-model.fast_rate_per_hr * t_hr)
           - a2 * np.exp(-model.slow_rate_per_hr * t_hr))
    return float(out) if np.isscalar(t_s) else out


def tdps_equilibrium(curve: TdpsCurve, temperature_c):
    """Equilibrium path shift (nm) and local slope (nm/C) at a temperature."""
    return curve.value(temperature_c), curve.slope(temperature_c)


def laser_frequency_walk(model: LaserModel, duration_s: float, dt_s: float,
                         rng: np.random.Generator | None = None) -> np.ndarray:
    """Mean-reverting frequency offset series with the model's stationary RMS.

    Exact discretization of an Ornstein-Uhlenbeck process: stationary
    standard deviation equals ``rms_drift_hz`` and the autocorrelation time
    equals ``correlation_time_s``. Deterministic for a fixed seed; a zero
    RMS bound gives an identically zero series.
    """
    if dt_s <= 0:
        raise DomainError("dt must be positive")
    if duration_s < 0:
        raise DomainError("duration must be >= 0")
    n = int(math.floor(duration_s / dt_s + 1e-9)) + 1
    if model.rms_drift_hz == 0.0:
        return np.zeros(n)
    if rng is None:
        rng = np.random.default_rng(model.seed)
    rho = math.exp(-dt_s / model.correlation_time_s)
    innovation = model.rms_drift_hz * math.sqrt(1.0 - rho * rho)
    offsets = np.empty(n)
    offsets[0] = model.rms_drift_hz * rng.standard_normal()
    noise = rng.standard_normal(n - 1)
    for i in range(1, n):
        offsets[i] = rho * offsets[i - 1] + innovation * noise[i - 1]
    return offsets


def heater_path_shift(voltage_v, coefficient_nm_per_v2: float):
    """Resistive-heater tuning: path shift grows with delivered power, V^2."""
    v = np.asarray(voltage_v, dtype=float)
    if np.any(v < 0):
        raise DomainError("voltage must be >= 0")
    if coefficient_nm_per_v2 < 0:
        raise DomainError("heater coefficient must be >= 0")
    out = coefficient_nm_per_v2 * v ** 2
    return float(out) if np.isscalar(voltage_v) else out


def simulate_drift_trace(thermal: ThermalModel, path: PathResponseModel,
                         tdps: TdpsCurve, laser: LaserModel,
                         interferometer: InterferometerSpec, p0_w: float,
                         duration_s: float, dt_s: float, seed: int,
                         operating_phase_rad: float = math.pi / 2,
                         ref_jitter_rel: float = DEFAULT_REF_JITTER_REL,
                         initial_delta_l_nm: float = 0.0) -> DriftTrace:
    """Synthesize one stability run.

    Each thermal schedule step contributes a double-exponential path
    transient whose asymptote is the TDPS increment between the previous
    and new equilibrium temperatures. The laser walk adds its apparent path
    change on top, and the reference power tracks the (slightly jittering)
    input power. Deterministic for a fixed seed.
    """
    if dt_s <= 0:
        raise DomainError("dt must be positive")
    if p0_w < 0:
        raise DomainError("input power must be >= 0")
    n = int(math.floor(duration_s / dt_s + 1e-9)) + 1
    t = np.arange(n) * dt_s

    temps = thermal_response(thermal, t)

    delta_l_nm = np.full(n, initial_delta_l_nm, dtype=float)
    prev_target = thermal.initial_c
    for t_step, target in thermal.schedule:
        increment = tdps.value(target) - tdps.value(prev_target)
        prev_target = target
        mask = t >= t_step
        dt_hr = (t[mask] - t_step) / SECONDS_PER_HOUR
        rise = 1.0 \
            - path.fast_fraction * np.exp(-path.fast_rate_per_hr * dt_hr) \
            - (1.0 - path.fast_fraction) * np.exp(-path.slow_rate_per_hr * dt_hr)
        delta_l_nm[mask] += increment * rise

    seq = np.random.SeedSequence(seed)
    laser_rng, jitter_rng = (np.random.default_rng(s) for s in seq.spawn(2))
    walk = laser_frequency_walk(laser, duration_s, dt_s, rng=laser_rng)[:n]
    apparent_nm = 1e9 * apparent_path_from_frequency(
        walk, interferometer.nominal_path_m, laser.center_frequency_hz)
    delta_l_nm = delta_l_nm + apparent_nm

    if ref_jitter_rel > 0:
        p_in = p0_w * (1.0 + ref_jitter_rel * jitter_rng.standard_normal(n))
        p_in = np.maximum(p_in, 0.0)
    else:
        p_in = np.full(n, p0_w)

    p_plus, p_minus = output_power(
        p_in, interferometer.alpha, laser.wavelength_m,
        interferometer.nominal_path_m, delta_l_nm * 1e-9, operating_phase_rad)

    return DriftTrace(t, temps, delta_l_nm, p_plus, p_minus, p_in)


def write_trace_csv(trace: DriftTrace, path) -> None:
    """CSV with the canonical header, LF line endings, dot decimals."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_CSV_HEADER)
        for row in zip(trace.time_s, trace.temperature_c, trace.delta_l_nm,
                       trace.p_plus_w, trace.p_minus_w, trace.p_ref_w):
            writer.writerow([f"{x:.12g}" for x in row])


def read_trace_csv(path) -> DriftTrace:
    """Parse a trace CSV, naming the offending line on bad input."""
    columns = [[] for _ in TRACE_CSV_HEADER]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TRACE_CSV_HEADER:
            raise CsvFormatError(f"{path}: line 1: expected header "
                                 f"{','.join(TRACE_CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TRACE_CSV_HEADER):
                raise CsvFormatError(
                    f"{path}: line {lineno}: expected {len(TRACE_CSV_HEADER)} "
                    f"fields, got {len(row)}")
            try:
                values = [float(x) for x in row]
            except ValueError as exc:
                raise CsvFormatError(f"{path}: line {lineno}: {exc}") from exc
            for col, val in zip(columns, values):
                col.append(val)
    if len(columns[0]) < 2:
        raise CsvFormatError(f"{path}: fewer than two data rows")
    return DriftTrace(*[np.array(col) for col in columns])
