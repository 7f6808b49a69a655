"""Command-line surface: reproducible runs that emit plot-ready tables.

Subcommands: states, cascade, simulate-drift, fit, waveform, report.
Configuration is a flat JSON document; command-line flags override file
values; physical keys carry unit suffixes (fsr_ghz, tau_ps, ...). Every
command is deterministic under a fixed config and seed.

Exit codes: 0 success, 2 config error, 3 numerical/convergence error,
4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
from pathlib import Path

import numpy as np
from scipy.constants import c as _C

from . import analysis, drift, optics, states, waveform
from .errors import (
    CascadeBuildError,
    ConfigError,
    CsvFormatError,
    DomainError,
    NumericalError,
)

FLOAT_FMT = "{:.12g}"

# heating-step characterization tables for the two lab devices
# (equilibrium temperature C, equilibrium path-shift increment nm)
DEVICE_STEPS_2P5GHZ = (
    (32.35, 253.0), (36.1, 135.0), (41.6, 101.0), (50.78, 280.0))
DEVICE_STEPS_1P25GHZ = (
    (27.89, 244.0), (34.69, 114.0), (43.90, -50.0), (50.94, -198.0))
DEVICE_START_C = 22.0


def _fmt(x) -> str:
    return FLOAT_FMT.format(float(x))


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config must be a flat JSON object")
    return cfg


def _resolve(args, cfg: dict, key: str, default=None):
    """Flag value if given, else config value, else default."""
    value = getattr(args, key, None)
    if value is not None:
        return value
    return cfg.get(key, default)


def _out_dir(args, cfg: dict) -> Path:
    out = Path(_resolve(args, cfg, "out", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w", newline="") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_state_label(label: str):
    m = re.fullmatch(r"([tf])(\d+)", label)
    if not m:
        raise ConfigError(f"state label {label!r} must look like f0 or t1")
    return m.group(1), int(m.group(2))


# ---------------------------------------------------------------------------
# subcommands

def cmd_states(args) -> None:
    cfg = _load_config(args.config)
    d = int(_resolve(args, cfg, "d", 4))
    basis = _resolve(args, cfg, "basis", "f")
    n = int(_resolve(args, cfg, "n", 0))
    tau = float(_resolve(args, cfg, "tau_ps", 400.0)) * 1e-12
    if basis == "t":
        state = states.make_time_state(d, n, tau)
    elif basis == "f":
        state = states.make_frequency_state(d, n, tau)
    else:
        raise ConfigError(f"basis must be 't' or 'f', got {basis!r}")
    print("bin,real,imag,probability")
    for m, amp in enumerate(state.amplitudes):
        print(f"{m},{_fmt(amp.real)},{_fmt(amp.imag)},{_fmt(abs(amp) ** 2)}")


def _cascade_from_config(args, cfg: dict):
    d = int(_resolve(args, cfg, "d", 4))
    tau = float(_resolve(args, cfg, "tau_ps", 400.0)) * 1e-12
    alpha = float(_resolve(args, cfg, "alpha", 1.0))
    split = float(_resolve(args, cfg, "split_fraction", 0.5))
    cascade = optics.build_cascade(d, tau, alpha=alpha, split_fraction=split)
    offsets = _resolve(args, cfg, "phase_offsets_rad", None)
    if offsets is not None:
        cascade = optics.with_phase_offsets(cascade, offsets)
    return cascade, d, tau


def cmd_cascade(args) -> None:
    cfg = _load_config(args.config)
    cascade, d, tau = _cascade_from_config(args, cfg)
    out = _out_dir(args, cfg)
    label = _resolve(args, cfg, "input", "f0")
    labels = [f"f{n}" for n in range(d)] if label == "all" else [label]
    for lab in labels:
        basis, n = _parse_state_label(lab)
        maker = states.make_time_state if basis == "t" else states.make_frequency_state
        state = maker(d, n, tau)
        outcome = optics.measure_cascade(state, cascade)
        path = out / f"cascade_{lab}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["port", "bin", "probability"])
            for port in range(d):
                for b in range(2 * d - 1):
                    writer.writerow([port, b, _fmt(outcome.probabilities[port, b])])
        expected = n if basis == "f" else 0
        v = optics.central_bin_visibility(outcome, expected)
        print(f"input={lab} port={expected} V={v:.6f}")


def cmd_simulate_drift(args) -> None:
    cfg = _load_config(args.config)
    out = _out_dir(args, cfg)
    fsr_hz = float(_resolve(args, cfg, "fsr_ghz", 2.5)) * 1e9
    alpha = float(_resolve(args, cfg, "alpha", 1.0))
    spec = optics.InterferometerSpec.from_bins(1, 1.0 / fsr_hz, alpha=alpha)

    wavelength_m = float(_resolve(args, cfg, "wavelength_nm", 1550.0)) * 1e-9
    laser = drift.LaserModel(
        _C / wavelength_m,
        float(_resolve(args, cfg, "laser_rms_mhz", 1.0)) * 1e6,
        float(_resolve(args, cfg, "laser_correlation_s", 60.0)))
    thermal = drift.ThermalModel(
        float(_resolve(args, cfg, "thermal_rate_per_hr", 1.3)),
        tuple((float(t), float(target))
              for t, target in _resolve(args, cfg, "t_schedule", [])),
        float(_resolve(args, cfg, "t_initial_c", 22.0)))
    path_model = drift.PathResponseModel(
        float(_resolve(args, cfg, "path_fast_per_hr", 1.4)),
        float(_resolve(args, cfg, "path_slow_per_hr", 0.10)),
        0.0,
        float(_resolve(args, cfg, "fast_fraction", 0.7)))
    form = _resolve(args, cfg, "tdps_form", "linear")
    tdps = drift.TdpsCurve(
        form,
        float(_resolve(args, cfg, "tdps_slope_nm_per_c", 26.0 if form == "linear" else 0.0)),
        float(_resolve(args, cfg, "tdps_reference_c", 22.0)),
        float(_resolve(args, cfg, "tdps_curvature_nm_per_c2", 0.0)),
        float(_resolve(args, cfg, "tdps_offset_nm", 0.0)))

    jitter = float(_resolve(args, cfg, "ref_jitter_rel", drift.DEFAULT_REF_JITTER_REL))
    seed = _resolve(args, cfg, "seed", None)
    if seed is None:
        if laser.rms_drift_hz > 0 or jitter > 0:
            raise ConfigError("stochastic scenario: --seed is mandatory")
        seed = 0
    trace = drift.simulate_drift_trace(
        thermal, path_model, tdps, laser, spec,
        float(_resolve(args, cfg, "p0_uw", 200.0)) * 1e-6,
        float(_resolve(args, cfg, "duration_s", 3600.0)),
        float(_resolve(args, cfg, "dt_s", 1.0)),
        int(seed),
        operating_phase_rad=float(_resolve(args, cfg, "operating_phase_rad",
                                           math.pi / 2)),
        ref_jitter_rel=jitter)
    path = out / str(_resolve(args, cfg, "trace_name", "drift_trace.csv"))
    drift.write_trace_csv(trace, path)
    print(f"wrote {path} ({len(trace)} samples)")


def _residual_csv(path: Path, x_name: str, x, y, fitted) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([x_name, "value", "fit", "residual"])
        for xi, yi, fi in zip(x, y, fitted):
            writer.writerow([_fmt(xi), _fmt(yi), _fmt(fi), _fmt(yi - fi)])


def cmd_fit(args) -> None:
    cfg = _load_config(args.config)
    out = _out_dir(args, cfg)
    model = args.model
    traces = [drift.read_trace_csv(p) for p in args.traces]
    if not traces:
        raise ConfigError("no trace files given")
    alpha = _resolve(args, cfg, "alpha", None)
    wavelength_nm = _resolve(args, cfg, "wavelength_nm", None)
    extract = alpha is not None and wavelength_nm is not None

    if model == "tdps":
        result = analysis.tdps_pipeline(
            traces,
            alpha=float(alpha) if extract else None,
            wavelength_m=float(wavelength_nm) * 1e-9 if extract else None)
        curve = result.curve
        doc = {
            "form": curve.form,
            "slope_nm_per_c": curve.slope_nm_per_c,
            "reference_c": curve.reference_c,
            "curvature_nm_per_c2": curve.curvature_nm_per_c2,
            "offset_nm": curve.offset_nm,
            "selected_degree": result.selected_degree,
            "poly": result.poly_fit.to_dict(),
            "temperatures_c": [float(t) for t in result.temperatures_c],
            "cumulative_shift_nm": [float(v) for v in result.cumulative_shift_nm],
            "intervals": [
                {"temperature": tf.to_dict(), "path": pf.to_dict()}
                for tf, pf in zip(result.temperature_fits, result.path_fits)],
        }
        path = out / "tdps_result.json"
        _write_json(path, doc)
        print(f"wrote {path} (degree {result.selected_degree})")
        return

    if len(traces) != 1:
        raise ConfigError(f"model {model} expects exactly one trace file")
    trace = traces[0]
    if model == "exp":
        column = _resolve(args, cfg, "column", "temperature_C")
    else:
        column = _resolve(args, cfg, "column", "delta_L_nm")
    series = _trace_column(trace, column, extract, alpha, wavelength_nm)

    if model == "exp":
        result = analysis.fit_exponential(trace.time_s, series)
        fitted = analysis.exponential_model(trace.time_s, result.params)
        x_name, x = "time_s", trace.time_s
    elif model == "dexp":
        result = analysis.fit_double_exponential(trace.time_s, series)
        fitted = analysis.double_exponential_model(trace.time_s, result.params)
        x_name, x = "time_s", trace.time_s
    elif model in ("poly1", "poly2"):
        degree = int(model[-1])
        x = trace.temperature_c
        result = analysis.fit_polynomial(x, series, degree)
        design = np.vander(x, degree + 1, increasing=True)
        fitted = design @ result.params
        x_name = "temperature_C"
    else:
        raise ConfigError(f"unknown model {model!r}")

    fit_path = out / "fit_result.json"
    _write_json(fit_path, result.to_dict())
    _residual_csv(out / "fit_residuals.csv", x_name, x, series, fitted)
    print(f"wrote {fit_path} (rmse={result.rmse:.6g})")


def _trace_column(trace, column: str, extract: bool, alpha, wavelength_nm):
    if extract and column == "delta_L_nm":
        return analysis.extract_path_from_power(
            trace, float(alpha), float(wavelength_nm) * 1e-9)
    by_name = {
        "temperature_C": trace.temperature_c,
        "delta_L_nm": trace.delta_l_nm,
        "p_plus_W": trace.p_plus_w,
        "p_minus_W": trace.p_minus_w,
        "p_ref_W": trace.p_ref_w,
    }
    if column not in by_name:
        raise ConfigError(f"unknown column {column!r}")
    return by_name[column]


def cmd_waveform(args) -> None:
    cfg = _load_config(args.config)
    out = _out_dir(args, cfg)
    d = int(_resolve(args, cfg, "d", 4))
    input_n = int(_resolve(args, cfg, "input_n", 0))
    tau = float(_resolve(args, cfg, "tau_ps", 400.0)) * 1e-12
    weights_cfg = _resolve(args, cfg, "weights", None)
    if weights_cfg is not None:
        weights = tuple(complex(w[0], w[1]) if isinstance(w, (list, tuple))
                        else complex(w) for w in weights_cfg)
    else:
        weights = tuple(np.exp(2j * math.pi * input_n * np.arange(d) / d))
    spec = waveform.PulseTrainSpec(
        float(_resolve(args, cfg, "fwhm_ps", 100.0)) * 1e-12, tau, weights,
        guard_bins=_resolve(args, cfg, "guard_bins", None))
    sample_period = float(_resolve(args, cfg, "sample_period_ps", 5.0)) * 1e-12
    delays = [float(x) * 1e-12 for x in _resolve(args, cfg, "delays_ps", [800.0, 400.0])]
    phases = [float(x) for x in _resolve(args, cfg, "phases_rad", [0.0] * len(delays))]
    if len(phases) != len(delays):
        raise ConfigError("delays_ps and phases_rad must have equal length")
    alpha = float(_resolve(args, cfg, "alpha", 1.0))
    split = float(_resolve(args, cfg, "split_fraction", 0.5))
    det = waveform.DetectorModel(
        float(_resolve(args, cfg, "bandwidth_ghz", 8.0)) * 1e9,
        int(_resolve(args, cfg, "filter_order", 4)))

    sweep = _resolve(args, cfg, "sweep_lambda_nm", None)

    def run_chain(wavelength_m: float):
        wf = waveform.synthesize_frame(spec, sample_period, wavelength_m)
        bright = dark = None
        for i, (delay, phase) in enumerate(zip(delays, phases)):
            plus, minus = waveform.delay_interfere_waveform(
                wf, delay, phase, alpha=alpha, split_fraction=split)
            wf, bright, dark = plus, plus, minus
        total_delay_bins = int(round(sum(delays) / tau))
        center = ((total_delay_bins + 1) / 2.0 + (d - 1) / 2.0) * tau
        window = (center - tau / 2.0, center + tau / 2.0)
        b_trace = waveform.detect(bright, det)
        d_trace = waveform.detect(dark, det)
        return b_trace, d_trace, waveform.visibility_from_areas(
            b_trace, d_trace, window)

    wavelength_m = float(_resolve(args, cfg, "wavelength_nm", 1550.0)) * 1e-9
    if sweep is not None:
        start, stop, step = (float(v) for v in sweep)
        rows = []
        lam = start
        while lam <= stop + 1e-9:
            _, _, v = run_chain(lam * 1e-9)
            rows.append((lam, v))
            print(f"lambda_nm={_fmt(lam)} V={v:.6f}")
            lam += step
        path = out / "visibility_vs_lambda.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["lambda_nm", "visibility"])
            for lam, v in rows:
                writer.writerow([_fmt(lam), f"{v:.9f}"])
        print(f"wrote {path}")
        return

    bright, dark, v = run_chain(wavelength_m)
    waveform.write_power_csv(bright, out / "waveform_bright.csv")
    waveform.write_power_csv(dark, out / "waveform_dark.csv")
    print(f"wrote {out / 'waveform_bright.csv'} and {out / 'waveform_dark.csv'}")
    print(f"V={v:.6f}")


def cmd_report(args) -> None:
    cfg = _load_config(args.config)
    out = _out_dir(args, cfg)
    wavelength_m = float(_resolve(args, cfg, "wavelength_nm", 1550.0)) * 1e-9
    f0 = _C / wavelength_m

    doc: dict = {"wavelength_nm": wavelength_m * 1e9}
    doc["apparent_path_nm_per_mhz"] = {
        "0.12 m": drift.apparent_path_from_frequency(1e6, 0.12, f0) * 1e9,
        "0.24 m": drift.apparent_path_from_frequency(1e6, 0.24, f0) * 1e9,
    }
    doc["rmse_to_frequency_mhz"] = {
        "0.32 nm @ 0.12 m": analysis.rmse_to_frequency(0.32, 0.12, f0) / 1e6,
        "0.34 nm @ 0.24 m": analysis.rmse_to_frequency(0.34, 0.24, f0) / 1e6,
    }

    tables = {"device_2.5GHz": DEVICE_STEPS_2P5GHZ,
              "device_1.25GHz": DEVICE_STEPS_1P25GHZ}
    tdps_doc = {}
    for name, steps in tables.items():
        temps = np.array([DEVICE_START_C] + [t for t, _ in steps])
        shifts = np.concatenate([[0.0], np.cumsum([dl for _, dl in steps])])
        lin = analysis.fit_polynomial(temps, shifts, 1)
        quad = analysis.fit_polynomial(temps, shifts, 2)
        tdps_doc[name] = {
            "linear_slope_nm_per_c": float(lin.params[1]),
            "quadratic_vertex_c": analysis.polynomial_vertex(quad.params),
            "quadratic_slope_at_22c_nm_per_c":
                analysis.polynomial_slope(quad.params, 22.0),
        }
    doc["tdps"] = tdps_doc

    dl = np.linspace(-3e-9, 3e-9, 601)
    p_plus, p_minus = drift.output_power(1.0, 1.0, wavelength_m, 0.12, dl, 0.0)
    doc["visibility_floor_at_3nm_drift"] = float(
        np.min(drift.fringe_visibility(p_plus, p_minus)))
    target = float(_resolve(args, cfg, "target_visibility", 0.985))
    split = waveform.split_fraction_for_visibility(target)
    doc["split_fraction_for_target_visibility"] = {
        "target": target, "split_fraction": split}

    path = out / "report.json"
    _write_json(path, doc)
    for key in ("apparent_path_nm_per_mhz", "rmse_to_frequency_mhz"):
        for label, value in doc[key].items():
            print(f"{key}[{label}] = {value:.4f}")
    for name, vals in tdps_doc.items():
        print(f"{name}: slope={vals['linear_slope_nm_per_c']:.2f} nm/C "
              f"vertex={vals['quadratic_vertex_c']:.2f} C "
              f"slope@22C={vals['quadratic_slope_at_22c_nm_per_c']:.2f} nm/C")
    print(f"visibility floor (|dL|<=3 nm, bright fringe): "
          f"{doc['visibility_floor_at_3nm_drift']:.6f}")
    print(f"split_fraction for V={target}: {split:.6f}")
    print(f"wrote {path}")


# ---------------------------------------------------------------------------
# parser / entry point

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON config file")
    common.add_argument("--seed", type=int, help="RNG seed for stochastic runs")
    common.add_argument("--out", help="output directory (default .)")

    parser = argparse.ArgumentParser(
        prog="dlisim",
        description="Delay-interferometer cascade simulation and drift analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("states", parents=[common],
                       help="print a state's amplitude table")
    p.add_argument("--d", type=int)
    p.add_argument("--basis", choices=["t", "f"])
    p.add_argument("--n", type=int)
    p.add_argument("--tau-ps", dest="tau_ps", type=float)
    p.set_defaults(func=cmd_states)

    p = sub.add_parser("cascade", parents=[common],
                       help="port/bin probabilities and visibility")
    p.add_argument("--d", type=int)
    p.add_argument("--input", help="state label like f0/t1, or 'all'")
    p.add_argument("--tau-ps", dest="tau_ps", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--split-fraction", dest="split_fraction", type=float)
    p.set_defaults(func=cmd_cascade)

    p = sub.add_parser("simulate-drift", parents=[common],
                       help="synthesize a stability run as CSV")
    p.add_argument("--fsr-ghz", dest="fsr_ghz", type=float)
    p.add_argument("--duration-s", dest="duration_s", type=float)
    p.add_argument("--dt-s", dest="dt_s", type=float)
    p.set_defaults(func=cmd_simulate_drift)

    p = sub.add_parser("fit", parents=[common],
                       help="fit a model to trace CSV files")
    p.add_argument("traces", nargs="+", help="trace CSV file(s)")
    p.add_argument("--model", required=True,
                   choices=["exp", "dexp", "poly1", "poly2", "tdps"])
    p.add_argument("--column")
    p.add_argument("--alpha", type=float,
                   help="with --wavelength-nm: extract path from powers")
    p.add_argument("--wavelength-nm", dest="wavelength_nm", type=float)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("waveform", parents=[common],
                       help="classical pulse-train demonstration")
    p.add_argument("--input-n", dest="input_n", type=int)
    p.add_argument("--bandwidth-ghz", dest="bandwidth_ghz", type=float)
    p.add_argument("--split-fraction", dest="split_fraction", type=float)
    p.add_argument("--sweep-lambda-nm", dest="sweep_lambda_nm", nargs=3,
                   type=float, metavar=("START", "STOP", "STEP"))
    p.set_defaults(func=cmd_waveform)

    p = sub.add_parser("report", parents=[common],
                       help="summary of derived quantities")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except CsvFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, CascadeBuildError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
