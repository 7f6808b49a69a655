import json
import math

import numpy as np
import pytest

from dlisim.cli import main
from dlisim.drift import read_trace_csv
from dlisim.optics import build_cascade, central_bin_visibility, measure_cascade, with_phase_offsets
from dlisim.states import make_frequency_state

TAU = 400e-12


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_states_frequency_table(capsys):
    code, out, _ = run(capsys, "states", "--d", "4", "--basis", "f", "--n", "1")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "bin,real,imag,probability"
    rows = [line.split(",") for line in lines[1:]]
    phases = [math.atan2(float(im), float(re)) % (2 * math.pi)
              for _, re, im, _ in rows]
    expected = [0.0, math.pi / 2, math.pi, 3 * math.pi / 2]
    assert phases == pytest.approx(expected, abs=1e-9)
    assert [float(p) for *_, p in rows] == pytest.approx([0.25] * 4)


def test_states_time_basis(capsys):
    code, out, _ = run(capsys, "states", "--d", "2", "--basis", "t", "--n", "0")
    assert code == 0
    assert out.strip().splitlines()[1] == "0,1,0,1"


def test_states_rejects_non_power_of_two(capsys):
    code, _, err = run(capsys, "states", "--d", "3", "--basis", "f", "--n", "0")
    assert code == 2
    assert "power of two" in err


def test_cascade_ideal_f0(tmp_path, capsys):
    code, out, _ = run(capsys, "cascade", "--d", "4", "--input", "f0",
                       "--out", str(tmp_path))
    assert code == 0
    assert "V=1.000000" in out
    rows = (tmp_path / "cascade_f0.csv").read_text().splitlines()
    assert rows[0] == "port,bin,probability"
    assert len(rows) == 1 + 4 * 7


def test_cascade_phase_error_matches_library(tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"phase_offsets_rad": [0.0, 0.1, 0.0]}))
    code, out, _ = run(capsys, "cascade", "--d", "4", "--input", "f0",
                       "--out", str(tmp_path), "--config", str(config))
    assert code == 0
    v_cli = float(out.strip().splitlines()[-1].split("V=")[1])
    cascade = with_phase_offsets(build_cascade(4, TAU), [0.0, 0.1, 0.0])
    outcome = measure_cascade(make_frequency_state(4, 0, TAU), cascade)
    v_lib = central_bin_visibility(outcome, 0)
    assert v_cli < 1.0
    assert v_cli == pytest.approx(v_lib, abs=5e-7)


def test_cascade_d8_confusion_matrix_is_identity(tmp_path, capsys):
    code, out, _ = run(capsys, "cascade", "--d", "8", "--input", "all",
                       "--out", str(tmp_path))
    assert code == 0
    for n in range(8):
        rows = (tmp_path / f"cascade_f{n}.csv").read_text().splitlines()[1:]
        central = {}
        for row in rows:
            port, b, p = row.split(",")
            if int(b) == 7:
                central[int(port)] = float(p)
        bright = max(central, key=central.get)
        assert bright == n
        assert central[n] == pytest.approx(1 / 8, abs=1e-9)


def test_simulate_drift_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        code, _, _ = run(capsys, "simulate-drift", "--seed", "9",
                         "--duration-s", "60", "--out", str(out))
        assert code == 0
    assert (a / "drift_trace.csv").read_bytes() == (b / "drift_trace.csv").read_bytes()


def test_simulate_drift_requires_seed_when_stochastic(tmp_path, capsys):
    code, _, err = run(capsys, "simulate-drift", "--duration-s", "60",
                       "--out", str(tmp_path))
    assert code == 2
    assert "seed" in err


def test_simulate_noise_free_constant_powers(tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({
        "laser_rms_mhz": 0.0, "ref_jitter_rel": 0.0, "t_schedule": [],
        "duration_s": 60.0}))
    code, _, _ = run(capsys, "simulate-drift", "--config", str(config),
                     "--out", str(tmp_path))
    assert code == 0
    trace = read_trace_csv(tmp_path / "drift_trace.csv")
    np.testing.assert_allclose(trace.p_plus_w, 100e-6, atol=1e-15)
    np.testing.assert_allclose(trace.p_minus_w, 100e-6, atol=1e-15)


def test_fit_double_exponential_on_synthetic_interval(tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({
        "laser_rms_mhz": 0.0, "ref_jitter_rel": 0.0,
        "t_schedule": [[0.0, 32.35]], "thermal_rate_per_hr": 1.223,
        "path_fast_per_hr": 1.4, "path_slow_per_hr": 0.10,
        "duration_s": 6 * 3600.0, "dt_s": 20.0}))
    code, _, _ = run(capsys, "simulate-drift", "--config", str(config),
                     "--out", str(tmp_path))
    assert code == 0
    code, out, _ = run(capsys, "fit", str(tmp_path / "drift_trace.csv"),
                       "--model", "dexp", "--out", str(tmp_path))
    assert code == 0
    doc = json.loads((tmp_path / "fit_result.json").read_text())
    assert doc["converged"] is True
    # asymptote = 26 nm/C * (32.35 - 22) C
    increment = doc["params"][1] + doc["params"][3]
    assert increment == pytest.approx(26.0 * 10.35, rel=0.02)
    assert (tmp_path / "fit_residuals.csv").exists()


def test_fit_malformed_csv_names_line(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("time_s,temperature_C,delta_L_nm,p_plus_W,p_minus_W,p_ref_W\n"
                   "0,22,0,1,1,1\n"
                   "not,a,number,1,1,oops\n")
    code, _, err = run(capsys, "fit", str(bad), "--model", "exp",
                       "--out", str(tmp_path))
    assert code == 4
    assert "line 3" in err


def test_fit_missing_file_is_io_error(tmp_path, capsys):
    code, _, err = run(capsys, "fit", str(tmp_path / "nope.csv"),
                       "--model", "exp", "--out", str(tmp_path))
    assert code == 4


def test_waveform_default_demo(tmp_path, capsys):
    code, out, _ = run(capsys, "waveform", "--out", str(tmp_path))
    assert code == 0
    v = float(out.strip().splitlines()[-1].split("V=")[1])
    assert v > 0.99
    bright = (tmp_path / "waveform_bright.csv").read_text().splitlines()
    assert bright[0] == "time_s,power_W"


def test_waveform_lambda_sweep(tmp_path, capsys):
    code, out, _ = run(capsys, "waveform", "--out", str(tmp_path),
                       "--sweep-lambda-nm", "1525", "1565", "5")
    assert code == 0
    rows = (tmp_path / "visibility_vs_lambda.csv").read_text().splitlines()[1:]
    assert len(rows) == 9
    for row in rows:
        _, v = row.split(",")
        assert float(v) > 0.99


def test_waveform_zero_weights_clean_error(tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"weights": [0, 0, 0, 0]}))
    code, _, err = run(capsys, "waveform", "--config", str(config),
                       "--out", str(tmp_path))
    assert code == 3
    assert "area" in err or "visibility" in err.lower()


def test_report_outputs(tmp_path, capsys):
    code, out, _ = run(capsys, "report", "--out", str(tmp_path))
    assert code == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["apparent_path_nm_per_mhz"]["0.12 m"] == pytest.approx(0.62, abs=0.01)
    assert doc["tdps"]["device_2.5GHz"]["linear_slope_nm_per_c"] == pytest.approx(
        26.5, abs=0.1)
    assert doc["split_fraction_for_target_visibility"]["split_fraction"] == \
        pytest.approx(0.41372, abs=1e-4)


def test_bad_config_json_is_config_error(tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text("{not json")
    code, _, err = run(capsys, "states", "--config", str(config))
    assert code == 2
    assert "JSON" in err
