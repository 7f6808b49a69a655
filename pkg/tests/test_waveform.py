import numpy as np
import pytest

from dlisim.errors import DomainError, UndefinedVisibilityError
from dlisim.optics import build_cascade, measure_cascade
from dlisim.states import make_frequency_state
from dlisim.waveform import (
    DetectorModel,
    PowerTrace,
    PulseTrainSpec,
    SampledWaveform,
    bin_energies,
    delay_interfere_waveform,
    detect,
    synthesize_frame,
    visibility_from_areas,
    write_power_csv,
)

TAU = 400e-12
SP = 5e-12


def four_peak_frame():
    return synthesize_frame(PulseTrainSpec(100e-12, TAU, (1, 1, 1, 1)), SP)


def test_frame_peak_positions_and_energy():
    wf = four_peak_frame()
    assert wf.energy == pytest.approx(1.0, rel=1e-12)
    power = wf.power()
    t = wf.times
    # four peaks centred in their bins at 200, 600, 1000, 1400 ps
    for center in (200e-12, 600e-12, 1000e-12, 1400e-12):
        idx = np.argmin(np.abs(t - center))
        window = power[idx - 5:idx + 6]
        assert np.argmax(window) == 5
    # guard bins are dark
    assert np.all(power[t >= 1700e-12] < 1e-6 * power.max())


def test_single_peak_frame():
    wf = synthesize_frame(PulseTrainSpec(100e-12, TAU, (1, 0, 0, 0)), SP)
    power = wf.power()
    assert wf.times[np.argmax(power)] == pytest.approx(200e-12, abs=SP)


def test_fwhm_must_fit_in_bin():
    with pytest.raises(DomainError):
        PulseTrainSpec(400e-12, TAU, (1, 0, 0, 0))


def test_resolution_guard():
    with pytest.raises(DomainError):
        synthesize_frame(PulseTrainSpec(100e-12, TAU, (1, 1, 1, 1)),
                         sample_period_s=25e-12)


def test_intensity_fwhm_matches_request():
    wf = synthesize_frame(PulseTrainSpec(100e-12, TAU, (1, 0, 0, 0)), 1e-12)
    power = wf.power()
    half = power.max() / 2
    above = wf.times[power >= half]
    assert above[-1] - above[0] == pytest.approx(100e-12, rel=0.02)


def test_delay_interfere_energy_conserved():
    wf = four_peak_frame()
    plus, minus = delay_interfere_waveform(wf, 800e-12, 0.3)
    assert plus.energy + minus.energy == pytest.approx(wf.energy, rel=1e-9)


def test_delay_must_be_on_grid():
    wf = four_peak_frame()
    with pytest.raises(DomainError):
        delay_interfere_waveform(wf, 802e-12, 0.0)
    # within snap tolerance is fine
    delay_interfere_waveform(wf, 800.000001e-12, 0.0)


def test_cw_steady_state_routing():
    cw = SampledWaveform(SP, np.ones(2000, complex))
    plus, minus = delay_interfere_waveform(cw, 400e-12, 0.0)
    core = slice(100, 1900)
    assert np.allclose(np.abs(plus.samples[core]) ** 2, 1.0, atol=1e-12)
    assert np.allclose(np.abs(minus.samples[core]) ** 2, 0.0, atol=1e-12)


def test_seven_peak_constructive_pattern():
    wf = four_peak_frame()
    plus1, _ = delay_interfere_waveform(wf, 800e-12, 0.0)
    bright, dark = delay_interfere_waveform(plus1, 400e-12, 0.0)
    energies = bin_energies(bright, TAU, 7)
    assert np.all(energies > 0)
    assert np.argmax(energies) == 3  # frame-centre bin wins
    # flipping the second stage by pi swaps the roles (residual is Gaussian
    # tail leakage from the neighbouring peaks)
    bright_pi, _ = delay_interfere_waveform(plus1, 400e-12, np.pi)
    energies_pi = bin_energies(bright_pi, TAU, 7)
    assert energies_pi[3] == pytest.approx(0.0, abs=1e-6)


def test_waveform_bins_match_cascade_probabilities():
    wf = four_peak_frame()
    plus1, minus1 = delay_interfere_waveform(wf, 800e-12, 0.0)
    bright, dark = delay_interfere_waveform(plus1, 400e-12, 0.0)
    cascade = build_cascade(4, TAU)
    outcome = measure_cascade(make_frequency_state(4, 0, TAU), cascade)
    # the second stage hangs off the root's sum port, so its difference
    # port is the even-residue partner (frequency index 2)
    np.testing.assert_allclose(bin_energies(bright, TAU, 7),
                               outcome.probabilities[0], atol=1e-3)
    np.testing.assert_allclose(bin_energies(dark, TAU, 7),
                               outcome.probabilities[2], atol=1e-3)


def test_detect_infinite_bandwidth_is_identity():
    wf = four_peak_frame()
    trace = detect(wf, DetectorModel(bandwidth_hz=1e14))
    np.testing.assert_array_equal(trace.values, wf.power())


def test_detect_broadens_but_preserves_area():
    wf = synthesize_frame(PulseTrainSpec(100e-12, TAU, (1, 0, 0, 0)), SP)
    raw = detect(wf, DetectorModel(bandwidth_hz=1e14))
    filtered = detect(wf, DetectorModel(bandwidth_hz=8e9))
    area_raw = np.sum(raw.values) * SP
    area_filtered = np.sum(filtered.values) * SP
    assert area_filtered == pytest.approx(area_raw, rel=1e-3)
    assert filtered.values.max() < raw.values.max()


def test_detect_zero_envelope():
    wf = SampledWaveform(SP, np.zeros(256, complex))
    trace = detect(wf, DetectorModel(bandwidth_hz=8e9))
    np.testing.assert_allclose(trace.values, 0.0, atol=1e-15)


def test_visibility_from_areas_basics():
    values = np.zeros(100)
    values[40:60] = 1.0
    bright = PowerTrace(SP, values)
    dark = PowerTrace(SP, np.zeros(100))
    window = (0.0, 100 * SP)
    assert visibility_from_areas(bright, dark, window) == pytest.approx(1.0)
    assert visibility_from_areas(bright, bright, window) == pytest.approx(0.0)
    with pytest.raises(UndefinedVisibilityError):
        visibility_from_areas(dark, dark, window)


def test_cw_powers_follow_two_port_fringe_law():
    # steady-state CW powers at phase phi reproduce (1 +- cos(phi))/2,
    # the same law the drift module uses with phi -> phi + k*dL
    from dlisim.drift import output_power

    cw = SampledWaveform(SP, np.ones(2000, complex))
    core = slice(100, 1900)
    for phi in (0.0, 0.4, np.pi / 2, 2.0, np.pi):
        plus, minus = delay_interfere_waveform(cw, 400e-12, phi)
        p_plus = float(np.mean(np.abs(plus.samples[core]) ** 2))
        p_minus = float(np.mean(np.abs(minus.samples[core]) ** 2))
        want_plus, want_minus = output_power(1.0, 1.0, 1550e-9, 0.12, 0.0, phi)
        assert p_plus == pytest.approx(want_plus, abs=1e-12)
        assert p_minus == pytest.approx(want_minus, abs=1e-12)


def test_split_imbalance_cw_fringe_contrast():
    # one imbalanced splitter: fringe contrast 2 sqrt(g (1-g))
    cw = SampledWaveform(SP, np.ones(4000, complex))
    g = 0.45
    core = slice(200, 3800)
    p_max, _ = delay_interfere_waveform(cw, 400e-12, 0.0, split_fraction=g)
    p_min, _ = delay_interfere_waveform(cw, 400e-12, np.pi, split_fraction=g)
    hi = float(np.mean(np.abs(p_max.samples[core]) ** 2))
    lo = float(np.mean(np.abs(p_min.samples[core]) ** 2))
    v = (hi - lo) / (hi + lo)
    assert v == pytest.approx(2 * np.sqrt(g * (1 - g)), abs=1e-9)
    assert v == pytest.approx(0.995, abs=5e-4)


def test_power_csv_format(tmp_path):
    trace = PowerTrace(SP, np.arange(4, dtype=float))
    path = tmp_path / "trace.csv"
    write_power_csv(trace, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "time_s,power_W"
    assert len(lines) == 5
    assert lines[1].startswith("0,")
