import math

import numpy as np
import pytest

from dlisim.errors import DomainError, UndefinedVisibilityError
from dlisim.optics import (
    InterferometerSpec,
    apply_interferometer,
    build_cascade,
    central_bin_visibility,
    measure_cascade,
    with_phase_offsets,
)
from dlisim.states import (
    dft_oracle,
    make_frequency_state,
    make_time_state,
    random_state,
)

TAU = 400e-12


def test_interferometer_spec_invariants():
    spec = InterferometerSpec.from_bins(1, TAU)
    assert spec.fsr_hz == pytest.approx(2.5e9)
    assert spec.nominal_path_m == pytest.approx(0.1199169832)
    spec2 = InterferometerSpec.from_bins(2, TAU)
    assert spec2.fsr_hz == pytest.approx(1.25e9)
    with pytest.raises(DomainError):
        InterferometerSpec.from_bins(0, TAU)
    with pytest.raises(DomainError):
        InterferometerSpec.from_bins(1, TAU, alpha=1.5)
    with pytest.raises(DomainError):
        InterferometerSpec(1, 0.0, 0.12, 2.5e9)  # FSR does not match path


def test_single_interferometer_on_f0_d2():
    plus, minus = apply_interferometer(
        make_frequency_state(2, 0), InterferometerSpec.from_bins(1, TAU))
    np.testing.assert_allclose(plus.probabilities(), [1 / 8, 1 / 2, 1 / 8],
                               atol=1e-15)
    np.testing.assert_allclose(minus.probabilities(), [1 / 8, 0, 1 / 8],
                               atol=1e-15)


def test_single_interferometer_on_f1_d2_reversed():
    plus, minus = apply_interferometer(
        make_frequency_state(2, 1), InterferometerSpec.from_bins(1, TAU))
    assert plus.probabilities()[1] == pytest.approx(0.0, abs=1e-15)
    assert minus.probabilities()[1] == pytest.approx(0.5)


def test_single_interferometer_on_f0_d4_root_delay():
    plus, _ = apply_interferometer(
        make_frequency_state(4, 0), InterferometerSpec.from_bins(2, TAU))
    np.testing.assert_allclose(
        plus.probabilities(),
        [1 / 16, 1 / 16, 1 / 4, 1 / 4, 1 / 16, 1 / 16], atol=1e-15)


def test_energy_conservation_random_states():
    rng = np.random.default_rng(5)
    for d in (2, 4, 8):
        spec = InterferometerSpec.from_bins(d // 2, TAU)
        for _ in range(20):
            s = random_state(d, rng)
            plus, minus = apply_interferometer(s, spec)
            assert plus.norm + minus.norm == pytest.approx(s.norm, abs=1e-12)


def test_energy_conservation_with_imbalance():
    rng = np.random.default_rng(6)
    spec = InterferometerSpec.from_bins(1, TAU, split_fraction=0.3)
    s = random_state(4, rng)
    plus, minus = apply_interferometer(s, spec)
    assert plus.norm + minus.norm == pytest.approx(s.norm, abs=1e-12)


def test_insertion_loss_scales_total():
    spec = InterferometerSpec.from_bins(1, TAU, alpha=0.8)
    plus, minus = apply_interferometer(make_frequency_state(2, 0), spec)
    assert plus.norm + minus.norm == pytest.approx(0.8, abs=1e-12)


def test_build_cascade_d2():
    cascade = build_cascade(2, TAU)
    assert len(cascade.interferometers) == 1
    assert cascade.interferometers[0].delay_bins == 1
    assert cascade.interferometers[0].phase_rad == 0.0
    assert cascade.port_map == (0, 1)


def test_build_cascade_d4_layout():
    cascade = build_cascade(4, TAU)
    delays = [s.delay_bins for s in cascade.interferometers]
    phases = [s.phase_rad for s in cascade.interferometers]
    assert delays == [2, 1, 1]
    assert phases == pytest.approx([0.0, 0.0, math.pi / 2])
    assert cascade.port_map == (0, 2, 1, 3)


def test_build_cascade_d8_third_layer_phases():
    cascade = build_cascade(8, TAU)
    phases = [s.phase_rad for s in cascade.interferometers[3:]]
    assert phases == pytest.approx(
        [0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4])
    assert cascade.port_map == (0, 4, 2, 6, 1, 5, 3, 7)


def test_build_cascade_rejects_bad_dimension():
    for d in (0, 1, 3, 6):
        with pytest.raises(DomainError):
            build_cascade(d, TAU)


def test_measure_f0_d4_bright_port():
    cascade = build_cascade(4, TAU)
    outcome = measure_cascade(make_frequency_state(4, 0, TAU), cascade)
    central = outcome.central_probabilities()
    assert outcome.central_bin == 3
    assert outcome.probabilities.shape == (4, 7)
    assert central[0] == pytest.approx(0.25, abs=1e-12)
    np.testing.assert_allclose(central[1:], 0.0, atol=1e-12)


def test_measure_time_state_uniform_central_bins():
    cascade = build_cascade(4, TAU)
    outcome = measure_cascade(make_time_state(4, 0, TAU), cascade)
    np.testing.assert_allclose(outcome.central_probabilities(),
                               np.full(4, 1 / 16), atol=1e-12)


def test_measure_f1_d2():
    cascade = build_cascade(2, TAU)
    outcome = measure_cascade(make_frequency_state(2, 1, TAU), cascade)
    central = outcome.central_probabilities()
    assert central[1] == pytest.approx(0.5, abs=1e-12)
    assert central[0] == pytest.approx(0.0, abs=1e-12)


def test_measure_rejects_dimension_mismatch():
    cascade = build_cascade(4, TAU)
    with pytest.raises(DomainError):
        measure_cascade(make_frequency_state(2, 0, TAU), cascade)


def test_central_bins_match_oracle_for_random_states():
    rng = np.random.default_rng(42)
    for d in (2, 4, 8):
        cascade = build_cascade(d, TAU)
        for _ in range(100):
            s = random_state(d, rng, TAU)
            outcome = measure_cascade(s, cascade)
            expected = np.abs(dft_oracle(s)) ** 2 / d
            np.testing.assert_allclose(outcome.central_probabilities(),
                                       expected, atol=1e-10)
            assert outcome.total_probability == pytest.approx(s.norm, abs=1e-12)


def test_outermost_bins_never_interfere():
    # First and last output bins only see the first/last input bin's power.
    rng = np.random.default_rng(9)
    d = 4
    cascade = build_cascade(d, TAU)
    for _ in range(25):
        s = random_state(d, rng, TAU)
        outcome = measure_cascade(s, cascade)
        p_first = abs(s.amplitudes[0]) ** 2
        p_last = abs(s.amplitudes[d - 1]) ** 2
        # Per port the direct-direct path carries the product of the split
        # fractions (1/2 per layer, squared amplitude), i.e. 1/4 per layer.
        weight = (1 / 4) ** cascade.depth
        np.testing.assert_allclose(outcome.probabilities[:, 0],
                                   p_first * weight, atol=1e-12)
        np.testing.assert_allclose(outcome.probabilities[:, -1],
                                   p_last * weight, atol=1e-12)


def test_visibility_ideal_and_detuned():
    cascade = build_cascade(4, TAU)
    for n in range(4):
        outcome = measure_cascade(make_frequency_state(4, n, TAU), cascade)
        assert central_bin_visibility(outcome, n) == pytest.approx(1.0, abs=1e-9)
    outcome = measure_cascade(make_time_state(4, 0, TAU), cascade)
    assert central_bin_visibility(outcome, 0) == pytest.approx(-0.5, abs=1e-12)


def test_visibility_port_swap_under_pi_error():
    cascade = build_cascade(2, TAU)
    flipped = with_phase_offsets(cascade, [math.pi])
    outcome = measure_cascade(make_frequency_state(2, 0, TAU), flipped)
    assert central_bin_visibility(outcome, 0) == pytest.approx(-1.0, abs=1e-12)


def test_visibility_undefined_without_central_power():
    cascade = build_cascade(2, TAU)
    state = make_time_state(2, 0, TAU)
    outcome = measure_cascade(state, cascade)
    assert central_bin_visibility(outcome, 0) == pytest.approx(0.0, abs=1e-12)
    # A single-bin state at bin 0 spreads its central-bin power evenly, so
    # build an outcome with empty central bins via a detuned interferometer
    # is not possible; instead check the error path directly.
    from dlisim.optics import PortOutcome

    empty = PortOutcome(np.zeros((2, 3)), central_bin=1, bin_width_s=TAU)
    with pytest.raises(UndefinedVisibilityError):
        central_bin_visibility(empty, 0)


def test_phase_offsets_wrong_length():
    cascade = build_cascade(4, TAU)
    with pytest.raises(DomainError):
        with_phase_offsets(cascade, [0.1])
