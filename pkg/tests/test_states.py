import numpy as np
import pytest

from dlisim.errors import DomainError
from dlisim.states import (
    PhotonicState,
    dft_oracle,
    inner_product,
    make_frequency_state,
    make_time_state,
    random_state,
)


def test_time_state_basis_vectors():
    s = make_time_state(2, 0)
    np.testing.assert_allclose(s.amplitudes, [1, 0])
    s = make_time_state(4, 3)
    np.testing.assert_allclose(s.amplitudes, [0, 0, 0, 1])
    assert s.norm == pytest.approx(1.0)


def test_time_state_index_out_of_range():
    with pytest.raises(DomainError):
        make_time_state(4, 4)
    with pytest.raises(DomainError):
        make_time_state(4, -1)


def test_non_power_of_two_dimension_rejected():
    for d in (0, 1, 3, 6, 12):
        with pytest.raises(DomainError):
            make_time_state(d, 0)
        with pytest.raises(DomainError):
            make_frequency_state(d, 0)


def test_frequency_state_d2():
    s = make_frequency_state(2, 1)
    np.testing.assert_allclose(s.amplitudes, np.array([1, -1]) / np.sqrt(2),
                               atol=1e-15)


def test_frequency_state_d4():
    np.testing.assert_allclose(make_frequency_state(4, 0).amplitudes,
                               np.full(4, 0.5), atol=1e-15)
    np.testing.assert_allclose(make_frequency_state(4, 1).amplitudes,
                               np.array([1, 1j, -1, -1j]) / 2, atol=1e-15)


def test_frequency_state_index_out_of_range():
    with pytest.raises(DomainError):
        make_frequency_state(4, 4)


def test_inner_product_orthonormality():
    d = 4
    for m in range(d):
        for n in range(d):
            ip = inner_product(make_frequency_state(d, m), make_frequency_state(d, n))
            assert ip == pytest.approx(1.0 if m == n else 0.0, abs=1e-12)


def test_inner_product_conjugate_linear_in_first_argument():
    rng = np.random.default_rng(7)
    a = random_state(4, rng)
    b = random_state(4, rng)
    assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)))


def test_inner_product_dimension_mismatch():
    with pytest.raises(DomainError):
        inner_product(make_time_state(2, 0), make_time_state(4, 0))
    longer = PhotonicState(4, 400e-12, np.array([1, 0, 0, 0, 0], complex))
    with pytest.raises(DomainError):
        inner_product(make_time_state(4, 0), longer)


def test_mutual_unbiasedness_all_pairs():
    for d in (2, 4, 8, 16):
        for m in range(d):
            t = make_time_state(d, m)
            for n in range(d):
                f = make_frequency_state(d, n)
                overlap = abs(inner_product(t, f)) ** 2
                assert overlap == pytest.approx(1.0 / d, abs=1e-12)


def test_oracle_on_frequency_states_gives_unit_vectors():
    for d in (2, 4, 8, 16):
        for n in range(d):
            c = dft_oracle(make_frequency_state(d, n))
            expected = np.zeros(d)
            expected[n] = 1.0
            np.testing.assert_allclose(c, expected, atol=1e-12)


def test_oracle_on_time_state():
    c = dft_oracle(make_time_state(4, 0))
    np.testing.assert_allclose(c, np.full(4, 0.5), atol=1e-12)


def test_oracle_rejects_spread_state():
    amps = np.zeros(5, complex)
    amps[4] = 1.0
    spread = PhotonicState(4, 400e-12, amps)
    with pytest.raises(DomainError):
        dft_oracle(spread)


def test_oracle_preserves_norm_on_random_states():
    rng = np.random.default_rng(12)
    for d in (2, 4, 8):
        for _ in range(20):
            s = random_state(d, rng)
            c = dft_oracle(s)
            assert np.sum(np.abs(c) ** 2) == pytest.approx(s.norm, abs=1e-12)


def test_state_norm_guard():
    with pytest.raises(DomainError):
        PhotonicState(2, 400e-12, np.array([1.0, 1.0], complex))


def test_amplitudes_are_read_only():
    s = make_time_state(2, 0)
    with pytest.raises(ValueError):
        s.amplitudes[0] = 0.0
