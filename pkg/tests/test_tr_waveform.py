import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from aggsim.tr_waveform import (AggregateTransmission, autocorrelation, default_nfft, localization_bound,
                                peak_power, peak_power_bound, receive, received_energy,
                                scale_to_localization, space_frequency_localization,
                                time_reverse_conjugate, tr_transmission, transmission_energy)
from oracles import autocorrelation_loop

cplx = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)
taps = arrays(np.complex128, st.integers(1, 12), elements=cplx).filter(lambda h: np.sum(np.abs(h)) > 1e-3)


def test_reverse_conjugate_examples():
    np.testing.assert_array_equal(time_reverse_conjugate([1]), [1])
    np.testing.assert_array_equal(time_reverse_conjugate([1, 1j]), [-1j, 1])
    with pytest.raises(ValueError):
        time_reverse_conjugate([])


@given(taps)
def test_reverse_conjugate_involution_and_energy(h):
    np.testing.assert_array_equal(time_reverse_conjugate(time_reverse_conjugate(h)), h)
    assert np.sum(np.abs(time_reverse_conjugate(h)) ** 2) == pytest.approx(np.sum(np.abs(h) ** 2))


def test_receive_examples():
    np.testing.assert_allclose(receive(tr_transmission([[1.0]]), [[1.0]]), [1.0])
    np.testing.assert_allclose(receive(tr_transmission([[1.0, 0.5]]), [[1.0, 0.5]]), [0.5, 1.25, 0.5])
    tx = tr_transmission([[1.0], [0.0, 1.0]])
    r = receive(tx, [[1.0], [0.0, 1.0]])
    assert r[tx.t0] == pytest.approx(2.0)
    with pytest.raises(ValueError):
        receive(tx, [[1.0]])


@given(st.lists(taps, min_size=1, max_size=4))
def test_tr_output_is_sum_of_autocorrelations(hs):
    tx = tr_transmission(hs)
    r = receive(tx, hs)
    expect = np.zeros(r.size, dtype=complex)
    for h in hs:
        ac = autocorrelation_loop(h)
        start = tx.t0 - (len(h) - 1)
        expect[start:start + ac.size] += ac
    np.testing.assert_allclose(r, expect, atol=1e-9)
    np.testing.assert_allclose(autocorrelation(hs[0]), autocorrelation_loop(hs[0]), atol=1e-9)


@given(st.lists(taps, min_size=1, max_size=3), st.integers(0, 2 ** 32 - 1))
def test_receive_is_linear(hs, seed):
    rng = np.random.default_rng(seed)
    lens = [len(h) + 2 for h in hs]
    a = AggregateTransmission([rng.standard_normal(k) + 1j * rng.standard_normal(k) for k in lens])
    b = AggregateTransmission([rng.standard_normal(k) for k in lens])
    both = AggregateTransmission([2 * x - 3j * y for x, y in zip(a.signals, b.signals)])
    np.testing.assert_allclose(receive(both, hs), 2 * receive(a, hs) - 3j * receive(b, hs), atol=1e-9)


def test_zero_signal():
    tx = AggregateTransmission([np.zeros(3)])
    assert peak_power(tx, [[1.0, 2.0]]) == 0.0
    assert transmission_energy(tx) == 0.0


@given(st.lists(taps, min_size=1, max_size=4), st.floats(0.1, 10))
def test_tr_attains_peak_bound(hs, e_max):
    tx = tr_transmission(hs, energy=e_max)
    assert transmission_energy(tx) == pytest.approx(e_max)
    assert peak_power(tx, hs) == pytest.approx(peak_power_bound(hs, e_max), rel=1e-9)


@given(st.lists(taps, min_size=1, max_size=4), st.integers(0, 2 ** 32 - 1))
def test_random_signals_below_peak_bound(hs, seed):
    rng = np.random.default_rng(seed)
    tx = tr_transmission(hs)
    cand = AggregateTransmission([rng.standard_normal(s.size) + 1j * rng.standard_normal(s.size)
                                  for s in tx.signals], tx.t0)
    cand = cand.scaled(np.sqrt(1.0 / transmission_energy(cand)))
    assert peak_power(cand, hs) <= (1 + 1e-9) * peak_power_bound(hs, 1.0)


def test_matched_filter_equivalence():
    hs = [np.array([1.0, 2j, -0.5]), np.array([0.3 - 1j])]
    tx = tr_transmission(hs)
    inner = sum(np.vdot(h, h) for h in hs)
    assert receive(tx, hs)[tx.t0] == pytest.approx(inner)


def test_flat_spectrum_localization():
    # a single tap has a flat spectrum: L_s = E^2 / B
    for b in (1.0, 4.0):
        tx = AggregateTransmission([np.array([3.0])])
        assert space_frequency_localization(tx, nfft=8, bandwidth=b) == pytest.approx(81.0 / b)


@given(st.lists(taps, min_size=1, max_size=4), st.floats(0.5, 4))
def test_localization_floor(hs, b):
    tx = tr_transmission(hs)
    nfft = default_nfft(tx, hs)
    es = transmission_energy(tx)
    assert space_frequency_localization(tx, nfft, b) >= es ** 2 / b * (1 - 1e-9)


@given(st.lists(taps, min_size=1, max_size=4), st.floats(0.1, 10), st.integers(0, 2 ** 32 - 1))
def test_localization_constrained_optimality(hs, l_max, seed):
    tx = tr_transmission(hs)
    nfft = default_nfft(tx, hs)
    bound = localization_bound(hs, l_max, nfft)
    tr = scale_to_localization(tx, l_max, nfft)
    assert space_frequency_localization(tr, nfft) == pytest.approx(l_max, rel=1e-9)
    assert received_energy(tr, hs, nfft) == pytest.approx(bound, rel=1e-6)
    rng = np.random.default_rng(seed)
    cand = AggregateTransmission([rng.standard_normal(s.size) + 1j * rng.standard_normal(s.size)
                                  for s in tx.signals], tx.t0)
    cand = scale_to_localization(cand, l_max, nfft)
    assert received_energy(cand, hs, nfft) <= bound * (1 + 1e-9)


def test_received_energy_equals_time_domain_energy():
    hs = [np.array([1.0, 0.5j]), np.array([0.2, -1.0, 0.3])]
    tx = tr_transmission(hs)
    r = receive(tx, hs)
    assert received_energy(tx, hs) == pytest.approx(np.sum(np.abs(r) ** 2))
