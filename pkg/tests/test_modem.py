import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hydrolink.errors import ConfigInvalid, LengthMismatch
from hydrolink.modem import (
    BpskConfig,
    CsrClass,
    actuator_filter,
    coherent_demodulate,
    cycle_per_symbol,
    map_bits,
    modulate,
)

REF_MODEM = BpskConfig(20.0, 40.0, 2000.0, 1.0)


def test_map_bits():
    assert map_bits([1, 0, 1]).tolist() == [1, -1, 1]
    assert map_bits([]).tolist() == []
    assert map_bits([0] * 7).tolist() == [-1] * 7


def test_map_bits_rejects_non_binary():
    with pytest.raises(ConfigInvalid):
        map_bits([0, 2])


class TestModulate:
    def test_single_symbol(self):
        w = modulate([1], REF_MODEM)
        assert w.size == 100
        t = np.arange(100) / 2000.0
        np.testing.assert_allclose(w, np.sin(2 * np.pi * 40 * t), atol=1e-15)
        assert w.max() == pytest.approx(1.0, abs=0.01)

    def test_antipodal(self):
        assert np.array_equal(modulate([0], REF_MODEM), -modulate([1], REF_MODEM))

    def test_starts_at_zero(self):
        assert modulate([1, 0, 1], REF_MODEM)[0] == 0.0

    def test_carrier_phase_is_global(self):
        w = modulate([1, 1, 0], REF_MODEM)
        t = np.arange(300) / 2000.0
        d = np.repeat([1, 1, -1], 100)
        np.testing.assert_allclose(w, d * np.sin(2 * np.pi * 40 * t), atol=1e-15)

    def test_length(self):
        assert modulate([1, 0, 0, 1, 1], BpskConfig(40.0, 40.0, 2000.0)).size == 5 * 50


class TestConfig:
    def test_sample_rate_margin(self):
        with pytest.raises(ConfigInvalid):
            BpskConfig(20.0, 40.0, 399.0)

    def test_integer_samples_per_symbol(self):
        with pytest.raises(ConfigInvalid):
            BpskConfig(30.0, 40.0, 2000.0)

    def test_fractional_gamma_warns(self):
        with pytest.warns(RuntimeWarning):
            BpskConfig(100.0, 40.0, 2000.0)

    def test_integer_gamma_silent(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            BpskConfig(20.0, 40.0, 2000.0)


@pytest.mark.parametrize(
    "rb, gamma, cls",
    [(20.0, 2.0, CsrClass.RELIABLE), (100.0, 0.4, CsrClass.INFEASIBLE),
     (40.0, 1.0, CsrClass.RELIABLE), (25.0, 1.6, CsrClass.FRACTIONAL)],
)
def test_cycle_per_symbol(rb, gamma, cls):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = BpskConfig(rb, 40.0, 2000.0)
    g, c = cycle_per_symbol(cfg)
    assert g == pytest.approx(gamma)
    assert c is cls


def _second_order_gain_db(f, fn, zeta):
    r = f / fn
    return -10 * math.log10((1 - r * r) ** 2 + (2 * zeta * r) ** 2)


class TestActuator:
    fs = 2000.0

    def _steady_amplitude(self, f, fn, zeta, cycles=200):
        n = int(cycles * self.fs / f)
        t = np.arange(n) / self.fs
        out = actuator_filter(np.sin(2 * np.pi * f * t), fn, zeta, self.fs)
        return np.max(np.abs(out[n // 2:]))

    def test_unity_dc_gain(self):
        out = actuator_filter(np.full(4000, 3.5), 40.0, 0.7, self.fs)
        assert abs(out[-1] - 3.5) < 1e-6

    def test_passband(self):
        assert self._steady_amplitude(1.0, 40.0, 0.7, cycles=20) == pytest.approx(1.0, rel=0.01)

    def test_stopband(self):
        # continuous prototype at ten times the natural frequency
        assert _second_order_gain_db(100.0, 10.0, 0.7) < -30
        amp = self._steady_amplitude(100.0, 10.0, 0.7)
        assert 20 * math.log10(amp) <= -30

    @pytest.mark.parametrize("fn, zeta", [(0, 0.7), (40, 0), (-1, 1)])
    def test_rejects_bad_parameters(self, fn, zeta):
        with pytest.raises(ConfigInvalid):
            actuator_filter(np.zeros(10), fn, zeta, self.fs)


class TestDemodulate:
    def test_closed_form_decision_value(self):
        d = coherent_demodulate(modulate([1], REF_MODEM), REF_MODEM)
        assert d.metrics[0] == pytest.approx(0.025, abs=1e-4)
        assert d[0].bit == 1
        assert d[0].instant == pytest.approx(0.05)

    def test_physical_sign_convention(self):
        # channel sign not corrected: source strength is -P0 sin
        p0 = 925.28
        d = coherent_demodulate(-p0 * modulate([1], REF_MODEM), REF_MODEM)
        assert d.metrics[0] == pytest.approx(-p0 * 0.05 / 2, rel=1e-6)
        assert d.bits[0] == 0
        assert coherent_demodulate(p0 * modulate([1], REF_MODEM), REF_MODEM).bits[0] == 1

    def test_zero_input_decodes_zero(self):
        d = coherent_demodulate(np.zeros(500), REF_MODEM)
        assert np.all(d.metrics == 0)
        assert d.bits.tolist() == [0] * 5

    def test_partial_symbol_rejected(self):
        with pytest.raises(LengthMismatch):
            coherent_demodulate(np.zeros(150), REF_MODEM)

    def test_records(self):
        recs = list(coherent_demodulate(modulate([1, 0], REF_MODEM), REF_MODEM))
        assert [r.bit for r in recs] == [1, 0]
        assert all((r.bit == 1) == (r.metric > 0) for r in recs)


GAMMA_CONFIGS = {g: BpskConfig(40.0 / g, 40.0, 2000.0) for g in (1, 2, 4)}
bit_lists = st.lists(st.integers(0, 1), min_size=1, max_size=40)


@given(bits=bit_lists, gamma=st.sampled_from([1, 2, 4]),
       amp=st.floats(1e-3, 1e4))
def test_noiseless_loopback(bits, gamma, amp):
    cfg = GAMMA_CONFIGS[gamma]
    received = -amp * modulate(bits, cfg)
    decoded = coherent_demodulate(-1.0 * received, cfg).bits
    assert decoded.tolist() == bits


@given(bits=bit_lists, gamma=st.sampled_from([1, 2, 4]))
def test_antipodal_flip(bits, gamma):
    cfg = GAMMA_CONFIGS[gamma]
    y = modulate(bits, cfg)
    a = coherent_demodulate(y, cfg).bits
    b = coherent_demodulate(-y, cfg).bits
    assert np.all(a != b)


@given(bits=bit_lists, gamma=st.sampled_from([1, 2, 4]), amp=st.floats(0.01, 100))
def test_closed_form_bound(bits, gamma, amp):
    cfg = BpskConfig(40.0 / gamma, 40.0, 2000.0, amp)
    d = coherent_demodulate(modulate(bits, cfg), cfg).metrics
    ts = cfg.symbol_period
    bound = amp * ts * (1 / cfg.carrier_frequency) / cfg.samples_per_symbol
    assert np.all(np.abs(d - amp * map_bits(bits) * ts / 2) <= bound)


@given(bits=bit_lists, alpha=st.floats(-1e3, 1e3).filter(lambda a: a != 0))
@settings(max_examples=50)
def test_linearity(bits, alpha):
    y = modulate(bits, REF_MODEM) + 0.1
    d = coherent_demodulate(y, REF_MODEM).metrics
    np.testing.assert_allclose(coherent_demodulate(alpha * y, REF_MODEM).metrics, alpha * d,
                               rtol=1e-12, atol=1e-15 * abs(alpha))
    assert np.array_equal(coherent_demodulate(4.0 * y, REF_MODEM).metrics, 4.0 * d)
