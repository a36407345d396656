import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from hydrolink.analysis import (
    LinkConfig,
    attenuation_profile,
    ber_sweep,
    default_source,
    discrete_ebn0,
    eye_diagram,
    predicted_ber,
    run_link,
    sensitivity_at,
    sensitivity_field,
    wilson_interval,
)
from hydrolink.array import SensorArray, build_dual_line_array, steering_vector
from hydrolink.errors import ConfigInvalid, EmptyGrid, LengthMismatch, PointInsideSource
from hydrolink.modem import BpskConfig
from hydrolink.physics import DipoleSource, FluidMedium, GridSpec, source_strength_amplitude

WATER = FluidMedium()


def _ber_oracle(config: LinkConfig) -> float:
    """Q(sqrt(2 Eb/N0)) from the sampled noise variance of D_k, written out longhand."""
    h = steering_vector(config.array, config.source).h
    p0 = source_strength_amplitude(config.medium, config.source)
    sigma = config.noise_sigma()
    m = config.modem
    t = np.arange(m.samples_per_symbol) / m.sample_rate
    c = np.sin(2 * np.pi * m.carrier_frequency * t)
    mean = p0 * np.sum(c * c) / m.sample_rate
    var = (sigma**2 / np.sum(h * h)) * np.sum(c * c) / m.sample_rate**2
    return float(stats.norm.sf(mean / math.sqrt(var)))


class TestRunLink:
    def test_noiseless_decision_levels(self):
        cfg = LinkConfig(n_bits=200, sigma=0.0)
        r = run_link(cfg)
        assert r.ber == 0
        p0 = r.source_strength
        expected = p0 * 0.05 / 2 * (2 * r.transmitted_bits.astype(float) - 1)
        np.testing.assert_allclose(r.decision_metrics, expected, atol=p0 * 1e-4)
        assert r.mean_input_snr_db is None

    def test_explicit_bits(self):
        cfg = LinkConfig(bits=(1, 0, 1, 1, 0), sigma=0.0)
        r = run_link(cfg)
        assert r.decoded_bits.tolist() == [1, 0, 1, 1, 0]

    def test_deterministic(self):
        cfg = LinkConfig(n_bits=500, seed=42)
        a, b = run_link(cfg, trial=3).to_dict(), run_link(cfg, trial=3).to_dict()
        assert a == b

    def test_trials_differ(self):
        cfg = LinkConfig(n_bits=200, snr_db=-30.0, seed=1)
        assert run_link(cfg, 0).to_dict() != run_link(cfg, 1).to_dict()

    def test_report_snrs(self):
        r = run_link(LinkConfig(n_bits=200, snr_db=-5.0))
        assert r.mean_input_snr_db == pytest.approx(-5.0, abs=1e-9)
        assert r.output_snr_db == pytest.approx(-5.0 + 10 * math.log10(24), abs=1e-9)
        assert r.empirical_gain_db == pytest.approx(13.8, abs=0.3)
        assert r.gamma == 2.0 and r.csr_class == "reliable"

    def test_waveform_stages(self):
        r = run_link(LinkConfig(n_bits=10), keep_waveforms=True)
        w = r.waveforms
        assert w["sensor"].shape == (24, 1000)
        assert w["beamformed"].shape == w["mixed"].shape == w["integrator"].shape == (1000,)
        # last integrator sample of each window is the decision value
        np.testing.assert_allclose(w["integrator"][99::100], r.decision_metrics, rtol=1e-12)

    def test_bit_count_validated(self):
        with pytest.raises(ConfigInvalid):
            LinkConfig(n_bits=0)

    def test_sigma_overrides_snr(self):
        assert LinkConfig(sigma=3.0).noise_sigma() == 3.0

    def test_source_too_close(self):
        cfg = LinkConfig(source=default_source(distance=0.005), n_bits=5)
        with pytest.raises(PointInsideSource):
            run_link(cfg)

    def test_steering_mismatch_degrades_output(self):
        base = LinkConfig(n_bits=10, sigma=0.0)
        off = replace(base, steering_offset=(0.05, 0.0, 0.0))
        a, b = run_link(base), run_link(off)
        assert not np.allclose(a.decision_metrics, b.decision_metrics)


class TestBerOracle:
    @pytest.mark.parametrize("target", [0.05, 0.02])
    def test_matches_q_function(self, target):
        x = stats.norm.isf(target) ** 2
        snr = 10 * math.log10(x / (2 * 24 * 50))
        cfg = LinkConfig(n_bits=20000, snr_db=snr, seed=13)
        assert _ber_oracle(cfg) == pytest.approx(target, rel=1e-9)
        assert predicted_ber(cfg) == pytest.approx(target, rel=1e-9)
        r = run_link(cfg)
        lo, hi = wilson_interval(r.n_errors, r.transmitted_bits.size)
        assert lo <= target <= hi

    def test_ebn0_for_one_percent(self):
        x = stats.norm.isf(0.01) ** 2
        cfg = LinkConfig(snr_db=10 * math.log10(x / (2 * 24 * 50)))
        assert 10 * math.log10(discrete_ebn0(cfg)) == pytest.approx(4.32, abs=0.01)


class TestSweep:
    def test_snr_monotone(self):
        base = LinkConfig(n_bits=1000, seed=3)
        rows = ber_sweep(base, "snr", [-34, -31, -28, -25, -22], trials=5)
        bers = [r.ber for r in rows]
        assert bers[0] > 0.05
        for a, b in zip(rows, rows[1:]):
            assert b.ber <= a.ber or b.ci_low <= a.ci_high

    def test_distance_noiseless(self):
        rows = ber_sweep(LinkConfig(n_bits=100, sigma=0.0), "distance", [0.05, 0.2, 0.5, 1.0])
        assert [r.ber for r in rows] == [0, 0, 0, 0]

    def test_distance_fixed_noise_degrades(self):
        base = LinkConfig(n_bits=500, snr_db=-20.0)
        rows = ber_sweep(base, "distance", [0.05, 0.3, 0.6, 0.9], trials=2)
        for a, b in zip(rows, rows[1:]):
            assert b.ber >= a.ber or b.ci_high >= a.ci_low
        assert rows[-1].ber > rows[0].ber

    def test_rate_with_actuator(self):
        base = LinkConfig(n_bits=1000, actuator=(40.0, 0.7))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            rows = ber_sweep(base, "rate", [20.0, 100.0])
        assert rows[0].ber == 0
        assert rows[1].ber > 0.1

    def test_ideal_switching_survives_fast_rate(self):
        # the ideal model has no mechanism for the fast-rate failure
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            rows = ber_sweep(LinkConfig(n_bits=500, sigma=0.0), "rate", [100.0])
        assert rows[0].ber == 0

    def test_ci_contains_estimate(self):
        rows = ber_sweep(LinkConfig(n_bits=300, snr_db=-28.0), "snr", [-28.0], trials=2)
        r = rows[0]
        assert r.ci_low <= r.ber <= r.ci_high and r.bits == 600

    def test_bad_variable(self):
        with pytest.raises(ConfigInvalid):
            ber_sweep(LinkConfig(), "temperature", [1.0])


def test_wilson_zero_errors():
    lo, hi = wilson_interval(0, 10000)
    assert lo == 0.0
    # z^2 / (n + z^2)
    z2 = stats.norm.isf(0.025) ** 2
    assert hi == pytest.approx(z2 / (10000 + z2), rel=1e-9)


class TestAttenuation:
    src = DipoleSource(0.125, 0.015, 40.0, (0.1, -0.2, 0.05), (1, 0, 0))

    def test_on_axis_slope(self):
        prof = attenuation_profile(WATER, self.src, (1, 0, 0), 0.25, 12.5, 80)
        assert abs(prof.slope + 2) < 1e-6
        assert not prof.nodal

    def test_nodal_ray(self):
        prof = attenuation_profile(WATER, self.src, (0, 1, 0), 0.25, 1.0)
        assert prof.nodal and prof.slope is None
        assert not prof.amplitude.any()

    def test_diagonal_ray(self):
        on = attenuation_profile(WATER, self.src, (1, 0, 0), 0.2, 2.0, 30)
        diag = attenuation_profile(WATER, self.src, (1, 1, 0), 0.2, 2.0, 30)
        assert abs(diag.slope + 2) < 1e-6
        np.testing.assert_allclose(diag.amplitude / on.amplitude, math.cos(math.pi / 4),
                                   rtol=1e-12)

    def test_range_outside_source(self):
        with pytest.raises(ConfigInvalid):
            attenuation_profile(WATER, self.src, (1, 0, 0), 0.1, 1.0)


class TestSensitivity:
    def test_single_sensor(self):
        arr = SensorArray([[0.0, 0.0, 0.0]])
        assert sensitivity_at(arr, (0.1, 0, 0)) == pytest.approx(100.0, rel=1e-12)

    def test_nodal_probe(self):
        arr = SensorArray([[0, 0, 0], [0, 0.1, 0], [0, 0, 0.2]])
        assert sensitivity_at(arr, (0, 0.5, 0.3)) == 0.0

    def test_anisotropy(self):
        arr = build_dual_line_array()
        assert sensitivity_at(arr, (0.25, 0, 0)) > sensitivity_at(arr, (0, 0.25, 0))

    def test_symmetry_exact(self):
        arr = build_dual_line_array()
        sg = sensitivity_field(arr, GridSpec.cube(0.5, 16))
        s = sg.values
        assert np.array_equal(sg.valid, sg.valid[::-1, :, :])
        v = sg.valid
        assert np.array_equal(s[v], s[::-1, :, :][v])
        assert np.array_equal(s[v], s[:, ::-1, :][v])

    def test_thresholds(self):
        sg = sensitivity_field(build_dual_line_array(), GridSpec.cube(0.5, 12))
        assert sg.thresholds["0.6"] == pytest.approx(0.6 * sg.max_value)
        assert sg.thresholds["0.3"] == pytest.approx(0.3 * sg.max_value)
        assert np.nanmax(sg.values) == sg.max_value
        assert np.all(sg.values[sg.valid] >= 0)

    def test_empty(self):
        with pytest.raises(EmptyGrid):
            sensitivity_field(build_dual_line_array(), GridSpec.cube(0.05, 4))


class TestEye:
    def _link(self, **kw):
        cfg = LinkConfig(n_bits=300, **kw)
        r = run_link(cfg, keep_waveforms=True)
        m = cfg.modem
        demod = BpskConfig(m.bit_rate, m.carrier_frequency, m.sample_rate, r.source_strength)
        return r, demod

    def test_noiseless_levels(self):
        r, demod = self._link(sigma=0.0)
        eye = eye_diagram(r.waveforms["beamformed"], demod, r.transmitted_bits, 200,
                          channel_sign=-1.0)
        assert eye.eye_height == pytest.approx(2 * r.source_strength, rel=0.02)
        assert eye.traces.shape == (200, 200)

    def test_open_at_operating_point(self):
        r, demod = self._link(snr_db=-5.0)
        eye = eye_diagram(r.waveforms["beamformed"], demod, r.transmitted_bits, 200,
                          channel_sign=-1.0)
        assert eye.normalized_eye_height >= 0.5

    def test_pure_noise_closed(self):
        rng = np.random.default_rng(0)
        demod = BpskConfig(20.0, 40.0, 2000.0, 1.0)
        bits = rng.integers(0, 2, 300)
        eye = eye_diagram(rng.normal(size=30000), demod, bits, 200)
        assert eye.eye_height <= 0

    def test_requires_whole_symbols(self):
        demod = BpskConfig(20.0, 40.0, 2000.0, 1.0)
        with pytest.raises(LengthMismatch):
            eye_diagram(np.zeros(250), demod, [0, 1], 10)
        with pytest.raises(LengthMismatch):
            eye_diagram(np.zeros(200), demod, [0, 1], 10)
