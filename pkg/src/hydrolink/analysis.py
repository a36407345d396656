"""End-to-end link simulation and the figure-level analyses built on it.

``run_link`` chains modulation, the optional actuator model, array
reception, beamforming and integrate-and-dump decoding. The remaining
functions sweep it, fold it into an eye diagram, or evaluate the channel
geometry (attenuation along a ray, array sensitivity volume).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .array import (
    NoiseModel,
    SensorArray,
    build_dual_line_array,
    calibrate_noise_for_snr,
    per_sensor_snr,
    receive,
    steering_vector,
)
from .beamformer import array_gain_report, beamform
from .errors import ConfigInvalid, EmptyGrid, LengthMismatch
from .modem import (
    BpskConfig,
    actuator_filter,
    actuator_response,
    coherent_demodulate,
    cycle_per_symbol,
    map_bits,
)
from .physics import (
    DipoleSource,
    FluidMedium,
    GridSpec,
    geometric_factor_array,
    source_strength_amplitude,
)
from .seeding import BITS_STREAM, derive_rng

__all__ = [
    "DEFAULTS",
    "default_source",
    "LinkConfig",
    "LinkReport",
    "run_link",
    "discrete_ebn0",
    "predicted_ber",
    "wilson_interval",
    "SweepRow",
    "ber_sweep",
    "AttenuationProfile",
    "attenuation_profile",
    "SensitivityGrid",
    "sensitivity_at",
    "sensitivity_field",
    "EyeDiagramData",
    "baseband",
    "eye_diagram",
]

# Simulation parameters of the reference operating point.
DEFAULTS = {
    "density": 1000.0,
    "radius": 0.125,
    "amplitude": 0.015,
    "carrier_frequency": 40.0,
    "bit_rate": 20.0,
    "sample_rate": 2000.0,
    "n_sensors": 24,
    "distance": 0.07,
}

SENSITIVITY_LEVELS = (0.6, 0.3)


def default_source(distance: float = DEFAULTS["distance"], radius: float = DEFAULTS["radius"],
                   amplitude: float = DEFAULTS["amplitude"],
                   carrier_frequency: float = DEFAULTS["carrier_frequency"],
                   vibration_axis=(1.0, 0.0, 0.0)) -> DipoleSource:
    """Source beside the array, ``distance`` from its surface to the array centre.

    The centre sits on the +y axis at ``radius + distance`` so every sensor
    of the default dual-line array is outside the sphere.
    """
    if not (distance > 0 and math.isfinite(distance)):
        raise ConfigInvalid(f"distance must be > 0, got {distance}", field="distance")
    return DipoleSource(radius, amplitude, carrier_frequency,
                        (0.0, radius + distance, 0.0), vibration_axis)


@dataclass(frozen=True)
class LinkConfig:
    """Everything needed to run one link simulation.

    The noise level is ``sigma`` (per-sensor std, Pa) when set, otherwise
    the one giving a mean per-sensor input SNR of ``snr_db``. ``bits``
    overrides the seeded random payload of ``n_bits`` bits.
    """

    medium: FluidMedium = field(default_factory=FluidMedium)
    source: DipoleSource = field(default_factory=default_source)
    array: SensorArray = field(default_factory=build_dual_line_array)
    modem: BpskConfig = field(default_factory=BpskConfig)
    noise_kind: str = "white"
    sigma: float | None = None
    snr_db: float | None = -5.0
    f_low: float = 1.0
    n_bits: int = 1000
    seed: int = 0
    actuator: tuple[float, float] | None = None
    steering_offset: tuple[float, float, float] | None = None
    channel_sign: float = -1.0
    bits: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.sigma is None and self.snr_db is None:
            raise ConfigInvalid("either sigma or snr_db must be set", field="snr_db")
        if self.bits is None and (int(self.n_bits) != self.n_bits or self.n_bits < 1):
            raise ConfigInvalid(f"bit count must be >= 1, got {self.n_bits}", field="n_bits")
        if self.bits is not None and len(self.bits) < 1:
            raise ConfigInvalid("bit sequence must not be empty", field="bits")
        if abs(self.modem.carrier_frequency - self.source.carrier_frequency) > 1e-12:
            raise ConfigInvalid("modem and source carrier frequencies differ",
                                field="carrier_frequency")
        if self.channel_sign not in (1.0, -1.0):
            raise ConfigInvalid("channel_sign must be +1 or -1", field="channel_sign")
        if self.actuator is not None:
            fn, zeta = self.actuator
            if not (fn > 0 and zeta > 0):
                raise ConfigInvalid("actuator natural frequency and damping must be > 0",
                                    field="actuator")
        # fail early on bad noise settings
        NoiseModel(self.noise_kind, self.sigma or 0.0, self.f_low, self.seed)

    @property
    def bit_count(self) -> int:
        return len(self.bits) if self.bits is not None else int(self.n_bits)

    def noise_sigma(self) -> float:
        if self.sigma is not None:
            return float(self.sigma)
        h = steering_vector(self.array, self.source)
        return calibrate_noise_for_snr(h, source_strength_amplitude(self.medium, self.source),
                                       self.snr_db)

    def with_fixed_sigma(self) -> "LinkConfig":
        """Same link with the noise level frozen at its current absolute value."""
        return replace(self, sigma=self.noise_sigma(), snr_db=None)


@dataclass
class LinkReport:
    transmitted_bits: np.ndarray
    decoded_bits: np.ndarray
    n_errors: int
    ber: float
    sigma: float
    source_strength: float
    mean_input_snr_db: float | None
    output_snr_db: float | None
    array_gain_db: float
    empirical_gain_db: float | None
    gamma: float
    csr_class: str
    decision_metrics: np.ndarray
    decision_instants: np.ndarray
    timing: dict
    trial: int = 0
    waveforms: dict | None = None

    def to_dict(self) -> dict:
        return {
            "ber": self.ber,
            "n_bits": int(self.transmitted_bits.size),
            "n_errors": self.n_errors,
            "sigma": self.sigma,
            "source_strength": self.source_strength,
            "mean_input_snr_db": self.mean_input_snr_db,
            "output_snr_db": self.output_snr_db,
            "array_gain_db": self.array_gain_db,
            "empirical_gain_db": self.empirical_gain_db,
            "gamma": self.gamma,
            "csr_class": self.csr_class,
            "trial": self.trial,
            "timing": self.timing,
            "transmitted_bits": "".join(map(str, self.transmitted_bits.tolist())),
            "decoded_bits": "".join(map(str, self.decoded_bits.tolist())),
            "decision_metrics": [float(d) for d in self.decision_metrics],
            "decision_instants": [float(t) for t in self.decision_instants],
        }


def _payload(config: LinkConfig, trial: int) -> np.ndarray:
    if config.bits is not None:
        return np.asarray(config.bits, dtype=np.int8)
    rng = derive_rng(config.seed, BITS_STREAM, trial)
    return rng.integers(0, 2, size=int(config.n_bits), dtype=np.int8)


def _db(x: float) -> float | None:
    return 10.0 * math.log10(x) if x > 0 and math.isfinite(x) else None


def run_link(config: LinkConfig, trial: int = 0, keep_waveforms: bool = False) -> LinkReport:
    """Simulate one transmission of ``config``.

    Deterministic in ``(config, trial)``. With ``keep_waveforms`` the report
    carries every demodulation stage for plotting.
    """
    modem = config.modem
    bits = _payload(config, trial)
    p0 = source_strength_amplitude(config.medium, config.source)
    h_true = steering_vector(config.array, config.source)
    h_used = h_true
    if config.steering_offset is not None and any(config.steering_offset):
        h_used = steering_vector(config.array, config.source, config.steering_offset)
    sigma = config.noise_sigma()

    polarity = np.repeat(map_bits(bits).astype(float), modem.samples_per_symbol)
    drive = polarity * modem.carrier(polarity.size)
    phase = 0.0
    if config.actuator is not None:
        fn, zeta = config.actuator
        drive = actuator_filter(drive, fn, zeta, modem.sample_rate)
        # receiver locked to the carrier as actually radiated
        phase = float(np.angle(actuator_response(modem.carrier_frequency, fn, zeta,
                                                 modem.sample_rate)))

    noise = NoiseModel(config.noise_kind, sigma, config.f_low, config.seed)
    y, n = receive(config.medium, config.source, config.array, bits, modem, noise,
                   trial=trial, drive=drive, return_noise=True)
    fused = beamform(y, h_used)
    corrected = config.channel_sign * fused
    decisions = coherent_demodulate(corrected, modem, reference_phase=phase)
    n_err = int(np.count_nonzero(decisions.bits != bits))

    gamma, csr = cycle_per_symbol(modem)
    gain = 10.0 * math.log10(len(config.array))
    mean_in = out = emp = None
    if sigma > 0:
        mean_in = per_sensor_snr(h_true, p0, sigma).mean_db
        out = array_gain_report(h_true, sigma, p0).output_snr_db
        in_noise = float(np.mean(np.var(n, axis=1)))
        out_noise = float(np.var(beamform(n, h_used)))
        signal_in = (p0 * p0 / 2.0) * h_true.norm_sq / len(h_true)
        emp_in, emp_out = _db(signal_in / in_noise), _db((p0 * p0 / 2.0) / out_noise)
        if emp_in is not None and emp_out is not None:
            emp = emp_out - emp_in

    timing = {
        "sample_rate": modem.sample_rate,
        "bit_rate": modem.bit_rate,
        "samples_per_symbol": modem.samples_per_symbol,
        "symbol_period": modem.symbol_period,
        "n_samples": int(polarity.size),
        "duration": polarity.size / modem.sample_rate,
        "reference_phase": phase,
    }
    waveforms = None
    if keep_waveforms:
        mixed = corrected * modem.carrier(corrected.size, phase)
        ramps = np.cumsum(mixed.reshape(-1, modem.samples_per_symbol), axis=1) / modem.sample_rate
        waveforms = {
            "sensor": y.samples,
            "beamformed": fused,
            "mixed": mixed,
            "integrator": ramps.reshape(-1),
        }
    return LinkReport(
        transmitted_bits=bits,
        decoded_bits=decisions.bits,
        n_errors=n_err,
        ber=n_err / bits.size,
        sigma=sigma,
        source_strength=p0,
        mean_input_snr_db=mean_in,
        output_snr_db=out,
        array_gain_db=gain,
        empirical_gain_db=emp,
        gamma=gamma,
        csr_class=csr.value,
        decision_metrics=decisions.metrics,
        decision_instants=decisions.instants,
        timing=timing,
        trial=trial,
        waveforms=waveforms,
    )


def _window_energies(modem: BpskConfig) -> np.ndarray:
    """``sum sin^2`` of the local carrier over each distinct symbol window."""
    sps_ = modem.samples_per_symbol
    fs, fc = modem.sample_rate, modem.carrier_frequency
    if float(fs).is_integer() and float(fc).is_integer():
        # carrier samples repeat every ``period``; windows repeat after n_sym symbols
        period = int(fs) // math.gcd(int(fs), int(fc))
        n_sym = period // math.gcd(period, sps_)
    else:
        n_sym = 1000
    c = modem.carrier(n_sym * sps_)
    return np.sum((c * c).reshape(n_sym, sps_), axis=1)


def discrete_ebn0(config: LinkConfig) -> float:
    """Post-integration ``Eb/N0`` (linear) of the sampled white-noise link.

    With residual noise variance ``s^2 = sigma^2 / |h|^2`` after the
    beamformer, ``D_k`` has mean ``P0 E / f_s`` and variance
    ``s^2 E / f_s^2`` where ``E`` is the window's ``sum sin^2``; so
    ``2 Eb/N0 = P0^2 E / s^2``. Windows of unequal energy are averaged.
    """
    sigma = config.noise_sigma()
    if sigma <= 0:
        return math.inf
    h = steering_vector(config.array, config.source)
    p0 = source_strength_amplitude(config.medium, config.source)
    residual = sigma**2 / h.norm_sq
    energy = float(np.mean(_window_energies(config.modem)))
    return p0 * p0 * energy / residual / 2.0


def predicted_ber(config: LinkConfig) -> float:
    """Coherent-BPSK error probability of the ideal-switching white-noise link."""
    sigma = config.noise_sigma()
    if sigma <= 0:
        return 0.0
    h = steering_vector(config.array, config.source)
    p0 = source_strength_amplitude(config.medium, config.source)
    residual = sigma**2 / h.norm_sq
    energies = _window_energies(config.modem)
    return float(np.mean(stats.norm.sf(np.sqrt(p0 * p0 * energies / residual))))


def wilson_interval(errors: int, total: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(int(errors), int(total)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class SweepRow:
    value: float
    ber: float
    ci_low: float
    ci_high: float
    trials: int
    errors: int
    bits: int


SWEEP_VARIABLES = ("snr", "distance", "rate")


def _point_config(base: LinkConfig, variable: str, value: float) -> LinkConfig:
    if variable == "snr":
        return replace(base, sigma=None, snr_db=float(value))
    if variable == "distance":
        src = base.source
        return replace(base, source=default_source(float(value), src.radius, src.amplitude,
                                                   src.carrier_frequency, src.vibration_axis))
    if variable == "rate":
        m = base.modem
        return replace(base, modem=BpskConfig(float(value), m.carrier_frequency, m.sample_rate,
                                              m.amplitude))
    raise ConfigInvalid(f"sweep variable must be one of {SWEEP_VARIABLES}, got {variable!r}",
                        field="variable")


def ber_sweep(base: LinkConfig, variable: str, values, trials: int = 1) -> list[SweepRow]:
    """BER with a 95 % Wilson interval at each value of ``variable``.

    ``variable`` is ``"snr"`` (mean input SNR, dB), ``"distance"`` (m) or
    ``"rate"`` (bit/s). Distance and rate sweeps hold the absolute noise
    level of ``base`` fixed. Trial ``t`` reuses the same random streams at
    every point.
    """
    values = list(values)
    if not values:
        raise ConfigInvalid("sweep needs at least one value", field="values")
    if int(trials) != trials or trials < 1:
        raise ConfigInvalid(f"trials must be >= 1, got {trials}", field="trials")
    if variable not in SWEEP_VARIABLES:
        raise ConfigInvalid(f"sweep variable must be one of {SWEEP_VARIABLES}, got {variable!r}",
                            field="variable")
    if variable != "snr":
        base = base.with_fixed_sigma()
    rows = []
    for value in values:
        cfg = _point_config(base, variable, value)
        errors = bits = 0
        for t in range(int(trials)):
            rep = run_link(cfg, trial=t)
            errors += rep.n_errors
            bits += rep.transmitted_bits.size
        lo, hi = wilson_interval(errors, bits)
        rows.append(SweepRow(float(value), errors / bits, lo, hi, int(trials), errors, bits))
    return rows


@dataclass
class AttenuationProfile:
    r: np.ndarray
    amplitude: np.ndarray
    slope: float | None
    nodal: bool
    direction: np.ndarray


def attenuation_profile(medium: FluidMedium, source: DipoleSource, direction, r_min: float,
                        r_max: float, samples: int = 50) -> AttenuationProfile:
    """Pressure amplitude ``P0 |G|`` along a ray from the source centre.

    Samples are log-spaced; ``slope`` is the least-squares log-log slope, or
    None when the ray lies in the nodal plane.
    """
    d = np.asarray(direction, dtype=float)
    if d.shape != (3,) or not np.linalg.norm(d) > 0:
        raise ConfigInvalid("direction must be a non-zero 3-vector", field="direction")
    d = d / np.linalg.norm(d)
    if not (r_min > source.radius and r_max > r_min):
        raise ConfigInvalid(
            f"need radius {source.radius} < r_min < r_max, got r_min={r_min}, r_max={r_max}",
            field="r_min",
        )
    if int(samples) != samples or samples < 2:
        raise ConfigInvalid("samples must be an integer >= 2", field="samples")
    r = np.geomspace(r_min, r_max, int(samples))
    points = source.position + r[:, None] * d
    g, _ = geometric_factor_array(source.position, source.vibration_axis, points)
    amp = source_strength_amplitude(medium, source) * np.abs(g)
    nodal = abs(float(d @ source.vibration_axis)) < 1e-12 or not np.any(amp > 0)
    slope = None if nodal else float(np.polyfit(np.log(r), np.log(amp), 1)[0])
    return AttenuationProfile(r, amp, slope, nodal, d)


@dataclass
class SensitivityGrid:
    """``|h(r)|`` per grid point; NaN where the probe sphere would contain a sensor."""

    grid: GridSpec
    values: np.ndarray
    valid: np.ndarray
    max_value: float
    thresholds: dict = field(default_factory=dict)


def _sensitivity(array: SensorArray, probes: np.ndarray, axis) -> tuple[np.ndarray, np.ndarray]:
    flat = probes.reshape(-1, 3)
    # G of a source at each probe, evaluated at every sensor: (P, N)
    delta = array.positions[None, :, :] - flat[:, None, :]
    dist = np.sqrt(np.sum(delta * delta, axis=-1))
    with np.errstate(divide="ignore", invalid="ignore"):
        g = (delta @ np.asarray(axis, dtype=float)) / dist**3
    # sorted summation makes the result independent of sensor order
    s = np.sqrt(np.sum(np.sort(g * g, axis=1), axis=1))
    return s.reshape(probes.shape[:-1]), dist.min(axis=1).reshape(probes.shape[:-1])


def sensitivity_at(array: SensorArray, point, axis=(1.0, 0.0, 0.0)) -> float:
    """Array sensitivity ``sqrt(sum_i G(point, m_i)^2)`` for a probe source at ``point``."""
    s, _ = _sensitivity(array, np.asarray(point, dtype=float)[None, :], axis)
    return float(s[0])


def sensitivity_field(array: SensorArray, grid: GridSpec, axis=(1.0, 0.0, 0.0),
                      probe_radius: float = DEFAULTS["radius"]) -> SensitivityGrid:
    """Sensitivity volume with the 60 % and 30 % of maximum levels.

    Grid points within ``probe_radius`` of any sensor are invalid.
    """
    axis = np.asarray(axis, dtype=float)
    if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
        raise ConfigInvalid("probe axis must be a unit vector", field="axis")
    s, nearest = _sensitivity(array, grid.points(), axis)
    valid = nearest > probe_radius
    if not np.any(valid):
        raise EmptyGrid("every grid point is within the probe radius of a sensor")
    s = np.where(valid, s, np.nan)
    smax = float(np.max(s[valid]))
    thresholds = {f"{lvl:.1f}": lvl * smax for lvl in SENSITIVITY_LEVELS}
    return SensitivityGrid(grid, s, valid, smax, thresholds)


@dataclass
class EyeDiagramData:
    traces: np.ndarray
    time: np.ndarray
    sample_instants: np.ndarray
    eye_height: float
    normalized_eye_height: float
    amplitude: float


def baseband(waveform, config: BpskConfig, channel_sign: float = 1.0,
             reference_phase: float = 0.0) -> np.ndarray:
    """Coherently mixed waveform smoothed over one carrier period, scaled by 2.

    An ideal BPSK input of amplitude ``A`` gives plateaus at ``+-A``.
    """
    y = channel_sign * np.asarray(waveform, dtype=float)
    mixed = 2.0 * y * config.carrier(y.size, reference_phase)
    width = max(1, int(round(config.sample_rate / config.carrier_frequency)))
    return np.convolve(mixed, np.full(width, 1.0 / width), mode="same")


def eye_diagram(waveform, config: BpskConfig, bits, trace_count: int = 200,
                channel_sign: float = 1.0, reference_phase: float = 0.0) -> EyeDiagramData:
    """Fold the baseband into overlapping two-symbol traces.

    The eye height is the smallest symbol-centre value of the 1-bits minus
    the largest of the 0-bits; it is normalised by ``2 * config.amplitude``.
    """
    y = np.asarray(waveform, dtype=float).reshape(-1)
    sps_ = config.samples_per_symbol
    if y.size % sps_:
        raise LengthMismatch(f"waveform has {y.size} samples, not whole symbols of {sps_}")
    n_sym = y.size // sps_
    bits = np.asarray(bits).reshape(-1)
    if n_sym < 3:
        raise LengthMismatch(f"eye diagram needs at least 3 symbols, got {n_sym}")
    if bits.size != n_sym:
        raise LengthMismatch(f"{bits.size} bits for {n_sym} symbols")
    if int(trace_count) != trace_count or trace_count < 1:
        raise ConfigInvalid("trace_count must be >= 1", field="traces")
    bb = baseband(y, config, channel_sign, reference_phase)
    n_tr = min(int(trace_count), n_sym - 1)
    idx = np.arange(n_tr)[:, None] * sps_ + np.arange(2 * sps_)[None, :]
    traces = bb[idx]
    centers = np.array([sps_ // 2, sps_ + sps_ // 2])
    values = traces[:, centers].reshape(-1)
    labels = np.stack([bits[:n_tr], bits[1:n_tr + 1]], axis=1).reshape(-1)
    ones, zeros = values[labels == 1], values[labels == 0]
    if ones.size and zeros.size:
        height = float(ones.min() - zeros.max())
    else:
        height = math.nan
    amp = config.amplitude
    norm = height / (2.0 * amp) if amp else math.nan
    t = np.arange(2 * sps_) / config.sample_rate
    return EyeDiagramData(traces, t, centers / config.sample_rate, height, norm, amp)
