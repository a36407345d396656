"""Artificial lateral line: sensor geometry, spatial fingerprint, reception and noise."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigInvalid, DegenerateFingerprint, PointInsideSource
from .modem import BpskConfig, map_bits
from .physics import DipoleSource, FluidMedium, geometric_factor_array, source_strength_amplitude
from .seeding import NOISE_STREAM, derive_rng

__all__ = [
    "SensorArray",
    "SpatialFingerprint",
    "NoiseModel",
    "MultiChannelSignal",
    "SnrReport",
    "build_dual_line_array",
    "steering_vector",
    "kolmogorov_psd",
    "synthesize_noise",
    "receive",
    "per_sensor_snr",
    "calibrate_noise_for_snr",
]

MIN_SEPARATION = 1e-9


@dataclass(frozen=True)
class SensorArray:
    """Ordered pressure-sensor positions, shape (N, 3), in m."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise ConfigInvalid(f"sensor positions must have shape (N, 3), got {pos.shape}",
                                field="positions")
        if not np.all(np.isfinite(pos)):
            raise ConfigInvalid("sensor positions must be finite", field="positions")
        if len(pos) > 1:
            diff = pos[:, None, :] - pos[None, :, :]
            dist = np.sqrt(np.sum(diff * diff, axis=-1))
            np.fill_diagonal(dist, np.inf)
            i, j = np.unravel_index(np.argmin(dist), dist.shape)
            if dist[i, j] <= MIN_SEPARATION:
                raise ConfigInvalid(f"sensors {min(i, j)} and {max(i, j)} coincide",
                                    field="positions")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    def __len__(self):
        return len(self.positions)

    @property
    def count(self) -> int:
        return len(self.positions)


def build_dual_line_array(span: float = 0.2, row_offset: float = 0.02,
                          n_per_row: int = 12) -> SensorArray:
    """Two parallel rows along x, at ``y = +-row_offset``, ``z = 0``.

    Sensors are evenly spaced over ``[-span/2, span/2]``; the +y row comes
    first. Defaults give the 24-sensor layout.
    """
    if not (span > 0 and math.isfinite(span)):
        raise ConfigInvalid(f"span must be > 0, got {span}", field="span")
    if int(n_per_row) != n_per_row or n_per_row < 2:
        raise ConfigInvalid(f"n_per_row must be an integer >= 2, got {n_per_row}",
                            field="n_per_row")
    if not math.isfinite(row_offset):
        raise ConfigInvalid("row_offset must be finite", field="row_offset")
    n = int(n_per_row)
    k = np.arange(n, dtype=float)
    # exact mirror symmetry in x
    x = (span / 2.0) * (2.0 * k - (n - 1)) / (n - 1)
    rows = [np.column_stack([x, np.full(n, y), np.zeros(n)]) for y in (row_offset, -row_offset)]
    try:
        return SensorArray(np.vstack(rows))
    except ConfigInvalid as exc:
        raise ConfigInvalid(f"row_offset {row_offset} gives coincident rows: {exc}",
                            field="row_offset") from exc


@dataclass(frozen=True)
class SpatialFingerprint:
    """Per-sensor geometric response ``h_i = G(m_i)`` (1/m^2) to one source."""

    h: np.ndarray
    source_position: np.ndarray
    vibration_axis: np.ndarray

    @property
    def norm_sq(self) -> float:
        return float(self.h @ self.h)

    def __len__(self):
        return len(self.h)


def steering_vector(array: SensorArray, source: DipoleSource,
                    position_offset=None) -> SpatialFingerprint:
    """Fingerprint of ``source`` as seen by ``array``.

    ``position_offset`` shifts the assumed source position, which is only
    useful to study a mismatched beamformer.
    """
    pos = source.position
    if position_offset is not None:
        pos = pos + np.asarray(position_offset, dtype=float)
    h, dist = geometric_factor_array(pos, source.vibration_axis, array.positions)
    inside = np.flatnonzero(dist <= source.radius)
    if inside.size:
        i = int(inside[0])
        raise PointInsideSource(
            f"sensor {i} at {tuple(array.positions[i])} is {dist[i]:.6g} m from the source "
            f"centre, inside radius {source.radius:.6g} m",
            index=i,
        )
    if not np.any(h != 0):
        raise DegenerateFingerprint("every sensor lies on the source's nodal plane")
    h.setflags(write=False)
    return SpatialFingerprint(h, np.array(pos), source.vibration_axis)


@dataclass(frozen=True)
class NoiseModel:
    """Additive sensor noise.

    ``kind`` is ``"white"`` (i.i.d. Gaussian) or ``"kolmogorov"`` (Gaussian
    with a -5/3 power-law spectrum, flat below ``f_low``). ``sigma`` is the
    per-sensor standard deviation in Pa.
    """

    kind: str = "white"
    sigma: float = 0.0
    f_low: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("white", "kolmogorov"):
            raise ConfigInvalid(f"noise kind must be 'white' or 'kolmogorov', got {self.kind!r}",
                                field="kind")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ConfigInvalid(f"sigma must be >= 0, got {self.sigma}", field="sigma")
        if not (self.f_low > 0 and math.isfinite(self.f_low)):
            raise ConfigInvalid(f"f_low must be > 0, got {self.f_low}", field="f_low")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ConfigInvalid(f"seed must be a 64-bit non-negative integer, got {self.seed}",
                                field="seed")


@dataclass
class MultiChannelSignal:
    """Sampled record, ``samples`` of shape (N, T), at ``sample_rate`` Hz."""

    samples: np.ndarray
    sample_rate: float
    start_time: float = 0.0

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if self.samples.ndim != 2:
            raise ConfigInvalid("samples must be 2-D (channels, time)")

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.n_samples) / self.sample_rate


def kolmogorov_psd(freqs, f_low: float) -> np.ndarray:
    """Unnormalised target spectrum: ``f^(-5/3)``, held flat below ``f_low``."""
    f = np.maximum(np.abs(np.asarray(freqs, dtype=float)), f_low)
    return f ** (-5.0 / 3.0)


def _kolmogorov_channel(rng: np.random.Generator, n: int, sample_rate: float,
                        f_low: float, sigma: float) -> np.ndarray:
    white = rng.standard_normal(n)
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    gain = np.sqrt(kolmogorov_psd(freqs, f_low))
    # expected output variance of unit white noise through ``gain``
    weights = np.full(freqs.size, 2.0)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[-1] = 1.0
    var = float(np.sum(weights * gain**2)) / n
    gain *= sigma / math.sqrt(var)
    return np.fft.irfft(np.fft.rfft(white) * gain, n=n)


def synthesize_noise(model: NoiseModel, n_channels: int, n_samples: int, sample_rate: float,
                     trial: int = 0) -> MultiChannelSignal:
    """Independent noise for ``n_channels`` channels.

    Channel ``i`` of trial ``trial`` always draws from the same sub-stream of
    ``model.seed``, so any generation order gives identical output.
    """
    if int(n_samples) != n_samples or n_samples < 1:
        raise ConfigInvalid(f"number of samples must be >= 1, got {n_samples}", field="n_samples")
    if int(n_channels) != n_channels or n_channels < 1:
        raise ConfigInvalid(f"channel count must be >= 1, got {n_channels}", field="n_channels")
    if not sample_rate > 0:
        raise ConfigInvalid("sample_rate must be > 0", field="sample_rate")
    out = np.zeros((int(n_channels), int(n_samples)))
    if model.sigma == 0:
        return MultiChannelSignal(out, sample_rate)
    for ch in range(int(n_channels)):
        rng = derive_rng(model.seed, NOISE_STREAM, trial, ch)
        if model.kind == "white":
            out[ch] = model.sigma * rng.standard_normal(int(n_samples))
        else:
            out[ch] = _kolmogorov_channel(rng, int(n_samples), sample_rate, model.f_low, model.sigma)
    return MultiChannelSignal(out, sample_rate)


def receive(medium: FluidMedium, source: DipoleSource, array: SensorArray, bits,
            config: BpskConfig, noise: NoiseModel | None = None, trial: int = 0,
            drive=None, return_noise: bool = False):
    """Pressure record at every sensor for a BPSK-keyed source.

    Channel ``i`` is ``h_i * s(t) + n_i(t)`` with physical source strength
    ``s(t) = -P0 * d_k * sin(w t)``. ``drive`` replaces the unit-amplitude
    keyed carrier ``d_k sin(w t)``, e.g. with an actuator-filtered version.
    With ``return_noise`` the noise record is returned alongside.
    """
    fp = steering_vector(array, source)
    p0 = source_strength_amplitude(medium, source)
    if drive is None:
        polarity = np.repeat(map_bits(bits).astype(float), config.samples_per_symbol)
        drive = polarity * config.carrier(polarity.size)
    s = -p0 * np.asarray(drive, dtype=float)
    y = np.outer(fp.h, s)
    n = None
    if noise is not None and noise.sigma > 0 and s.size:
        n = synthesize_noise(noise, len(array), s.size, config.sample_rate, trial).samples
        y += n
    sig = MultiChannelSignal(y, config.sample_rate)
    if return_noise:
        return sig, (n if n is not None else np.zeros_like(y))
    return sig


@dataclass(frozen=True)
class SnrReport:
    per_sensor: np.ndarray
    per_sensor_db: np.ndarray
    mean: float
    mean_db: float


def _db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


def per_sensor_snr(h, p0: float, sigma: float) -> SnrReport:
    """Per-sensor and mean input SNR of a sinusoid of amplitude ``h_i P0``."""
    if not (sigma > 0 and math.isfinite(sigma)):
        raise ConfigInvalid(f"sigma must be > 0, got {sigma}", field="sigma")
    h = np.asarray(getattr(h, "h", h), dtype=float)
    per = h * h * (p0 * p0 / 2.0) / sigma**2
    mean = (p0 * p0 / 2.0) * float(h @ h) / len(h) / sigma**2
    return SnrReport(per, _db(per), mean, float(_db(mean)))


def calibrate_noise_for_snr(h, p0: float, target_db: float) -> float:
    """Noise standard deviation that puts the mean per-sensor SNR at ``target_db``."""
    if not math.isfinite(target_db):
        raise ConfigInvalid(f"target SNR must be finite, got {target_db}", field="snr_db")
    h = np.asarray(getattr(h, "h", h), dtype=float)
    energy = float(h @ h)
    if energy == 0 or p0 == 0:
        raise DegenerateFingerprint("zero signal energy; cannot calibrate noise")
    signal_power = (p0 * p0 / 2.0) * energy / len(h)
    return math.sqrt(signal_power / 10.0 ** (target_db / 10.0))
