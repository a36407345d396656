"""BPSK modulation of the vibrating source and integrate-and-dump demodulation."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import ConfigInvalid, LengthMismatch

__all__ = [
    "BpskConfig",
    "CsrClass",
    "DecisionRecord",
    "Decisions",
    "map_bits",
    "modulate",
    "cycle_per_symbol",
    "actuator_filter",
    "actuator_response",
    "coherent_demodulate",
]

_INT_TOL = 1e-9


class CsrClass(str, enum.Enum):
    RELIABLE = "reliable"
    FRACTIONAL = "fractional"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class BpskConfig:
    """Timing and amplitude of a BPSK link.

    ``sample_rate`` must be at least ten times the carrier and an integer
    multiple of ``bit_rate``. A non-integer carrier-cycles-per-bit ratio is
    allowed but warned about, since the ``A T_s / 2`` decision level only
    holds for whole cycles.
    """

    bit_rate: float = 20.0
    carrier_frequency: float = 40.0
    sample_rate: float = 2000.0
    amplitude: float = 1.0

    def __post_init__(self):
        for name in ("bit_rate", "carrier_frequency", "sample_rate"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigInvalid(f"{name} must be > 0, got {v}", field=name)
        if not math.isfinite(self.amplitude):
            raise ConfigInvalid("amplitude must be finite", field="amplitude")
        if self.sample_rate < 10.0 * self.carrier_frequency:
            raise ConfigInvalid(
                f"sample_rate {self.sample_rate} Hz is below 10 x carrier "
                f"({10 * self.carrier_frequency} Hz)",
                field="sample_rate",
            )
        ratio = self.sample_rate / self.bit_rate
        if abs(ratio - round(ratio)) > _INT_TOL * ratio or round(ratio) < 1:
            raise ConfigInvalid(
                f"sample_rate / bit_rate = {ratio} is not a positive integer", field="bit_rate"
            )
        gamma = self.gamma
        if abs(gamma - round(gamma)) > _INT_TOL * max(gamma, 1.0) or gamma < 1:
            warnings.warn(
                f"cycle-per-symbol ratio {gamma:g} is not an integer >= 1; "
                "decision levels deviate from A*Ts/2",
                RuntimeWarning,
                stacklevel=3,
            )

    @property
    def samples_per_symbol(self) -> int:
        return int(round(self.sample_rate / self.bit_rate))

    @property
    def symbol_period(self) -> float:
        return 1.0 / self.bit_rate

    @property
    def gamma(self) -> float:
        return self.carrier_frequency / self.bit_rate

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.carrier_frequency

    def carrier(self, n_samples: int, phase: float = 0.0) -> np.ndarray:
        t = np.arange(n_samples) / self.sample_rate
        return np.sin(self.omega * t + phase)


@dataclass(frozen=True)
class DecisionRecord:
    metric: float
    bit: int
    instant: float


@dataclass
class Decisions:
    """Per-symbol integrate-and-dump output.

    ``metrics[k]`` is the decision value of symbol ``k``, ``instants[k]`` the
    dump time (end of the window). Iterating yields :class:`DecisionRecord`.
    """

    metrics: np.ndarray
    bits: np.ndarray
    instants: np.ndarray

    def __len__(self):
        return len(self.metrics)

    def __iter__(self):
        for m, b, t in zip(self.metrics, self.bits, self.instants):
            yield DecisionRecord(float(m), int(b), float(t))

    def __getitem__(self, k) -> DecisionRecord:
        return DecisionRecord(float(self.metrics[k]), int(self.bits[k]), float(self.instants[k]))


def _as_bits(bits) -> np.ndarray:
    arr = np.asarray(bits)
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ConfigInvalid("bits must be 0 or 1", field="bits")
    return arr.astype(np.int8).reshape(-1)


def map_bits(bits) -> np.ndarray:
    """Map bits to polarities: 1 -> +1, 0 -> -1."""
    return 2 * _as_bits(bits).astype(np.int64) - 1


def modulate(bits, config: BpskConfig) -> np.ndarray:
    """Sampled BPSK waveform ``amplitude * d_k * sin(w t)``.

    The carrier phase runs on absolute time, so a polarity change is an
    instantaneous phase inversion.
    """
    d = map_bits(bits)
    sps_ = config.samples_per_symbol
    polarity = np.repeat(d.astype(float), sps_)
    return config.amplitude * polarity * config.carrier(polarity.size)


def cycle_per_symbol(config: BpskConfig) -> tuple[float, CsrClass]:
    """Carrier cycles per bit, ``f_c / R_b``, and its classification."""
    gamma = config.carrier_frequency / config.bit_rate
    if gamma < 1:
        return gamma, CsrClass.INFEASIBLE
    if abs(gamma - round(gamma)) <= _INT_TOL * gamma:
        return gamma, CsrClass.RELIABLE
    return gamma, CsrClass.FRACTIONAL


def _actuator_coeffs(natural_frequency: float, damping: float, sample_rate: float):
    if not (natural_frequency > 0 and math.isfinite(natural_frequency)):
        raise ConfigInvalid(f"natural_frequency must be > 0, got {natural_frequency}",
                            field="natural_frequency")
    if not (damping > 0 and math.isfinite(damping)):
        raise ConfigInvalid(f"damping must be > 0, got {damping}", field="damping")
    if not (sample_rate > 0):
        raise ConfigInvalid("sample_rate must be > 0", field="sample_rate")
    wn = 2.0 * math.pi * natural_frequency
    return sps.bilinear([wn * wn], [1.0, 2.0 * damping * wn, wn * wn], fs=sample_rate)


def actuator_filter(waveform, natural_frequency: float, damping: float,
                    sample_rate: float) -> np.ndarray:
    """Second-order low-pass standing in for actuator inertia.

    Continuous prototype ``wn^2 / (s^2 + 2 zeta wn s + wn^2)`` mapped to
    discrete time with the bilinear transform (no prewarping). Unity DC gain.
    """
    b, a = _actuator_coeffs(natural_frequency, damping, sample_rate)
    return sps.lfilter(b, a, np.asarray(waveform, dtype=float))


def actuator_response(frequency: float, natural_frequency: float, damping: float,
                      sample_rate: float) -> complex:
    """Complex steady-state gain of :func:`actuator_filter` at ``frequency``."""
    b, a = _actuator_coeffs(natural_frequency, damping, sample_rate)
    _, h = sps.freqz(b, a, worN=[frequency], fs=sample_rate)
    return complex(h[0])


def coherent_demodulate(waveform, config: BpskConfig, reference_phase: float = 0.0) -> Decisions:
    """Integrate-and-dump against the local carrier ``sin(w t + phase)``.

    ``D_k`` is the Riemann sum of ``y[m] * c[m] / f_s`` over symbol ``k``;
    the decoded bit is 1 iff ``D_k > 0``. The reference is assumed
    synchronised with the transmitter; ``reference_phase`` lets a caller
    lock onto a known carrier phase offset.
    """
    y = np.asarray(waveform, dtype=float).reshape(-1)
    sps_ = config.samples_per_symbol
    if y.size % sps_:
        raise LengthMismatch(
            f"waveform has {y.size} samples, not a multiple of {sps_} samples per symbol"
        )
    n_sym = y.size // sps_
    mixed = y * config.carrier(y.size, reference_phase)
    metrics = mixed.reshape(n_sym, sps_).sum(axis=1) / config.sample_rate
    bits = (metrics > 0).astype(np.int8)
    instants = (np.arange(n_sym) + 1) * config.symbol_period
    return Decisions(metrics, bits, instants)
