"""File formats: CSV tables, JSON metadata and raw little-endian float64 records."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .array import MultiChannelSignal, SensorArray
from .errors import ConfigInvalid

CSV_DIGITS = 9
JSON_DIGITS = 12


def _clean(obj, digits: int = JSON_DIGITS):
    if isinstance(obj, dict):
        return {str(k): _clean(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist(), digits)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(f"{x:.{digits}g}")
    return obj


def dumps_json(obj) -> str:
    """Stable JSON: sorted keys, floats rounded to 12 significant digits, NaN as null."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps_json(obj))
    return path


def _savetxt(path, table: np.ndarray, header: str) -> Path:
    path = Path(path)
    np.savetxt(path, table, fmt=f"%.{CSV_DIGITS}g", delimiter=",", header=header, comments="")
    return path


def write_grid_csv(path, points: np.ndarray, values: np.ndarray, name: str = "value") -> Path:
    """Rows ``x,y,z,<name>``; invalid points are written as ``nan``."""
    table = np.column_stack([points.reshape(-1, 3), values.reshape(-1)])
    return _savetxt(path, table, f"x,y,z,{name}")


def write_waveform_csv(path, values, sample_rate: float, start_time: float = 0.0) -> Path:
    v = np.asarray(values, dtype=float).reshape(-1)
    t = start_time + np.arange(v.size) / sample_rate
    return _savetxt(path, np.column_stack([t, v]), "t,value")


def read_waveform_csv(path) -> tuple[np.ndarray, float]:
    """Return ``(values, sample_rate)`` from a ``t,value`` file."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 2:
        raise ConfigInvalid(f"{path}: expected columns t,value")
    if len(data) < 2:
        raise ConfigInvalid(f"{path}: need at least two samples to infer the sample rate")
    return data[:, 1], 1.0 / float(np.mean(np.diff(data[:, 0])))


def write_signal_csv(path, signal: MultiChannelSignal) -> Path:
    header = "t," + ",".join(f"ch{i}" for i in range(signal.n_channels))
    return _savetxt(path, np.column_stack([signal.times(), signal.samples.T]), header)


def write_raw(path, samples, sample_rate: float) -> tuple[Path, Path]:
    """Write ``<path>`` as float64 LE (channel-major) plus ``<path>.json`` sidecar."""
    arr = np.atleast_2d(np.asarray(samples, dtype="<f8"))
    path = Path(path)
    path.write_bytes(np.ascontiguousarray(arr).tobytes())
    side = Path(str(path) + ".json")
    write_json(side, {"sample_rate": sample_rate, "channels": arr.shape[0],
                      "length": arr.shape[1]})
    return path, side


def read_raw(path) -> MultiChannelSignal:
    path = Path(path)
    meta = json.loads(Path(str(path) + ".json").read_text())
    data = np.frombuffer(path.read_bytes(), dtype="<f8")
    expected = meta["channels"] * meta["length"]
    if data.size != expected:
        raise ConfigInvalid(f"{path}: {data.size} values, sidecar says {expected}")
    return MultiChannelSignal(data.reshape(meta["channels"], meta["length"]).copy(),
                              float(meta["sample_rate"]))


def array_to_json(array: SensorArray) -> list[list[float]]:
    return [[float(c) for c in p] for p in array.positions]


def save_array(path, array: SensorArray) -> Path:
    # full repr precision so geometry round-trips exactly
    path = Path(path)
    path.write_text(json.dumps(array_to_json(array), indent=2) + "\n")
    return path


def load_array(path) -> SensorArray:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, list):
        raise ConfigInvalid(f"{path}: expected a list of [x, y, z]", field="positions")
    return SensorArray(np.asarray(data, dtype=float))


def write_sweep_csv(path, rows) -> Path:
    table = np.array([[r.value, r.ber, r.ci_low, r.ci_high, r.trials] for r in rows], dtype=float)
    path = Path(path)
    lines = ["value,ber,ci_low,ci_high,trials"]
    for v, b, lo, hi, n in table:
        lines.append(f"{v:.{CSV_DIGITS}g},{b:.{CSV_DIGITS}g},{lo:.{CSV_DIGITS}g},"
                     f"{hi:.{CSV_DIGITS}g},{int(n)}")
    path.write_text("\n".join(lines) + "\n")
    return path


def write_eye_csv(path, eye) -> Path:
    """Long format ``trace,t,value``."""
    n_tr, width = eye.traces.shape
    trace = np.repeat(np.arange(n_tr), width)
    t = np.tile(eye.time, n_tr)
    return _savetxt(path, np.column_stack([trace, t, eye.traces.reshape(-1)]), "trace,t,value")
