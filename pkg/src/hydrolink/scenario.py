"""Scenario files: JSON documents describing one link, validated against a schema.

Omitted keys take the reference defaults; unknown keys are rejected.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

import jsonschema

from .analysis import DEFAULTS, LinkConfig, default_source
from .array import SensorArray, build_dual_line_array, steering_vector
from .errors import ConfigInvalid, HydroLinkError
from .modem import BpskConfig
from .physics import DipoleSource, FluidMedium

DEFAULT_SCENARIO = {
    "medium": {"density": DEFAULTS["density"]},
    "source": {
        "radius": DEFAULTS["radius"],
        "amplitude": DEFAULTS["amplitude"],
        "carrier_frequency": DEFAULTS["carrier_frequency"],
        "distance": DEFAULTS["distance"],
        "position": None,
        "vibration_axis": [1.0, 0.0, 0.0],
    },
    "array": {"span": 0.2, "row_offset": 0.02, "n_per_row": 12, "positions": None},
    "modem": {"bit_rate": DEFAULTS["bit_rate"], "sample_rate": DEFAULTS["sample_rate"]},
    "noise": {"kind": "white", "sigma": None, "snr_db": -5.0, "f_low": 1.0},
    "link": {
        "n_bits": 1000,
        "seed": 0,
        "channel_sign": -1,
        "steering_offset": None,
        "actuator": None,
    },
}

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_vec3 = {"type": "array", "items": _num, "minItems": 3, "maxItems": 3}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False,
            "required": list(required)}


SCHEMA = _obj({
    "medium": _obj({"density": _pos}),
    "source": _obj({
        "radius": _pos,
        "amplitude": {"type": "number", "minimum": 0},
        "carrier_frequency": _pos,
        "distance": _pos,
        "position": {"oneOf": [{"type": "null"}, _vec3]},
        "vibration_axis": _vec3,
    }),
    "array": _obj({
        "span": _pos,
        "row_offset": _num,
        "n_per_row": {"type": "integer", "minimum": 2},
        "positions": {"oneOf": [{"type": "null"},
                                {"type": "array", "items": _vec3, "minItems": 1}]},
    }),
    "modem": _obj({"bit_rate": _pos, "sample_rate": _pos}),
    "noise": _obj({
        "kind": {"enum": ["white", "kolmogorov"]},
        "sigma": {"oneOf": [{"type": "null"}, {"type": "number", "minimum": 0}]},
        "snr_db": {"oneOf": [{"type": "null"}, _num]},
        "f_low": _pos,
    }),
    "link": _obj({
        "n_bits": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "channel_sign": {"enum": [1, -1]},
        "steering_offset": {"oneOf": [{"type": "null"}, _vec3]},
        "actuator": {"oneOf": [
            {"type": "null"},
            _obj({"natural_frequency": _pos, "damping": _pos},
                 required=("natural_frequency", "damping")),
        ]},
    }),
})


def merge(base: dict, update: dict) -> dict:
    """Recursive dict merge; ``update`` wins. Non-dict values replace wholesale."""
    out = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != "actuator":
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def validate(doc: dict) -> None:
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigInvalid(f"{where}: {err.message}", field=where)


def load_scenario(path=None, overrides: dict | None = None) -> dict:
    """Effective scenario: defaults, then the file, then ``overrides``; validated."""
    doc = copy.deepcopy(DEFAULT_SCENARIO)
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"{path}: invalid JSON ({exc})", field="<file>") from exc
        if not isinstance(user, dict):
            raise ConfigInvalid(f"{path}: top level must be an object", field="<root>")
        validate(user)
        doc = merge(doc, user)
    if overrides:
        doc = merge(doc, overrides)
    validate(doc)
    return doc


def _wrap(field_name: str, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ConfigInvalid as exc:
        raise ConfigInvalid(f"{field_name}: {exc}", field=field_name) from exc
    except HydroLinkError as exc:
        raise ConfigInvalid(f"{field_name}: {exc}", field=field_name) from exc


def build_medium(doc: dict) -> FluidMedium:
    return _wrap("medium", FluidMedium, doc["medium"]["density"])


def build_source(doc: dict) -> DipoleSource:
    s = doc["source"]
    if s["position"] is None:
        return _wrap("source", default_source, s["distance"], s["radius"], s["amplitude"],
                     s["carrier_frequency"], s["vibration_axis"])
    return _wrap("source", DipoleSource, s["radius"], s["amplitude"], s["carrier_frequency"],
                 s["position"], s["vibration_axis"])


def build_array(doc: dict) -> SensorArray:
    a = doc["array"]
    if a["positions"] is not None:
        return _wrap("array.positions", SensorArray, a["positions"])
    return _wrap("array", build_dual_line_array, a["span"], a["row_offset"], a["n_per_row"])


def to_link_config(doc: dict) -> LinkConfig:
    """Build and sanity-check the :class:`LinkConfig` a scenario describes."""
    medium = build_medium(doc)
    source = build_source(doc)
    array = build_array(doc)
    _wrap("source", steering_vector, array, source)
    m = doc["modem"]
    modem = _wrap("modem", BpskConfig, m["bit_rate"], source.carrier_frequency, m["sample_rate"])
    n, link = doc["noise"], doc["link"]
    act = link["actuator"]
    offset = link["steering_offset"]
    return _wrap(
        "link",
        LinkConfig,
        medium=medium,
        source=source,
        array=array,
        modem=modem,
        noise_kind=n["kind"],
        sigma=n["sigma"],
        snr_db=n["snr_db"],
        f_low=n["f_low"],
        n_bits=link["n_bits"],
        seed=link["seed"],
        actuator=None if act is None else (act["natural_frequency"], act["damping"]),
        steering_offset=None if offset is None else tuple(offset),
        channel_sign=float(link["channel_sign"]),
    )
