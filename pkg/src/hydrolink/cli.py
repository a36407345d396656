"""Command-line front end.

Standard output carries JSON only; tables and traces go to files under
``--out``; diagnostics go to standard error. Exit status is 0 on success,
2 for an invalid configuration and 1 for any other failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import io
from .analysis import ber_sweep, eye_diagram, run_link, sensitivity_field
from .array import steering_vector
from .beamformer import matched_weights
from .errors import ConfigInvalid
from .modem import BpskConfig
from .physics import GridSpec, pressure_field_grid, source_strength_amplitude
from .scenario import build_array, build_medium, build_source, load_scenario, to_link_config

log = logging.getLogger("hydrolink")


class UsageError(ConfigInvalid):
    pass


def _csv_floats(text: str, name: str, count: int | None = None) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--{name}: expected comma-separated numbers, got {text!r}", field=name)
    if count is not None and len(vals) != count:
        raise UsageError(f"--{name}: expected {count} values, got {len(vals)}", field=name)
    return vals


def _overrides(args) -> dict:
    o: dict = {}

    def put(section, key, value):
        o.setdefault(section, {})[key] = value

    if getattr(args, "seed", None) is not None:
        put("link", "seed", args.seed)
    if getattr(args, "bits", None) is not None:
        put("link", "n_bits", args.bits)
    if getattr(args, "snr_db", None) is not None:
        put("noise", "snr_db", args.snr_db)
        put("noise", "sigma", None)
    if getattr(args, "sigma", None) is not None:
        put("noise", "sigma", args.sigma)
    if getattr(args, "noise_kind", None) is not None:
        put("noise", "kind", args.noise_kind)
    if getattr(args, "rate", None) is not None:
        put("modem", "bit_rate", args.rate)
    if getattr(args, "distance", None) is not None:
        put("source", "distance", args.distance)
        put("source", "position", None)
    if getattr(args, "actuator", None) is not None:
        fn, zeta = _csv_floats(args.actuator, "actuator", 2)
        put("link", "actuator", {"natural_frequency": fn, "damping": zeta})
    if getattr(args, "steering_offset", None) is not None:
        put("link", "steering_offset", _csv_floats(args.steering_offset, "steering-offset", 3))
    return o


def _scenario(args) -> dict:
    return load_scenario(args.scenario, _overrides(args))


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(obj) -> None:
    sys.stdout.write(io.dumps_json(obj))


def cmd_simulate(args) -> int:
    doc = _scenario(args)
    config = to_link_config(doc)
    report = run_link(config, keep_waveforms=args.dump_waveforms)
    payload = report.to_dict()
    out = _out_dir(args)
    io.write_json(out / "report.json", payload)
    if args.dump_waveforms:
        w = report.waveforms
        fs = config.modem.sample_rate
        io.write_raw(out / "sensors.f64", w["sensor"], fs)
        for name in ("beamformed", "mixed", "integrator"):
            io.write_waveform_csv(out / f"{name}.csv", w[name], fs)
        io.write_raw(out / "beamformed.f64", w["beamformed"], fs)
    _emit(payload)
    return 0


def _sweep_values(args) -> list[float]:
    if args.values is not None:
        vals = _csv_floats(args.values, "values")
        if not vals:
            raise UsageError("--values: no values given", field="values")
        return vals
    if args.start is None or args.stop is None:
        raise UsageError("give --values or both --from and --to", field="from")
    step = args.step
    if step is None:
        step = {"snr": 1.0, "distance": 0.05, "rate": 10.0}[args.kind]
    if step <= 0:
        raise UsageError("--step must be > 0", field="step")
    n = int(round((args.stop - args.start) / step)) + 1
    if n < 1:
        raise UsageError("--to must not be below --from", field="to")
    return [args.start + i * step for i in range(n)]


def cmd_sweep(args) -> int:
    values = _sweep_values(args)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1", field="trials")
    config = to_link_config(_scenario(args))
    rows = ber_sweep(config, args.kind, values, args.trials)
    out = _out_dir(args)
    path = io.write_sweep_csv(out / f"sweep_{args.kind}.csv", rows)
    _emit({
        "kind": args.kind,
        "csv": str(path),
        "rows": [{"value": r.value, "ber": r.ber, "ci_low": r.ci_low, "ci_high": r.ci_high,
                  "trials": r.trials, "errors": r.errors, "bits": r.bits} for r in rows],
    })
    return 0


def _parse_plane(text: str) -> tuple[str, float]:
    try:
        axis, value = text.split("=")
        axis = axis.strip().lower()
        if axis not in ("x", "y", "z"):
            raise ValueError
        return axis, float(value)
    except ValueError:
        raise UsageError(f"--plane: expected e.g. z=0, got {text!r}", field="plane")


def cmd_field(args) -> int:
    doc = _scenario(args)
    medium, source = build_medium(doc), build_source(doc)
    axis, value = _parse_plane(args.plane)
    grid = GridSpec.plane(axis, value, args.extent, args.resolution, center=source.position)
    fg = pressure_field_grid(medium, source, grid, time=args.time)
    out = _out_dir(args)
    csv_path = io.write_grid_csv(out / "field.csv", grid.points(), fg.values)
    meta = {
        "quantity": fg.quantity,
        "normalization": fg.normalization,
        "source_strength": source_strength_amplitude(medium, source),
        "source_position": source.position,
        "vibration_axis": source.vibration_axis,
        "plane": {"axis": axis, "value": value},
        "shape": list(grid.shape),
        "extents": grid.extents(),
        "spacing": grid.spacing(),
        "valid_points": int(np.count_nonzero(fg.valid)),
        "csv": str(csv_path),
    }
    io.write_json(out / "field.json", meta)
    _emit(meta)
    return 0


def cmd_sensitivity(args) -> int:
    doc = _scenario(args)
    array = build_array(doc)
    axis = doc["source"]["vibration_axis"]
    grid = GridSpec.cube(args.extent, args.resolution)
    sg = sensitivity_field(array, grid, axis, probe_radius=doc["source"]["radius"])
    out = _out_dir(args)
    csv_path = io.write_grid_csv(out / "sensitivity.csv", grid.points(), sg.values, name="S")
    meta = {
        "max": sg.max_value,
        "thresholds": sg.thresholds,
        "probe_axis": axis,
        "probe_radius": doc["source"]["radius"],
        "shape": list(grid.shape),
        "extents": grid.extents(),
        "spacing": grid.spacing(),
        "valid_points": int(np.count_nonzero(sg.valid)),
        "csv": str(csv_path),
    }
    io.write_json(out / "sensitivity.json", meta)
    _emit(meta)
    return 0


def cmd_eye(args) -> int:
    config = to_link_config(_scenario(args))
    if config.bit_count < 3:
        raise UsageError("eye diagram needs at least 3 bits", field="bits")
    report = run_link(config, keep_waveforms=True)
    m = config.modem
    demod = BpskConfig(m.bit_rate, m.carrier_frequency, m.sample_rate, report.source_strength)
    eye = eye_diagram(report.waveforms["beamformed"], demod, report.transmitted_bits,
                      args.traces, channel_sign=config.channel_sign,
                      reference_phase=report.timing["reference_phase"])
    out = _out_dir(args)
    csv_path = io.write_eye_csv(out / "eye.csv", eye)
    meta = {
        "eye_height": eye.eye_height,
        "normalized_eye_height": eye.normalized_eye_height,
        "amplitude": eye.amplitude,
        "traces": int(eye.traces.shape[0]),
        "samples_per_trace": int(eye.traces.shape[1]),
        "sample_instants": eye.sample_instants,
        "ber": report.ber,
        "mean_input_snr_db": report.mean_input_snr_db,
        "csv": str(csv_path),
    }
    io.write_json(out / "eye.json", meta)
    _emit(meta)
    return 0


def cmd_dump_config(args) -> int:
    doc = _scenario(args)
    to_link_config(doc)
    _emit(doc)
    return 0


def cmd_weights(args) -> int:
    doc = _scenario(args)
    array, source = build_array(doc), build_source(doc)
    offset = doc["link"]["steering_offset"]
    h = steering_vector(array, source, offset)
    out = _out_dir(args)
    payload = matched_weights(h).to_dict()
    payload["array"] = io.array_to_json(array)
    io.write_json(out / "weights.json", payload)
    _emit(payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", type=Path, default=None, help="scenario JSON file")
    common.add_argument("--seed", type=int, default=None, help="master seed (scenario default 0)")
    common.add_argument("--out", default="./out", help="output directory (default ./out)")
    common.add_argument("-v", "--verbose", action="store_true")

    link = argparse.ArgumentParser(add_help=False)
    link.add_argument("--snr-db", type=float, default=None, help="mean per-sensor input SNR")
    link.add_argument("--sigma", type=float, default=None, help="per-sensor noise std, Pa")
    link.add_argument("--noise-kind", choices=["white", "kolmogorov"], default=None)
    link.add_argument("--bits", type=int, default=None, help="number of random bits")
    link.add_argument("--rate", type=float, default=None, help="bit rate, bit/s")
    link.add_argument("--distance", type=float, default=None,
                      help="source surface to array centre, m")
    link.add_argument("--actuator", default=None, metavar="FN,ZETA",
                      help="enable the actuator low-pass")
    link.add_argument("--steering-offset", default=None, metavar="DX,DY,DZ")

    p = argparse.ArgumentParser(prog="hydrolink", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common, link], help="run one link")
    s.add_argument("--dump-waveforms", action="store_true")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", parents=[common, link], help="BER sweep")
    s.add_argument("kind", choices=["snr", "distance", "rate"])
    s.add_argument("--from", dest="start", type=float, default=None)
    s.add_argument("--to", dest="stop", type=float, default=None)
    s.add_argument("--step", type=float, default=None)
    s.add_argument("--values", default=None, help="comma-separated explicit values")
    s.add_argument("--trials", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("field", parents=[common], help="export the dipole field on a plane")
    s.add_argument("--plane", default="z=0")
    s.add_argument("--extent", type=float, default=0.3, help="half-width, m")
    s.add_argument("--resolution", type=int, default=200)
    s.add_argument("--time", type=float, default=None,
                   help="export pressure at this time instead of the normalised G")
    s.add_argument("--distance", type=float, default=None)
    s.set_defaults(func=cmd_field)

    s = sub.add_parser("sensitivity", parents=[common], help="export the sensitivity volume")
    s.add_argument("--extent", type=float, default=0.5, help="half-width, m")
    s.add_argument("--resolution", type=int, default=40)
    s.set_defaults(func=cmd_sensitivity)

    s = sub.add_parser("eye", parents=[common, link], help="export eye-diagram traces")
    s.add_argument("--traces", type=int, default=200)
    s.set_defaults(func=cmd_eye)

    s = sub.add_parser("weights", parents=[common, link], help="export beamformer weights")
    s.set_defaults(func=cmd_weights)

    s = sub.add_parser("dump-config", parents=[common, link],
                       help="print the effective scenario")
    s.set_defaults(func=cmd_dump_config)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s: %(message)s")
    logging.captureWarnings(True)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except ConfigInvalid as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.debug("failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
