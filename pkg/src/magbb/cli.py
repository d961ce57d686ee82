"""``magbb`` command line: design, trace, mc, sweep and replay.

Angles on the command line and in files are degrees. Exit codes: 0 success,
2 usage or config error, 3 solver failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .beamform import CurrentSet, DesignError, design_set
from .chargesim import ChargingPolicy, FixedLocation, RandomLocation, ReceiverSample, monte_carlo, voltage_trace
from .config import ConfigError, ExperimentConfig, load_config, parse_scheme
from .fieldcore import Orientation, SphericalLocation
from .storage import read_current_set, write_csv, write_current_set, write_json

log = logging.getLogger("magbb")

EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_IO = 4

CDF_HEADER = ("policy", "energy_J", "cdf")
SUMMARY_HEADER = ("policy", "zero_probability", "q50_J")
TRACE_HEADER = ("t_s", "v_abs_V", "above_threshold")
SWEEP_HEADER = ("variable", "value", "policy", "zero_probability", "median_energy_J")


class UsageError(ValueError):
    pass


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _design(cfg: ExperimentConfig, scheme_text: str, location: SphericalLocation, workers: int) -> CurrentSet:
    scheme, n_cv = parse_scheme(scheme_text)
    return design_set(location, n_cv, scheme, cfg.design_params(), seed=cfg.seed, workers=workers)


def _mode(name: str, location: SphericalLocation):
    return FixedLocation(location) if name == "fixed_location" else RandomLocation(location.range)


def _run_mc(cfg, current_set, mode, workers):
    policy = ChargingPolicy(current_set, cfg.cycle_seconds)
    return monte_carlo(policy, cfg.mc_samples, mode, cfg.seed, cfg.tx, cfg.rx, cfg.medium_obj, cfg.v_th_v,
                       workers=workers, load_factor=cfg.load_factor)


def _label(value) -> str:
    return f"{float(value):g}"


def cmd_design(cfg: ExperimentConfig, args, out: Path) -> list[Path]:
    scheme_text = args.scheme if args.scheme != "grid" else f"grid{args.n_cv}"
    range_m = args.range if args.range is not None else cfg.distances_m[-1]
    theta = args.theta if args.theta is not None else cfg.design_location.theta_deg
    phi = args.phi if args.phi is not None else cfg.design_location.phi_deg
    location = SphericalLocation.from_degrees(range_m, theta, phi)
    cs = _design(cfg, scheme_text, location, args.workers)
    infeasible = sum(not v.diagnostics.feasible_voltage for v in cs.vectors)
    if infeasible:
        log.warning("%d of %d vectors could not meet the voltage threshold", infeasible, cs.n_cv)
    return [write_current_set(cs, out / args.name)]


def cmd_trace(cfg: ExperimentConfig, args, out: Path) -> list[Path]:
    cs = read_current_set(args.current_set)
    loc0 = cs.design_location
    location = SphericalLocation.from_degrees(
        args.range if args.range is not None else loc0.range,
        args.theta if args.theta is not None else loc0.theta_deg,
        args.phi if args.phi is not None else loc0.phi_deg,
    )
    rx = ReceiverSample(location, Orientation.from_degrees(args.rx_theta, args.rx_phi), cfg.rx)
    tr = voltage_trace(ChargingPolicy(cs, cfg.cycle_seconds), rx, cfg.tx, cfg.medium_obj)
    rows = [(t, v, bool(v > cfg.v_th_v)) for t, v in zip(tr.times, tr.voltages)]
    return [write_csv(out / args.name, TRACE_HEADER, rows)]


def _policies_for_mc(cfg, args):
    """(label, current_set) pairs, designed from the config unless files are given."""
    if args.current_set:
        out = []
        for path in args.current_set:
            cs = read_current_set(path)
            if args.range is not None:
                loc = cs.design_location
                cs = CurrentSet(cs.vectors, SphericalLocation(args.range, loc.polar, loc.azimuth),
                                cs.scheme, cs.seed, cs.metadata)
            out.append((Path(path).stem, cs))
        return out
    distances = [args.range] if args.range is not None else cfg.distances_m
    return [
        (f"{scheme}@{_label(d)}m", _design(cfg, scheme, cfg.design_location_at(d), args.workers))
        for d in distances
        for scheme in cfg.schemes
    ]


def cmd_mc(cfg: ExperimentConfig, args, out: Path) -> list[Path]:
    mode_name = args.mode or cfg.mc_mode
    cdf_rows, summary_rows = [], []
    for label, cs in _policies_for_mc(cfg, args):
        res = _run_mc(cfg, cs, _mode(mode_name, cs.design_location), args.workers)
        cdf_rows.extend((label, e, c) for e, c in zip(res.samples, res.cdf()))
        summary_rows.append((label, res.zero_probability, res.median))
        log.info("%s: zero_probability=%.4f median=%.4g J", label, res.zero_probability, res.median)
    return [
        write_csv(out / "cdf.csv", CDF_HEADER, cdf_rows),
        write_csv(out / "summary.csv", SUMMARY_HEADER, summary_rows),
    ]


def cmd_sweep(cfg: ExperimentConfig, args, out: Path) -> list[Path]:
    values = args.values or []
    if len(values) < 2:
        raise UsageError("sweep needs at least two values")
    mode_name = args.mode or cfg.mc_mode
    rows = []
    if args.variable == "distance":
        if any(not v > 0 for v in values):
            raise UsageError("distances must be positive")
        for d in values:
            loc = cfg.design_location_at(d)
            for scheme in cfg.schemes:
                res = _run_mc(cfg, _design(cfg, scheme, loc, args.workers), _mode(mode_name, loc), args.workers)
                rows.append(("distance", d, scheme, res.zero_probability, res.median))
    else:
        if any(v < 1 or v != int(v) for v in values):
            raise UsageError("n_cv values must be positive integers")
        d = args.range if args.range is not None else cfg.distances_m[-1]
        loc = cfg.design_location_at(d)
        for n in values:
            scheme = f"grid{int(n)}"
            res = _run_mc(cfg, _design(cfg, scheme, loc, args.workers), _mode(mode_name, loc), args.workers)
            rows.append(("n_cv", int(n), scheme, res.zero_probability, res.median))
    return [write_csv(out / args.name, SWEEP_HEADER, rows)]


COMMANDS = {"design": cmd_design, "trace": cmd_trace, "mc": cmd_mc, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config JSON (or a run manifest)")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--workers", type=int, default=1, help="threads for design and Monte Carlo")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="magbb", description="Magnetic blind beamforming experiments")
    parser.add_argument("--version", action="version", version=f"magbb {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", parents=[common], help="design a current set and write it as JSON")
    p.add_argument("--scheme", choices=("constant", "orthonormal3", "grid"), default="grid")
    p.add_argument("--n-cv", type=int, default=36)
    p.add_argument("--range", type=float, help="design distance in m (default: last config distance)")
    p.add_argument("--theta", type=float, help="design location polar angle, deg")
    p.add_argument("--phi", type=float, help="design location azimuth, deg")
    p.add_argument("--name", default="current_set.json")

    p = sub.add_parser("trace", parents=[common], help="voltage over one charging cycle for one receiver")
    p.add_argument("--current-set", required=True)
    p.add_argument("--range", type=float, help="receiver distance in m (default: design distance)")
    p.add_argument("--theta", type=float, help="receiver location polar angle, deg")
    p.add_argument("--phi", type=float, help="receiver location azimuth, deg")
    p.add_argument("--rx-theta", type=float, default=0.0, help="receiver coil axis polar angle, deg")
    p.add_argument("--rx-phi", type=float, default=0.0, help="receiver coil axis azimuth, deg")
    p.add_argument("--name", default="trace.csv")

    p = sub.add_parser("mc", parents=[common], help="Monte Carlo energy CDFs")
    p.add_argument("--current-set", action="append", help="current-set JSON; repeatable")
    p.add_argument("--mode", choices=("fixed_location", "random_location"))
    p.add_argument("--range", type=float, help="receiver distance in m")
    p.add_argument("--samples", type=int, help="overrides mc_samples")

    p = sub.add_parser("sweep", parents=[common], help="zero-energy probability over distance or n_cv")
    p.add_argument("--variable", choices=("distance", "n_cv"), required=True)
    p.add_argument("--values", type=float, nargs="*", default=[])
    p.add_argument("--mode", choices=("fixed_location", "random_location"))
    p.add_argument("--range", type=float, help="distance for n_cv sweeps, m")
    p.add_argument("--samples", type=int, help="overrides mc_samples")
    p.add_argument("--name", default="sweep.csv")

    p = sub.add_parser("replay", help="rerun the command recorded in a run manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


_NOT_RECORDED = {"command", "config", "out", "verbose"}


def run(command: str, cfg: ExperimentConfig, args: argparse.Namespace, out: Path) -> Path:
    """Execute ``command`` and write its outputs plus ``manifest.json`` into ``out``."""
    started = _now()
    out.mkdir(parents=True, exist_ok=True)
    outputs = COMMANDS[command](cfg, args, out)
    manifest = {
        "tool": "magbb",
        "version": __version__,
        "command": command,
        "arguments": {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_RECORDED},
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "started_utc": started,
        "finished_utc": _now(),
        "outputs": [p.name for p in outputs],
    }
    return write_json(out / "manifest.json", manifest)


def replay(manifest_path, out) -> Path:
    doc = json.loads(Path(manifest_path).read_text())
    for key in ("command", "arguments", "config"):
        if key not in doc:
            raise ConfigError(f"{manifest_path}: manifest lacks {key!r}")
    if doc["command"] not in COMMANDS:
        raise ConfigError(f"{manifest_path}: unknown command {doc['command']!r}")
    cfg = ExperimentConfig.from_dict(doc["config"])
    args = argparse.Namespace(**doc["arguments"])
    return run(doc["command"], cfg, args, Path(out))


def _config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "samples", None) is not None:
        cfg.mc_samples = args.samples
    cfg.validate()
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    for name in ("current_set",):
        paths = getattr(args, name, None)
        if isinstance(paths, list):
            setattr(args, name, [str(Path(p).resolve()) for p in paths])
        elif isinstance(paths, str):
            setattr(args, name, str(Path(paths).resolve()))
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "replay":
            replay(args.manifest, args.out)
        else:
            cfg = _config_from_args(args)
            run(args.command, cfg, args, Path(args.out))
    except (UsageError, ConfigError, ValueError) as exc:
        print(f"magbb: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DesignError as exc:
        print(f"magbb: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"magbb: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
