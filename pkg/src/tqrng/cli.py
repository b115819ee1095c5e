"""Command-line front end: simulate -> extract -> analyze -> sweep workflows.

Pipelines compose through files so each stage is independently testable and
intermediates are consumable by external tools.  Every file-producing command
writes a ``<output>.manifest.json`` recording the normalized configuration;
:func:`replay_manifest` re-runs a manifest and reproduces the outputs byte
for byte.

Exit codes: 0 success, 1 a validation check failed, 2 usage or configuration
error, 3 I/O or data error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import ent_battery, oracle_restartable
from .errors import ConfigurationError, DataFormatError, InsufficientDataError
from .events import SourceConfig, simulate_pulses
from .extraction import (CONTINUOUS, RESTARTABLE, ClockConfig, extract_basic,
                         extract_clocked)
from .experiments import (SweepSpec, reproduce_prototype, sweep,
                          validate_bias_model, validate_dead_time_cancellation)
from . import fileio, plotting
from .units import parse_count, parse_quantity

SCHEMA_VERSION = 1


# --------------------------------------------------------------------------
# manifests

def _write_manifest(primary_output, command: str, config: dict, inputs: list,
                    outputs: list, seed, t_start: float) -> str:
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "tqrng", "version": __version__},
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "duration_s": time.monotonic() - t_start,
    }
    path = str(primary_output) + ".manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def replay_manifest(manifest_path, out_dir=None) -> list[tuple[str, str]]:
    """Re-run a manifest; returns (original, replayed) output path pairs.

    With ``out_dir`` the outputs are redirected there so originals stay
    untouched and can be compared byte for byte.
    """
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    command = manifest["command"]
    config = dict(manifest["config"])
    runner = _CORE_COMMANDS.get(command)
    if runner is None:
        raise ConfigurationError(f"manifest command {command!r} is not replayable")
    mapping = []
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for key in ("out", "json", "text", "figure"):
            if config.get(key):
                orig = Path(config[key])
                config[key] = str(out_dir / orig.name)
                mapping.append((str(orig), config[key]))
    outputs = runner(config)
    if out_dir is None:
        mapping = [(str(p), str(p)) for p in outputs]
    return mapping


# --------------------------------------------------------------------------
# command cores (operate on normalized config dicts; used by replay)

def _core_simulate(config: dict) -> list[str]:
    cfg = SourceConfig(
        tau=config["tau"], n_events=config["n_events"], seed=config["seed"],
        dead_time=config["dead_time"],
        afterpulse_prob=config["afterpulse_prob"],
        afterpulse_tau=config["afterpulse_tau"])
    stream = simulate_pulses(cfg)
    fileio.write_timestamps_bin(config["out"], stream)
    return [config["out"]]


def _core_extract(config: dict) -> list[str]:
    stream = fileio.read_timestamps(config["input"], config.get("format"))
    method = config["method"]
    if method == "exact":
        buf, stats = extract_basic(stream)
        clock_info = None
    else:
        clock = ClockConfig(period=config["period"], mode=config["mode"],
                            phase=config["phase"], skew=config["skew"])
        buf, stats = extract_clocked(stream, clock)
        clock_info = {"period": clock.period, "mode": clock.mode,
                      "phase": clock.phase, "skew": clock.skew}
    sidecar = {
        "method": method,
        "clock": clock_info,
        "source_meta": {k: v for k, v in stream.meta.items() if k != "path"}
        | {"path": str(config["input"])},
        "stats": stats.as_dict(),
    }
    fileio.write_bits(config["out"], buf, sidecar)
    return [config["out"], str(config["out"]) + ".json"]


def _core_analyze(config: dict) -> list[str]:
    buf = fileio.read_bits(config["input"])
    stats = None
    sidecar_path = str(config["input"]) + ".json"
    if Path(sidecar_path).exists():
        with open(sidecar_path) as fh:
            side = json.load(fh)
        from .extraction import ExtractionStats
        if isinstance(side.get("stats"), dict):
            s = side["stats"]
            stats = ExtractionStats(
                events_consumed=s.get("events_consumed", 0),
                intervals_formed=s.get("intervals_formed", 0),
                pairs_formed=s.get("pairs_formed", 0),
                ties_discarded=s.get("ties_discarded", 0),
                bits_emitted=s.get("bits_emitted", 0))
    report = ent_battery(buf, stats=stats, k_max=config["max_lag"])
    outputs = []
    fileio.write_report_json(config["json"], report)
    outputs.append(config["json"])
    fileio.write_report_text(config["text"], report)
    outputs.append(config["text"])
    if config.get("figure"):
        plotting.plot_report(report, config["figure"])
        outputs.append(config["figure"])
    return outputs


def _core_sweep(config: dict) -> list[str]:
    spec = SweepSpec(
        method=config["method"], x_grid=tuple(config["x_grid"]),
        events_per_point=config["events_per_point"],
        dead_time=config["dead_time"], skew=config["skew"],
        seed=config["seed"], replicates=config["replicates"])
    result = sweep(spec, jobs=config.get("jobs", 1))
    fileio.write_sweep_csv(config["out"], result)
    outputs = [config["out"]]
    if config.get("figure"):
        plotting.plot_sweep(result, config["figure"])
        outputs.append(config["figure"])
    return outputs


def _core_ingest(config: dict) -> list[str]:
    stream = fileio.read_timestamps(config["input"], config.get("format"))
    fileio.write_timestamps_bin(config["out"], stream)
    return [config["out"]]


def _run_validation(config: dict) -> dict:
    check = config["check"]
    if check == "dead-time":
        return validate_dead_time_cancellation(
            config["x"], config["dead_times"], n_bits=config["n_bits"],
            seed=config["seed"])
    if check == "bias-model":
        return validate_bias_model([config["x"]], config["dt"],
                                   n_bits=config["n_bits"], seed=config["seed"])
    if check == "prototype":
        report = reproduce_prototype(config["n_events"], seed=config["seed"])
        report.pop("_report_obj", None)
        return report
    raise ConfigurationError(f"unknown check {check!r}")


def _core_validate(config: dict) -> list[str]:
    report = _run_validation(config)
    if config.get("out"):
        fileio.write_json(config["out"], {"check": config["check"], **report})
        return [config["out"]]
    return []


_CORE_COMMANDS = {
    "simulate": _core_simulate,
    "extract": _core_extract,
    "analyze": _core_analyze,
    "sweep": _core_sweep,
    "ingest": _core_ingest,
    "validate": _core_validate,
}


# --------------------------------------------------------------------------
# argument parsing

def _positive(value: float, flag: str) -> float:
    if not value > 0:
        raise ConfigurationError(f"{flag} must be > 0, got {value}")
    return value


def parse_x_grid(text: str) -> tuple:
    """Grid forms: 'a,b,c' or 'lo:hi:logN' or 'lo:hi:linN'."""
    text = text.strip()
    if ":" in text:
        lo_s, hi_s, kind = text.split(":")
        lo, hi = float(lo_s), float(hi_s)
        if kind.startswith("log"):
            n = int(kind[3:])
            return tuple(np.geomspace(lo, hi, n))
        if kind.startswith("lin"):
            n = int(kind[3:])
            return tuple(np.linspace(lo, hi, n))
        raise ConfigurationError(f"--x: unknown grid kind {kind!r}")
    return tuple(float(v) for v in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tqrng",
        description="Timing-based random bit generation: simulator, "
                    "extractors, statistics, experiment harness.")
    parser.add_argument("--version", action="version",
                        version=f"tqrng {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a detection-pulse stream")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--rate", help="mean detected-pulse rate (e.g. 2e6, 2MHz)")
    g.add_argument("--tau", help="mean interval between pulses (e.g. 500ns)")
    p.add_argument("--events", required=True,
                   help="number of detected events to emit (e.g. 1e6)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dead-time", default="0", help="detector dead time (e.g. 25ns)")
    p.add_argument("--afterpulse-prob", type=float, default=0.0)
    p.add_argument("--afterpulse-tau", default="0",
                   help="afterpulse delay constant (e.g. 1us)")
    p.add_argument("--out", required=True, help="output timestamp file (u64 ns)")

    p = sub.add_parser("extract", help="extract bits from a timestamp file")
    p.add_argument("input", help="timestamp file (binary ns or CSV seconds)")
    p.add_argument("--format", choices=["bin", "csv"],
                   help="input format (default: by extension)")
    p.add_argument("--method", required=True, choices=["exact", "restart", "clock"])
    p.add_argument("--clock", help="clock frequency (e.g. 48e6, 48MHz)")
    p.add_argument("--clock-mode", choices=[RESTARTABLE, CONTINUOUS],
                   default=CONTINUOUS,
                   help="clock mode for --method clock (default continuous)")
    p.add_argument("--phase", type=float, default=0.0,
                   help="initial clock phase as a fraction of the period [0,1)")
    p.add_argument("--skew", default="0",
                   help="up/down switching skew in seconds (e.g. 2.4ns)")
    p.add_argument("-o", "--out", required=True, help="output bit file")

    p = sub.add_parser("analyze", help="statistics battery over a bit file")
    p.add_argument("input", help="packed bit file")
    p.add_argument("--max-lag", type=int, default=32)
    p.add_argument("--json", help="JSON report path (default <input>.report.json)")
    p.add_argument("--text", help="text report path (default <input>.report.txt)")
    p.add_argument("--figure", help="figure path (default <input>.report.png)")
    p.add_argument("--no-figure", action="store_true")

    p = sub.add_parser("sweep", help="sweep extraction statistics over x = T/tau")
    p.add_argument("--method", required=True, choices=[CONTINUOUS, RESTARTABLE])
    p.add_argument("--x", required=True,
                   help="grid: 'a,b,c' or 'lo:hi:logN' or 'lo:hi:linN'")
    p.add_argument("--events-per-point", default="1e7")
    p.add_argument("--dead-time", type=float, default=0.0,
                   help="dead time in units of tau")
    p.add_argument("--skew", type=float, default=0.0, help="skew in units of tau")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--no-figure", action="store_true")

    p = sub.add_parser("validate", help="statistical validation checks")
    p.add_argument("--check", required=True,
                   choices=["dead-time", "bias-model", "prototype"])
    p.add_argument("--x", default="0.3", help="x value (dead-time/bias-model)")
    p.add_argument("--dead-times", default="0,0.05",
                   help="comma list in units of tau (dead-time check)")
    p.add_argument("--dt", default="0.02",
                   help="comma list of skew/tau values (bias-model check)")
    p.add_argument("--bits", default="2e6", help="bits per measured point")
    p.add_argument("--events", default="1e7", help="events (prototype check)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON report here")

    p = sub.add_parser("ingest", help="normalize a timestamp file to binary ns")
    p.add_argument("input")
    p.add_argument("--format", choices=["bin", "csv"])
    p.add_argument("--out", required=True)

    p = sub.add_parser("oracle", help="closed-form restartable-clock law at x")
    p.add_argument("--x", required=True, type=float, help="ratio T/tau")
    p.add_argument("--out", help="write the JSON here (default: stdout)")

    return parser


# --------------------------------------------------------------------------
# command handlers

def _cmd_simulate(args) -> int:
    t0 = time.monotonic()
    if args.rate is not None:
        rate = parse_quantity(args.rate, "--rate")
        _positive(rate, "--rate")
        tau = 1.0 / rate
    else:
        tau = parse_quantity(args.tau, "--tau")
        _positive(tau, "--tau")
    config = {
        "tau": tau,
        "n_events": parse_count(args.events, "--events"),
        "seed": args.seed,
        "dead_time": parse_quantity(args.dead_time, "--dead-time"),
        "afterpulse_prob": args.afterpulse_prob,
        "afterpulse_tau": parse_quantity(args.afterpulse_tau, "--afterpulse-tau"),
        "out": str(args.out),
    }
    outputs = _core_simulate(config)
    _write_manifest(args.out, "simulate", config, [], outputs, args.seed, t0)
    return 0


def _cmd_extract(args) -> int:
    t0 = time.monotonic()
    config = {"input": str(args.input), "format": args.format,
              "method": args.method, "out": str(args.out)}
    if args.method != "exact":
        if args.clock is None:
            raise ConfigurationError("--clock is required for clocked methods")
        hz = parse_quantity(args.clock, "--clock")
        _positive(hz, "--clock")
        period = 1.0 / hz
        mode = RESTARTABLE if args.method == "restart" else args.clock_mode
        if not 0 <= args.phase < 1:
            raise ConfigurationError(
                f"--phase must be a period fraction in [0, 1), got {args.phase}")
        config.update({
            "period": period,
            "mode": mode,
            "phase": args.phase * period if mode == CONTINUOUS else 0.0,
            "skew": parse_quantity(args.skew, "--skew"),
        })
    outputs = _core_extract(config)
    _write_manifest(args.out, "extract", config, [config["input"]], outputs,
                    None, t0)
    return 0


def _cmd_analyze(args) -> int:
    t0 = time.monotonic()
    base = str(args.input)
    config = {
        "input": base,
        "max_lag": args.max_lag,
        "json": args.json or base + ".report.json",
        "text": args.text or base + ".report.txt",
        "figure": None if args.no_figure else (args.figure or base + ".report.png"),
    }
    outputs = _core_analyze(config)
    _write_manifest(config["json"], "analyze", config, [base], outputs, None, t0)
    return 0


def _cmd_sweep(args) -> int:
    t0 = time.monotonic()
    config = {
        "method": args.method,
        "x_grid": [float(v) for v in parse_x_grid(args.x)],
        "events_per_point": parse_count(args.events_per_point,
                                        "--events-per-point"),
        "dead_time": args.dead_time,
        "skew": args.skew,
        "seed": args.seed,
        "replicates": args.replicates,
        "jobs": args.jobs,
        "out": str(args.out),
        "figure": None if args.no_figure else str(args.out) + ".png",
    }
    outputs = _core_sweep(config)
    _write_manifest(args.out, "sweep", config, [], outputs, args.seed, t0)
    return 0


def _cmd_validate(args) -> int:
    t0 = time.monotonic()
    config = {
        "check": args.check,
        "x": float(args.x),
        "dead_times": [float(v) for v in args.dead_times.split(",")],
        "dt": [float(v) for v in args.dt.split(",")],
        "n_bits": parse_count(args.bits, "--bits"),
        "n_events": parse_count(args.events, "--events"),
        "seed": args.seed,
        "out": str(args.out) if args.out else None,
    }
    report = _run_validation(config)
    if args.check == "prototype":
        sys.stdout.write(
            "efficiency %(efficiency).6f bits per event\n" % report["stats"])
    if config["out"]:
        fileio.write_json(config["out"], {"check": args.check, **report})
        _write_manifest(config["out"], "validate", config, [],
                        [config["out"]], args.seed, t0)
    sys.stdout.write(json.dumps(
        {"check": args.check, "passed": report["passed"]}) + "\n")
    return 0 if report["passed"] else 1


def _cmd_ingest(args) -> int:
    t0 = time.monotonic()
    config = {"input": str(args.input), "format": args.format,
              "out": str(args.out)}
    outputs = _core_ingest(config)
    _write_manifest(args.out, "ingest", config, [config["input"]], outputs,
                    None, t0)
    return 0


def _cmd_oracle(args) -> int:
    t0 = time.monotonic()
    result = oracle_restartable(args.x)
    payload = {"schema_version": SCHEMA_VERSION, **result.as_dict()}
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        _write_manifest(args.out, "oracle", {"x": args.x, "out": str(args.out)},
                        [], [str(args.out)], None, t0)
    sys.stdout.write(text)
    return 0


_HANDLERS = {
    "simulate": _cmd_simulate,
    "extract": _cmd_extract,
    "analyze": _cmd_analyze,
    "sweep": _cmd_sweep,
    "validate": _cmd_validate,
    "ingest": _cmd_ingest,
    "oracle": _cmd_oracle,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except ConfigurationError as exc:
        print(f"tqrng {args.command}: {exc}", file=sys.stderr)
        return 2
    except (DataFormatError, InsufficientDataError) as exc:
        print(f"tqrng {args.command}: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"tqrng {args.command}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
