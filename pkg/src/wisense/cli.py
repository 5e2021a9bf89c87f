"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 nothing detected
(no breathing rhythm / constant series), 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .core import BANDS_HZ, SubcarrierGrid
from .detect import DetectorParams, EventInterval, band_sensitivity_ratio
from .dsp import smooth_series
from .errors import (
    ConfigError,
    InputError,
    InsufficientDataError,
    NoPeriodicityError,
    TraceFormatError,
    ValidationError,
)
from .io import read_trace, write_trace
from .pipeline import (
    DEFAULT_WINDOW,
    MOTION_AGGREGATE,
    RESPIRATION_AGGREGATE,
    analyze_motion,
    analyze_respiration,
    scalar_series,
)
from .scenario import load_scenario
from .sim import reflected_phase_excursion

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NEGATIVE = 3
EXIT_IO = 4

SWEEP_PATH_RANGE_M = (2.0, 4.0)


@dataclass
class RunReport:
    command: str
    params_echo: dict
    events: List[EventInterval] = field(default_factory=list)
    rate_hz: Optional[float] = None
    band_ratio: Optional[float] = None
    timings_ms: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "command": self.command,
            "params_echo": self.params_echo,
            "events": [e.to_dict() for e in self.events],
            "rate_hz": self.rate_hz,
            "band_ratio": self.band_ratio,
            "timings_ms": self.timings_ms,
        }
        out.update(self.extra)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


class _Timer:
    def __init__(self):
        self.stages = {}

    @contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.stages[name] = round((time.perf_counter() - t0) * 1e3, 3)


def _say(message):
    print(message, file=sys.stderr)


def _parse_overrides(pairs) -> DetectorParams:
    overrides = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value, got {pair!r}", field="--set")
        try:
            overrides[key.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"not a number: {value!r}", field=key.strip()) from None
    return DetectorParams().replace(**overrides)


def _aggregate_arg(text: str):
    if text in ("mean", "max_variance"):
        return text
    if text.startswith("single:"):
        try:
            return ("single", int(text.split(":", 1)[1]))
        except ValueError:
            pass
    raise argparse.ArgumentTypeError(f"expected mean, max_variance or single:K, got {text!r}")


def _aggregate_str(method) -> str:
    return method if isinstance(method, str) else f"single:{method[1]}"


def cmd_simulate(args) -> int:
    config = load_scenario(args.scenario)
    grid = SubcarrierGrid.for_band(args.band)
    trace = config.synthesize(grid, args.seed)
    trace = dataclasses.replace(trace, label=f"{config.kind} {args.band} seed={args.seed}")
    size = write_trace(trace, args.out, "binary")
    _say(
        f"wrote {args.out}: {config.kind}, {len(trace)} frames, "
        f"{trace.duration_s:.2f} s, band {args.band} "
        f"({grid.center_frequency_hz / 1e9:g} GHz), {size} bytes"
    )
    return EXIT_OK


def cmd_process(args) -> int:
    trace = read_trace(args.trace, "binary")
    n = len(trace)
    columns = {"t_s": trace.timestamps}
    empty = np.full(n, np.nan)
    if trace.has_cfr and n:
        raw = scalar_series(trace, args.aggregate)
        columns["cfr_raw"], columns["cfr_smoothed"] = raw, smooth_series(raw, args.window)
    else:
        _say("warning: trace has no CFR stream; CFR columns left empty")
        columns["cfr_raw"] = columns["cfr_smoothed"] = empty
    if trace.has_rssi and n:
        raw = trace.rssi_db.astype(np.float64)
        columns["rssi_raw"], columns["rssi_smoothed"] = raw, smooth_series(raw, args.window)
    else:
        _say("warning: trace has no RSSI stream; RSSI columns left empty")
        columns["rssi_raw"] = columns["rssi_smoothed"] = empty

    names = list(columns)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(names)
        for i in range(n):
            writer.writerow(
                "" if math.isnan(columns[c][i]) else repr(float(columns[c][i])) for c in names
            )
    _say(f"wrote {args.out}: {n} rows, window {args.window}")
    return EXIT_OK


def _detect_echo(args, params: DetectorParams, aggregate) -> dict:
    return {
        "trace": str(args.trace),
        "mode": args.mode,
        "window": args.window,
        "aggregate": _aggregate_str(aggregate),
        "detector": dataclasses.asdict(params),
    }


def argv_from_echo(echo: dict) -> List[str]:
    """Command line that reproduces a ``detect`` run from its ``params_echo``."""
    argv = ["detect", echo["trace"], "--mode", echo["mode"],
            "--window", str(echo["window"]), "--aggregate", echo["aggregate"]]
    for key, value in echo["detector"].items():
        argv += ["--set", f"{key}={value!r}"]
    return argv


def cmd_detect(args) -> int:
    timer = _Timer()
    params = _parse_overrides(args.set)
    aggregate = args.aggregate or (
        RESPIRATION_AGGREGATE if args.mode == "respiration" else MOTION_AGGREGATE
    )
    report = RunReport("detect", _detect_echo(args, params, aggregate))
    with timer.stage("read"):
        trace = read_trace(args.trace, "binary")
    status = EXIT_OK
    with timer.stage("detect"):
        if args.mode == "respiration":
            try:
                result = analyze_respiration(trace, args.window, params, aggregate)
                report.rate_hz = result.rate_hz
                report.events = result.holds
            except NoPeriodicityError as exc:
                report.extra["error"] = f"no periodicity: {exc}"
                status = EXIT_NEGATIVE
        else:
            report.events = analyze_motion(trace, args.window, params, aggregate)
    report.timings_ms = timer.stages
    print(report.to_json())

    if status == EXIT_NEGATIVE:
        _say(f"no breathing rhythm found in {args.trace}")
    elif args.mode == "respiration":
        _say(f"respiration rate {report.rate_hz:.4f} Hz ({report.rate_hz * 60:.1f} /min), "
             f"{len(report.events)} breath-hold(s)")
    else:
        _say(f"{len(report.events)} motion episode(s)")
    for ev in report.events:
        _say(f"  {ev.kind:<12} {ev.start_s:8.2f} s .. {ev.end_s:8.2f} s  score {ev.score:.4g}")
    return status


def _band_series(config, band, seed, window, aggregate) -> np.ndarray:
    trace = config.synthesize(SubcarrierGrid.for_band(band), seed)
    smoothed = smooth_series(scalar_series(trace, aggregate), window)
    return smoothed[window - 1:]


def cmd_compare_bands(args) -> int:
    config = load_scenario(args.scenario)
    if config.kind != "respiration":
        raise ConfigError("compare-bands needs a respiration scenario", field="kind")
    timer = _Timer()
    low_band, high_band = "2.4GHz", "6GHz"
    amp = config.scenario.chest_amplitude_m
    excursion = {b: reflected_phase_excursion(BANDS_HZ[b], amp) for b in (low_band, high_band)}

    configs = [config]
    if args.sweep:
        rng = np.random.default_rng(args.seed)
        lengths = rng.uniform(*SWEEP_PATH_RANGE_M, size=args.sweep)
        configs = [
            dataclasses.replace(
                config, channel=dataclasses.replace(config.channel, static_path_length_m=float(L))
            )
            for L in lengths
        ]

    ratios, p2p = [], {low_band: [], high_band: []}
    with timer.stage("simulate+process"), ThreadPoolExecutor(max_workers=2) as pool:
        for cfg in configs:
            low, high = pool.map(
                lambda b: _band_series(cfg, b, args.seed, args.window, args.aggregate),
                (low_band, high_band),
            )
            ratios.append(band_sensitivity_ratio(low, high))
            p2p[low_band].append(float(np.ptp(low)))
            p2p[high_band].append(float(np.ptp(high)))

    report = RunReport(
        "compare-bands",
        {"scenario": str(args.scenario), "seed": args.seed, "sweep": args.sweep,
         "window": args.window, "aggregate": _aggregate_str(args.aggregate)},
        band_ratio=float(np.mean(ratios)),
        timings_ms=timer.stages,
        extra={
            "peak_to_peak": {b: float(np.mean(v)) for b, v in p2p.items()},
            "phase_excursion_rad": excursion,
            "phase_excursion_ratio": excursion[high_band] / excursion[low_band],
            "ratios": ratios,
        },
    )
    print(report.to_json())
    _say(f"peak-to-peak {low_band}: {report.extra['peak_to_peak'][low_band]:.6g}  "
         f"{high_band}: {report.extra['peak_to_peak'][high_band]:.6g}")
    _say(f"band sensitivity ratio {high_band}/{low_band}: {report.band_ratio:.4f}"
         + (f" (mean over {len(ratios)} path lengths)" if args.sweep else ""))
    _say(f"phase excursion {high_band}/{low_band} = {report.extra['phase_excursion_ratio']:.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wisense", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize a trace from a scenario file")
    p.add_argument("scenario", type=Path)
    p.add_argument("-o", "--out", type=Path, required=True)
    p.add_argument("--band", choices=sorted(BANDS_HZ), default="2.4GHz")
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("process", help="write raw and smoothed CFR/RSSI series as CSV")
    p.add_argument("trace", type=Path)
    p.add_argument("-o", "--out", type=Path, required=True)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--aggregate", type=_aggregate_arg, default=RESPIRATION_AGGREGATE)
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("detect", help="detect breathing/breath-holds or motion")
    p.add_argument("trace", type=Path)
    p.add_argument("--mode", choices=("respiration", "motion"), required=True)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--aggregate", type=_aggregate_arg, default=None,
                   help="default: max_variance for respiration, mean for motion")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a detector parameter, e.g. --set min_hold_s=8")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("compare-bands", help="compare 2.4 GHz and 6 GHz sensitivity")
    p.add_argument("scenario", type=Path)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--sweep", type=int, default=0, metavar="N",
                   help="average over N random static path lengths")
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--aggregate", type=_aggregate_arg, default=RESPIRATION_AGGREGATE)
    p.set_defaults(func=cmd_compare_bands)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "window", 1) < 1:
        parser.error("--window must be at least 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        _say(f"configuration error: {exc}")
        return EXIT_CONFIG
    except (TraceFormatError, OSError) as exc:
        _say(f"I/O error: {exc}")
        return EXIT_IO
    except (NoPeriodicityError, InputError, InsufficientDataError) as exc:
        _say(f"nothing detected: {exc}")
        return EXIT_NEGATIVE
    except ValidationError as exc:
        _say(f"invalid data: {exc}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
