"""Scenario configuration files.

A scenario file is YAML::

    schema_version: 1
    kind: respiration            # or: motion
    sample_rate_hz: 100
    tx_power_mw: 1.0
    channel:
      los_gain: [1.0, 0.0]       # real, imaginary
      reflected_gain_magnitude: 0.2
      static_path_length_m: 3.03
      noise_snr_db: 20           # or: noiseless
    respiration:
      breath_rate_hz: 0.25
      chest_amplitude_m: 0.005
      duration_s: 230
      hold_intervals: [[60, 100], [160, 200]]

A motion scenario replaces the ``respiration`` section with::

    motion:
      waypoints: [[-2.5, 2.0], [7.5, 2.0]]
      speed_mps: 0.5
      tx_position: [0.0, 0.0]
      rx_position: [5.0, 0.0]
      dwell_s: 10
      duration_s: 40

Everything except ``schema_version`` and ``kind`` has a default. The random
seed is not part of the file; it is supplied when synthesizing.
Errors are raised as :class:`~wisense.errors.ConfigError` carrying the
offending field path and, when known, its line number.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import yaml

from .core import SubcarrierGrid, Trace
from .errors import ConfigError
from .sim import (
    DEFAULT_SAMPLE_RATE_HZ,
    DEFAULT_TX_POWER_MW,
    ChannelModel,
    MotionScenario,
    RespirationScenario,
    synthesize_motion,
    synthesize_respiration,
)

SCHEMA_VERSION = 1
KINDS = ("respiration", "motion")

_TOP_KEYS = {"schema_version", "kind", "sample_rate_hz", "tx_power_mw", "channel", *KINDS}
_CHANNEL_KEYS = {"los_gain", "reflected_gain_magnitude", "static_path_length_m", "noise_snr_db"}
_SECTION_TYPES = {"respiration": RespirationScenario, "motion": MotionScenario}


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    scenario: Union[RespirationScenario, MotionScenario]
    channel: ChannelModel = ChannelModel()
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    tx_power_mw: float = DEFAULT_TX_POWER_MW

    def synthesize(self, grid: SubcarrierGrid, seed: int) -> Trace:
        channel = dataclasses.replace(self.channel, rng_seed=seed)
        if self.kind == "respiration":
            return synthesize_respiration(self.scenario, channel, grid, self.sample_rate_hz,
                                          self.tx_power_mw)
        return synthesize_motion(self.scenario, channel, grid, self.sample_rate_hz,
                                 self.tx_power_mw)

    def to_dict(self) -> dict:
        ch = self.channel
        section = dataclasses.asdict(self.scenario)
        for key, value in section.items():
            if isinstance(value, tuple):
                section[key] = _lists(value)
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "sample_rate_hz": self.sample_rate_hz,
            "tx_power_mw": self.tx_power_mw,
            "channel": {
                "los_gain": [ch.los_gain.real, ch.los_gain.imag],
                "reflected_gain_magnitude": ch.reflected_gain_magnitude,
                "static_path_length_m": ch.static_path_length_m,
                "noise_snr_db": "noiseless" if ch.noise_snr_db is None else ch.noise_snr_db,
            },
            self.kind: section,
        }


def _lists(value):
    if isinstance(value, (tuple, list)):
        return [_lists(v) for v in value]
    return value


def _line_index(node, prefix="", out=None):
    """Map dotted field paths to 1-based line numbers."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            path = f"{prefix}.{key.value}" if prefix else str(key.value)
            out[path] = key.start_mark.line + 1
            _line_index(value, path, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            path = f"{prefix}[{i}]"
            out[path] = item.start_mark.line + 1
            _line_index(item, path, out)
    return out


def _fail(message, path, lines):
    probe = path
    while probe and probe not in lines:
        probe = re.sub(r"(\.[^.\[]*|\[\d+\])$", "", probe)
    raise ConfigError(message, field=path, line=lines.get(probe))


def parse_scenario(text: str) -> ScenarioConfig:
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}", line=line) from None
    lines = _line_index(root) if root is not None else {}
    if not isinstance(data, dict):
        raise ConfigError("scenario file must be a mapping", line=1)

    for key in data:
        if key not in _TOP_KEYS:
            _fail("unknown field", str(key), lines)
    if "schema_version" not in data:
        raise ConfigError("missing field", field="schema_version")
    if data["schema_version"] != SCHEMA_VERSION:
        _fail(f"unsupported version {data['schema_version']!r}, expected {SCHEMA_VERSION}",
              "schema_version", lines)
    kind = data.get("kind")
    if kind not in KINDS:
        if "kind" not in data:
            raise ConfigError(f"missing field, expected one of {KINDS}", field="kind")
        _fail(f"expected one of {KINDS}, got {kind!r}", "kind", lines)
    other = KINDS[1 - KINDS.index(kind)]
    if other in data:
        _fail(f"section does not belong to a {kind} scenario", other, lines)

    top = {}
    for key in ("sample_rate_hz", "tx_power_mw"):
        if key in data:
            value = data[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
                _fail(f"must be a positive number, got {value!r}", key, lines)
            top[key] = float(value)

    channel_data = data.get("channel") or {}
    if not isinstance(channel_data, dict):
        _fail("must be a mapping", "channel", lines)
    channel_kwargs = {}
    for key, value in channel_data.items():
        path = f"channel.{key}"
        if key not in _CHANNEL_KEYS:
            _fail("unknown field", path, lines)
        if key == "los_gain":
            if isinstance(value, (list, tuple)) and len(value) == 2 and all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
            ):
                value = complex(value[0], value[1])
            elif isinstance(value, (int, float)) and not isinstance(value, bool):
                value = complex(value)
            else:
                _fail(f"expected [real, imag], got {value!r}", path, lines)
        if key == "noise_snr_db" and value == "noiseless":
            value = None
        channel_kwargs[key] = value
    try:
        channel = ChannelModel(**channel_kwargs)
    except ConfigError as exc:
        _fail(exc.reason, f"channel.{exc.field}", lines)

    section = data.get(kind) or {}
    if not isinstance(section, dict):
        _fail("must be a mapping", kind, lines)
    cls = _SECTION_TYPES[kind]
    known = {f.name for f in dataclasses.fields(cls)}
    for key in section:
        if key not in known:
            _fail("unknown field", f"{kind}.{key}", lines)
    try:
        scenario = cls(**{k: _tuples(v) for k, v in section.items()})
    except ConfigError as exc:
        _fail(exc.reason, f"{kind}.{exc.field}", lines)
    except TypeError as exc:
        _fail(str(exc), kind, lines)
    return ScenarioConfig(kind, scenario, channel, **top)


def _tuples(value):
    if isinstance(value, list):
        return tuple(_tuples(v) for v in value)
    return value


def load_scenario(path) -> ScenarioConfig:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))


def dump_scenario(config: ScenarioConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=False)
