"""Two-path channel simulator for respiration and walking scenarios.

The channel is a static line-of-sight gain plus one reflected path whose
delay is modulated by the body: by chest displacement for respiration, by
the walker's position for motion. Optional complex Gaussian noise is added
per subcarrier, and an RSSI stream is derived from the mean received power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import SPEED_OF_LIGHT, CfrFrame, SubcarrierGrid, Trace, uniform_timestamps
from .errors import AliasingError, ConfigError

DEFAULT_SAMPLE_RATE_HZ = 100.0
DEFAULT_TX_POWER_MW = 1.0
MAX_CHEST_AMPLITUDE_M = 0.05

Point = Tuple[float, float]


def _finite(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {value!r}", field=name) from None
    if not math.isfinite(value):
        raise ConfigError(f"must be finite, got {value!r}", field=name)
    return value


def _point(value, name) -> Point:
    try:
        x, y = value
    except (TypeError, ValueError):
        raise ConfigError(f"expected an [x, y] pair, got {value!r}", field=name) from None
    return (_finite(x, name), _finite(y, name))


@dataclass(frozen=True)
class ChannelModel:
    """Static LoS path plus one reflected path of fixed magnitude.

    ``noise_snr_db=None`` means noiseless; otherwise noise power is
    ``|los_gain|**2 / 10**(snr/10)`` per subcarrier.
    """

    los_gain: complex = 1.0 + 0.0j
    reflected_gain_magnitude: float = 0.2
    static_path_length_m: float = 3.03
    noise_snr_db: Optional[float] = None
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "los_gain", complex(self.los_gain))
        r = _finite(self.reflected_gain_magnitude, "reflected_gain_magnitude")
        length = _finite(self.static_path_length_m, "static_path_length_m")
        if not (abs(self.los_gain) > 0 and math.isfinite(abs(self.los_gain))):
            raise ConfigError("must have non-zero finite magnitude", field="los_gain")
        if r < 0:
            raise ConfigError("must be non-negative", field="reflected_gain_magnitude")
        if r >= abs(self.los_gain):
            raise ConfigError("must be smaller than |los_gain|", field="reflected_gain_magnitude")
        if length <= 0:
            raise ConfigError("must be positive", field="static_path_length_m")
        if self.noise_snr_db is not None:
            object.__setattr__(self, "noise_snr_db", _finite(self.noise_snr_db, "noise_snr_db"))
        if isinstance(self.rng_seed, bool) or int(self.rng_seed) != self.rng_seed:
            raise ConfigError("must be an integer", field="rng_seed")
        object.__setattr__(self, "reflected_gain_magnitude", r)
        object.__setattr__(self, "static_path_length_m", length)
        object.__setattr__(self, "rng_seed", int(self.rng_seed))

    @property
    def noise_std(self) -> float:
        if self.noise_snr_db is None:
            return 0.0
        return abs(self.los_gain) / math.sqrt(10 ** (self.noise_snr_db / 10))


@dataclass(frozen=True)
class RespirationScenario:
    """Sinusoidal chest motion with optional breath-hold intervals.

    During a hold the chest stays where it was when the hold began and the
    breathing cycle resumes from that point afterwards, so the displacement
    is continuous at both ends of every hold.
    """

    breath_rate_hz: float = 0.25
    chest_amplitude_m: float = 0.005
    hold_intervals: Tuple[Tuple[float, float], ...] = ()
    duration_s: float = 60.0

    def __post_init__(self):
        rate = _finite(self.breath_rate_hz, "breath_rate_hz")
        amp = _finite(self.chest_amplitude_m, "chest_amplitude_m")
        duration = _finite(self.duration_s, "duration_s")
        if rate <= 0:
            raise ConfigError("must be positive", field="breath_rate_hz")
        if amp < 0 or amp > MAX_CHEST_AMPLITUDE_M:
            raise ConfigError(f"must lie in [0, {MAX_CHEST_AMPLITUDE_M}] m", field="chest_amplitude_m")
        if duration <= 0:
            raise ConfigError("must be positive", field="duration_s")
        holds = []
        prev_end = 0.0
        for i, pair in enumerate(self.hold_intervals):
            name = f"hold_intervals[{i}]"
            start, end = _point(pair, name)
            if not (prev_end <= start < end <= duration):
                raise ConfigError(
                    "hold intervals must be ordered, disjoint, non-empty and inside [0, duration_s]",
                    field=name,
                )
            holds.append((start, end))
            prev_end = end
        object.__setattr__(self, "breath_rate_hz", rate)
        object.__setattr__(self, "chest_amplitude_m", amp)
        object.__setattr__(self, "duration_s", duration)
        object.__setattr__(self, "hold_intervals", tuple(holds))


@dataclass(frozen=True)
class MotionScenario:
    """A walker following ``waypoints`` at ``speed_mps``.

    The walker pauses ``dwell_s`` at every waypoint (including the first)
    and stays at the last waypoint once the path is complete.
    """

    waypoints: Tuple[Point, ...] = ((2.0, 2.0), (2.0, -2.0))
    speed_mps: float = 1.0
    tx_position: Point = (0.0, 0.0)
    rx_position: Point = (4.0, 0.0)
    dwell_s: float = 0.0
    duration_s: float = 30.0

    def __post_init__(self):
        pts = tuple(_point(p, f"waypoints[{i}]") for i, p in enumerate(self.waypoints))
        if len(pts) < 2:
            raise ConfigError("need at least 2 waypoints", field="waypoints")
        speed = _finite(self.speed_mps, "speed_mps")
        dwell = _finite(self.dwell_s, "dwell_s")
        duration = _finite(self.duration_s, "duration_s")
        if speed <= 0:
            raise ConfigError("must be positive", field="speed_mps")
        if dwell < 0:
            raise ConfigError("must be non-negative", field="dwell_s")
        if duration <= 0:
            raise ConfigError("must be positive", field="duration_s")
        object.__setattr__(self, "waypoints", pts)
        object.__setattr__(self, "tx_position", _point(self.tx_position, "tx_position"))
        object.__setattr__(self, "rx_position", _point(self.rx_position, "rx_position"))
        object.__setattr__(self, "speed_mps", speed)
        object.__setattr__(self, "dwell_s", dwell)
        object.__setattr__(self, "duration_s", duration)

    def schedule(self):
        """``(start_s, end_s, from, to)`` for every walking leg."""
        legs = []
        t = 0.0
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            t += self.dwell_s
            travel = math.dist(a, b) / self.speed_mps
            legs.append((t, t + travel, a, b))
            t += travel
        return legs


def chest_displacement(scenario: RespirationScenario, t) -> np.ndarray:
    """Chest displacement in meters at times ``t``; frozen during holds."""
    t = np.asarray(t, dtype=np.float64)
    # breathing clock that stops during holds
    clock = t.copy()
    paused = 0.0
    for start, end in scenario.hold_intervals:
        inside = (t >= start) & (t <= end)
        after = t > end
        clock[inside] = start - paused
        clock[after] = t[after] - paused - (end - start)
        paused += end - start
    return scenario.chest_amplitude_m * np.sin(2 * np.pi * scenario.breath_rate_hz * clock)


def walker_position(scenario: MotionScenario, t) -> np.ndarray:
    """Walker coordinates, shape ``(len(t), 2)``."""
    t = np.asarray(t, dtype=np.float64)
    pos = np.empty(t.shape + (2,))
    pos[:] = scenario.waypoints[0]
    for start, end, a, b in scenario.schedule():
        a = np.asarray(a)
        b = np.asarray(b)
        if end > start:
            frac = np.clip((t - start) / (end - start), 0.0, 1.0)
        else:
            frac = (t >= start).astype(np.float64)
        moving = t >= start
        pos[moving] = a + frac[moving, None] * (b - a)
    return pos


def reflected_phase_excursion(frequency_hz: float, chest_amplitude_m: float) -> float:
    """Peak-to-peak phase swing (rad) of the chest reflection at one frequency.

    The round-trip path changes by twice the chest's peak-to-peak travel,
    i.e. ``4 * chest_amplitude_m``.
    """
    return 2 * math.pi * frequency_hz * 4 * chest_amplitude_m / SPEED_OF_LIGHT


def _two_path_gains(delays_s, grid: SubcarrierGrid, channel: ChannelModel) -> np.ndarray:
    phase = np.multiply.outer(np.asarray(delays_s, dtype=np.float64), -2 * np.pi * grid.frequencies)
    gains = np.empty(phase.shape, dtype=np.complex128)
    np.cos(phase, out=gains.real)
    np.sin(phase, out=gains.imag)
    gains *= channel.reflected_gain_magnitude
    gains += channel.los_gain
    std = channel.noise_std
    if std > 0:
        rng = np.random.default_rng(channel.rng_seed)
        noise = rng.standard_normal(2 * gains.size).view(np.complex128).reshape(gains.shape)
        noise *= std / math.sqrt(2)
        gains += noise
    return gains


def received_power(frame, tx_power_mw: float = DEFAULT_TX_POWER_MW) -> float:
    """Received power in mW: transmit power times mean ``|H|**2`` over subcarriers."""
    gains = frame.gains if isinstance(frame, CfrFrame) else np.asarray(frame)
    return float(tx_power_mw * np.mean(np.abs(gains) ** 2))


def quantize_rssi(power_mw: float) -> int:
    """Power in mW to integer dBm, rounding halves to even."""
    power_mw = float(power_mw)
    if not power_mw > 0 or not math.isfinite(power_mw):
        raise ValueError(f"received power must be positive and finite, got {power_mw!r}")
    return int(round(10 * math.log10(power_mw)))


def _rssi_stream(gains: np.ndarray, tx_power_mw: float) -> np.ndarray:
    powers = tx_power_mw * np.mean(np.abs(gains) ** 2, axis=1)
    return np.array([quantize_rssi(p) for p in powers], dtype=np.int64)


def _slots(duration_s: float, sample_rate_hz: float) -> np.ndarray:
    if not (sample_rate_hz > 0 and math.isfinite(sample_rate_hz)):
        raise ConfigError("must be positive", field="sample_rate_hz")
    return uniform_timestamps(int(round(duration_s * sample_rate_hz)), sample_rate_hz)


def synthesize_respiration(
    scenario: RespirationScenario,
    channel: ChannelModel,
    grid: SubcarrierGrid,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    tx_power_mw: float = DEFAULT_TX_POWER_MW,
    label: str = "respiration",
) -> Trace:
    """Simulate a breathing subject between a fixed transmitter and receiver."""
    if sample_rate_hz < 4 * scenario.breath_rate_hz:
        raise AliasingError(
            f"{sample_rate_hz} Hz is below 4x the breathing rate {scenario.breath_rate_hz} Hz",
            field="sample_rate_hz",
        )
    t = _slots(scenario.duration_s, sample_rate_hz)
    delays = (channel.static_path_length_m + 2 * chest_displacement(scenario, t)) / SPEED_OF_LIGHT
    gains = _two_path_gains(delays, grid, channel)
    return Trace(grid, sample_rate_hz, t, gains, _rssi_stream(gains, tx_power_mw), label)


def synthesize_motion(
    scenario: MotionScenario,
    channel: ChannelModel,
    grid: SubcarrierGrid,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    tx_power_mw: float = DEFAULT_TX_POWER_MW,
    label: str = "motion",
) -> Trace:
    """Simulate a person walking through the room."""
    t = _slots(scenario.duration_s, sample_rate_hz)
    pos = walker_position(scenario, t)
    path = (np.hypot(*(pos - scenario.tx_position).T)
            + np.hypot(*(pos - scenario.rx_position).T))
    gains = _two_path_gains(path / SPEED_OF_LIGHT, grid, channel)
    return Trace(grid, sample_rate_hz, t, gains, _rssi_stream(gains, tx_power_mw), label)
