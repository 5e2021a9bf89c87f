"""Shared data model: subcarrier grid, CFR frames, RSSI samples and traces.

Arrays held by these objects are copied on construction and marked read-only,
so instances can be shared freely between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import SubcarrierIndexError, ValidationError

SPEED_OF_LIGHT = 299_792_458.0

DEFAULT_NUM_SUBCARRIERS = 245
DEFAULT_BANDWIDTH_HZ = 20e6
DEFAULT_SPACING_HZ = DEFAULT_BANDWIDTH_HZ / 256  # 78.125 kHz

BANDS_HZ = {"2.4GHz": 2.4e9, "6GHz": 6.0e9}

_TIMESTAMP_RTOL = 1e-6


def _frozen(array, dtype):
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SubcarrierGrid:
    """OFDM subcarrier layout, symmetric around the center frequency."""

    center_frequency_hz: float
    bandwidth_hz: float = DEFAULT_BANDWIDTH_HZ
    num_subcarriers: int = DEFAULT_NUM_SUBCARRIERS
    subcarrier_spacing_hz: float = DEFAULT_SPACING_HZ

    def __post_init__(self):
        if not (self.center_frequency_hz > 0 and math.isfinite(self.center_frequency_hz)):
            raise ValidationError("center_frequency_hz must be positive and finite")
        if not (self.bandwidth_hz > 0 and math.isfinite(self.bandwidth_hz)):
            raise ValidationError("bandwidth_hz must be positive and finite")
        if self.subcarrier_spacing_hz <= 0:
            raise ValidationError("subcarrier_spacing_hz must be positive")
        if int(self.num_subcarriers) != self.num_subcarriers or self.num_subcarriers < 1:
            raise ValidationError("num_subcarriers must be a positive integer")
        if self.subcarrier_spacing_hz * (self.num_subcarriers - 1) > self.bandwidth_hz:
            raise ValidationError("subcarriers do not fit inside the bandwidth")
        object.__setattr__(self, "num_subcarriers", int(self.num_subcarriers))

    @classmethod
    def for_band(cls, band: str | float) -> "SubcarrierGrid":
        """Default 20 MHz / 245-subcarrier grid for a named band or a center frequency."""
        center = BANDS_HZ[band] if isinstance(band, str) else float(band)
        return cls(center_frequency_hz=center)

    def frequency(self, k: int) -> float:
        return subcarrier_frequency(self, k)

    @property
    def frequencies(self) -> np.ndarray:
        offsets = np.arange(self.num_subcarriers) - (self.num_subcarriers - 1) / 2
        return self.center_frequency_hz + offsets * self.subcarrier_spacing_hz


def subcarrier_frequency(grid: SubcarrierGrid, k: int) -> float:
    """Center frequency of subcarrier ``k`` in Hz."""
    if isinstance(k, bool) or int(k) != k or not 0 <= k < grid.num_subcarriers:
        raise SubcarrierIndexError(
            f"subcarrier index {k} outside [0, {grid.num_subcarriers})"
        )
    offset = int(k) - (grid.num_subcarriers - 1) / 2
    return grid.center_frequency_hz + offset * grid.subcarrier_spacing_hz


@dataclass(frozen=True, eq=False)
class CfrFrame:
    """Complex channel gains of one time slot, one entry per subcarrier."""

    timestamp_s: float
    gains: np.ndarray

    def __post_init__(self):
        if not (self.timestamp_s >= 0 and math.isfinite(self.timestamp_s)):
            raise ValidationError(f"invalid frame timestamp {self.timestamp_s!r}")
        gains = _frozen(self.gains, np.complex128)
        if gains.ndim != 1:
            raise ValidationError("frame gains must be one-dimensional")
        if not np.all(np.isfinite(gains)):
            raise ValidationError("frame gains must be finite")
        object.__setattr__(self, "gains", gains)

    def __eq__(self, other):
        if not isinstance(other, CfrFrame):
            return NotImplemented
        return (self.timestamp_s == other.timestamp_s
                and self.gains.tobytes() == other.gains.tobytes())


def amplitudes(frame: CfrFrame) -> np.ndarray:
    """Per-subcarrier amplitude ``|H(f_k, t)|`` of a frame."""
    return np.abs(frame.gains)


@dataclass(frozen=True)
class RssiSample:
    timestamp_s: float
    rssi_db: int

    def __post_init__(self):
        if not (self.timestamp_s >= 0 and math.isfinite(self.timestamp_s)):
            raise ValidationError(f"invalid sample timestamp {self.timestamp_s!r}")
        if isinstance(self.rssi_db, bool) or int(self.rssi_db) != self.rssi_db:
            raise ValidationError(f"rssi_db must be an integer, got {self.rssi_db!r}")
        object.__setattr__(self, "rssi_db", int(self.rssi_db))


def _check_timestamps(ts: np.ndarray, sample_rate_hz: float) -> None:
    if ts.size == 0:
        return
    if not np.all(np.isfinite(ts)) or ts[0] < 0:
        raise ValidationError("timestamps must be finite and non-negative")
    steps = np.diff(ts)
    if np.any(steps <= 0):
        bad = int(np.argmax(steps <= 0)) + 1
        raise ValidationError(f"timestamps not strictly increasing at slot {bad}")
    period = 1.0 / sample_rate_hz
    # relative to the nominal period, plus float64 resolution at the largest timestamp
    tol = _TIMESTAMP_RTOL * period + 4 * np.spacing(max(abs(ts[-1]), 1.0))
    off = np.abs(steps - period) > tol
    if np.any(off):
        bad = int(np.argmax(off)) + 1
        raise ValidationError(
            f"timestamp step at slot {bad} is {steps[bad - 1]!r}, expected {period!r}"
        )


@dataclass(frozen=True, eq=False)
class Trace:
    """Uniformly sampled CFR and RSSI streams from one antenna.

    Either stream may be absent (``None``). When both are present they share
    ``timestamps``. ``gains`` has shape ``(slots, num_subcarriers)``.
    """

    grid: SubcarrierGrid
    sample_rate_hz: float
    timestamps: np.ndarray
    gains: Optional[np.ndarray] = None
    rssi_db: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self):
        if not (self.sample_rate_hz > 0 and math.isfinite(self.sample_rate_hz)):
            raise ValidationError("sample_rate_hz must be positive and finite")
        ts = _frozen(self.timestamps, np.float64)
        if ts.ndim != 1:
            raise ValidationError("timestamps must be one-dimensional")
        _check_timestamps(ts, self.sample_rate_hz)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))
        object.__setattr__(self, "label", str(self.label))

        if self.gains is not None:
            gains = _frozen(self.gains, np.complex128)
            if gains.ndim != 2 or gains.shape != (ts.size, self.grid.num_subcarriers):
                raise ValidationError(
                    f"gains shape {gains.shape} does not match "
                    f"({ts.size}, {self.grid.num_subcarriers})"
                )
            if not np.all(np.isfinite(gains)):
                raise ValidationError("gains must be finite")
            object.__setattr__(self, "gains", gains)

        if self.rssi_db is not None:
            raw = np.asarray(self.rssi_db)
            if raw.shape != ts.shape:
                raise ValidationError("rssi stream length differs from timestamps")
            if raw.size and not np.all(np.equal(np.round(raw), raw)):
                raise ValidationError("rssi values must be integers")
            object.__setattr__(self, "rssi_db", _frozen(raw, np.int64))

    @classmethod
    def from_frames(
        cls,
        grid: SubcarrierGrid,
        sample_rate_hz: float,
        cfr_frames: Sequence[CfrFrame] = (),
        rssi_samples: Sequence[RssiSample] = (),
        label: str = "",
    ) -> "Trace":
        cfr_frames = list(cfr_frames)
        rssi_samples = list(rssi_samples)
        if cfr_frames and rssi_samples:
            if len(cfr_frames) != len(rssi_samples):
                raise ValidationError("CFR and RSSI streams differ in length")
            for i, (f, s) in enumerate(zip(cfr_frames, rssi_samples)):
                if f.timestamp_s != s.timestamp_s:
                    raise ValidationError(f"CFR/RSSI timestamps differ at slot {i}")
        source = cfr_frames or rssi_samples
        ts = np.array([x.timestamp_s for x in source], dtype=np.float64)
        gains = None
        if cfr_frames:
            for i, f in enumerate(cfr_frames):
                if f.gains.shape != (grid.num_subcarriers,):
                    raise ValidationError(
                        f"frame {i} has {f.gains.size} gains, expected {grid.num_subcarriers}"
                    )
            gains = np.stack([f.gains for f in cfr_frames])
        rssi = np.array([s.rssi_db for s in rssi_samples], dtype=np.int64) if rssi_samples else None
        return cls(grid, sample_rate_hz, ts, gains, rssi, label)

    def __len__(self):
        return int(self.timestamps.size)

    @property
    def num_subcarriers(self) -> int:
        return self.grid.num_subcarriers

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    @property
    def has_cfr(self) -> bool:
        return self.gains is not None

    @property
    def has_rssi(self) -> bool:
        return self.rssi_db is not None

    @property
    def cfr_frames(self) -> tuple:
        if self.gains is None:
            return ()
        return tuple(CfrFrame(float(t), g) for t, g in zip(self.timestamps, self.gains))

    @property
    def rssi_samples(self) -> tuple:
        if self.rssi_db is None:
            return ()
        return tuple(RssiSample(float(t), int(r)) for t, r in zip(self.timestamps, self.rssi_db))

    def amplitude_matrix(self) -> np.ndarray:
        """``|gains|`` with shape ``(slots, num_subcarriers)``."""
        if self.gains is None:
            raise ValidationError("trace has no CFR stream")
        return np.abs(self.gains)

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented

        def same(a, b):
            if a is None or b is None:
                return a is None and b is None
            return a.shape == b.shape and a.tobytes() == b.tobytes()

        return (
            self.grid == other.grid
            and self.sample_rate_hz == other.sample_rate_hz
            and self.label == other.label
            and same(self.timestamps, other.timestamps)
            and same(self.gains, other.gains)
            and same(self.rssi_db, other.rssi_db)
        )

    __hash__ = None


def uniform_timestamps(count: int, sample_rate_hz: float) -> np.ndarray:
    return np.arange(count, dtype=np.float64) / sample_rate_hz
