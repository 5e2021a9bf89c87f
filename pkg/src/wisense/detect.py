"""Respiration rate, breath-hold and motion detection on smoothed scalar series.

All detectors work on a uniformly sampled series that has already been
smoothed. Detectors that report intervals accept ``lag_s``, the known delay
of the smoothing filter; reported times are shifted back by it so they line
up with the physical events rather than the filter output.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.signal import find_peaks

from .errors import ConfigError, InputError, InsufficientDataError, NoPeriodicityError

CALIBRATION_S = 10.0
MOTION_WINDOW_S = 1.0
MIN_MOTION_S = 0.5
# hold boundaries extend while the series stays within this many noise sigmas of the hold level
LEVEL_BAND_SIGMAS = 4.0

BREATH_HOLD = "breath_hold"
MOTION = "motion"


@dataclass(frozen=True)
class EventInterval:
    start_s: float
    end_s: float
    kind: str
    score: float

    def __post_init__(self):
        if not self.start_s < self.end_s:
            raise ValueError(f"empty interval [{self.start_s}, {self.end_s}]")
        if self.kind not in (BREATH_HOLD, MOTION):
            raise ValueError(f"unknown event kind {self.kind!r}")
        if not self.score >= 0:
            raise ValueError("score must be non-negative")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DetectorParams:
    """Detector thresholds.

    ``flat_var_threshold`` is a fraction of the calibration variance and
    ``min_prominence`` a fraction of the series' peak-to-peak range, so the
    respiration detectors do not depend on the signal scale.
    ``motion_energy_threshold`` is absolute, in (series units / s)**2.
    """

    flat_var_threshold: float = 0.1
    min_hold_s: float = 10.0
    motion_energy_threshold: float = 1e-3
    hysteresis_ratio: float = 0.5
    min_peak_distance_s: float = 2.0
    min_prominence: float = 0.2

    def __post_init__(self):
        for name, value in asdict(self).items():
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"expected a number, got {value!r}", field=name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"must be positive and finite, got {value!r}", field=name)
            object.__setattr__(self, name, float(value))
        if self.hysteresis_ratio >= 1:
            raise ConfigError("must be below 1", field="hysteresis_ratio")

    def replace(self, **overrides) -> "DetectorParams":
        unknown = set(overrides) - set(asdict(self))
        if unknown:
            raise ConfigError(f"unknown detector parameter(s): {', '.join(sorted(unknown))}")
        return DetectorParams(**{**asdict(self), **overrides})


def _as_series(series) -> np.ndarray:
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1:
        raise InputError("series must be one-dimensional")
    if not np.all(np.isfinite(x)):
        raise InputError("series contains non-finite values")
    return x


def _check_rate(sample_rate_hz):
    if not (sample_rate_hz > 0 and math.isfinite(sample_rate_hz)):
        raise ConfigError("must be positive", field="sample_rate_hz")


def _runs(above_open: np.ndarray, keep_open: np.ndarray) -> List[Tuple[int, int]]:
    """Hysteresis segmentation: a run opens where ``above_open`` holds and
    lasts while ``keep_open`` holds. Returns half-open index ranges."""
    runs = []
    i, n = 0, above_open.size
    while i < n:
        if not above_open[i]:
            nxt = np.flatnonzero(above_open[i:])
            if nxt.size == 0:
                break
            i += int(nxt[0])
        stop = np.flatnonzero(~keep_open[i:])
        j = n if stop.size == 0 else i + int(stop[0])
        j = max(j, i + 1)
        runs.append((i, j))
        i = j
    return runs


def _to_times(start_idx, end_idx, sample_rate_hz, lag_s, n):
    span = n / sample_rate_hz
    start = min(max(start_idx / sample_rate_hz - lag_s, 0.0), span)
    end = min(max(end_idx / sample_rate_hz - lag_s, 0.0), span)
    return start, end


def estimate_respiration_rate(
    series,
    sample_rate_hz: float,
    params: DetectorParams = DetectorParams(),
    exclude: Sequence[Tuple[float, float]] = (),
) -> float:
    """Breathing rate in Hz from the spacing of prominent peaks.

    Peaks closer than ``min_peak_distance_s`` to either end of the series
    (or to an excluded interval, e.g. a detected breath-hold) are ignored
    because their prominence cannot be established. Within each remaining
    segment the rate is ``(peaks - 1) / (last - first)``; segments are
    pooled.
    """
    _check_rate(sample_rate_hz)
    x = _as_series(series)
    p2p = float(np.ptp(x)) if x.size else 0.0
    if p2p == 0.0:
        raise NoPeriodicityError("series is constant")

    distance = max(1, int(round(params.min_peak_distance_s * sample_rate_hz)))
    peaks, _ = find_peaks(x, prominence=params.min_prominence * p2p, distance=distance)
    t = peaks / sample_rate_hz
    margin = params.min_peak_distance_s
    span = x.size / sample_rate_hz

    bounds = [(0.0, span)]
    for lo, hi in sorted(exclude):
        cut = []
        for a, b in bounds:
            if hi <= a or lo >= b:
                cut.append((a, b))
                continue
            if lo > a:
                cut.append((a, lo))
            if hi < b:
                cut.append((hi, b))
        bounds = cut

    cycles = 0
    elapsed = 0.0
    for a, b in bounds:
        seg = t[(t >= a + margin) & (t <= b - margin)]
        if seg.size >= 2:
            cycles += seg.size - 1
            elapsed += seg[-1] - seg[0]
    if cycles == 0 or elapsed <= 0:
        raise NoPeriodicityError("fewer than 2 qualifying peaks")
    return cycles / elapsed


def rolling_variance(series, window: int) -> np.ndarray:
    """Variance of every length-``window`` slice; entry ``i`` covers ``series[i:i+window]``."""
    x = _as_series(series)
    if window < 1 or window > x.size:
        raise InsufficientDataError(f"window {window} does not fit in {x.size} samples")
    x = x - x.mean()
    c1 = np.concatenate(([0.0], np.cumsum(x)))
    c2 = np.concatenate(([0.0], np.cumsum(x * x)))
    mean = (c1[window:] - c1[:-window]) / window
    return np.maximum((c2[window:] - c2[:-window]) / window - mean * mean, 0.0)


def _refine_hold(x, lo, hi, window, noise_floor):
    """Grow a coarse flat run outward while samples stay near the hold level."""
    a, b = lo + window // 2, hi - window // 2
    if b - a < window // 2:
        a, b = lo + (hi - lo) // 4, hi - (hi - lo) // 4
    core = x[a:b]
    level = float(np.median(core))
    band = max(LEVEL_BAND_SIGMAS * float(np.std(core)), noise_floor)
    near = np.abs(x - level) <= band
    outside = np.flatnonzero(~near[:a])
    a = 0 if outside.size == 0 else int(outside[-1]) + 1
    outside = np.flatnonzero(~near[b:])
    b = x.size if outside.size == 0 else b + int(outside[0])
    return a, b, float(np.var(core))


def detect_breath_holds(
    series,
    sample_rate_hz: float,
    params: DetectorParams = DetectorParams(),
    lag_s: float = 0.0,
) -> List[EventInterval]:
    """Flat stretches of at least ``min_hold_s`` in a breathing series.

    The variance of the first ``CALIBRATION_S`` seconds is the baseline.
    A run of ``min_hold_s / 2`` windows whose variance falls below
    ``flat_var_threshold`` times the baseline opens a hold, which stays open
    until the variance exceeds the threshold divided by ``hysteresis_ratio``.
    Boundaries are then refined to where the series leaves the hold level.
    ``score`` is the variance inside the hold relative to the baseline.
    """
    _check_rate(sample_rate_hz)
    x = _as_series(series)
    n_cal = int(round(CALIBRATION_S * sample_rate_hz))
    window = max(2, int(round(params.min_hold_s / 2 * sample_rate_hz)))
    if x.size < max(n_cal, window):
        raise InsufficientDataError(
            f"series of {x.size / sample_rate_hz:.2f} s is shorter than the "
            f"{CALIBRATION_S} s calibration window"
        )
    baseline = float(np.var(x[:n_cal]))
    if baseline == 0.0:
        return []

    var = rolling_variance(x, window)
    open_thr = params.flat_var_threshold * baseline
    close_thr = open_thr / params.hysteresis_ratio
    noise_floor = 1e-3 * math.sqrt(baseline)

    spans = []
    for i, j in _runs(var < open_thr, var <= close_thr):
        lo, hi = i, j - 1 + window
        a, b, core_var = _refine_hold(x, lo, hi, window, noise_floor)
        spans.append([a, b, core_var])

    merged = []
    for a, b, v in spans:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
            merged[-1][2] = min(merged[-1][2], v)
        else:
            merged.append([a, b, v])

    events = []
    for a, b, v in merged:
        start, end = _to_times(a, b, sample_rate_hz, lag_s, x.size)
        if end - start >= params.min_hold_s:
            events.append(EventInterval(start, end, BREATH_HOLD, v / baseline))
    return events


def motion_energy(series, sample_rate_hz: float, window_s: float = MOTION_WINDOW_S) -> np.ndarray:
    """Centered moving mean of the squared first difference, in (units/s)**2."""
    x = _as_series(series)
    if x.size == 0:
        return x
    slope = np.diff(x, prepend=x[0]) * sample_rate_hz
    c = np.concatenate(([0.0], np.cumsum(slope * slope)))
    n = max(1, int(round(window_s * sample_rate_hz)))
    idx = np.arange(x.size)
    lo = np.clip(idx - n // 2, 0, x.size)
    hi = np.clip(idx + n - n // 2, 0, x.size)
    return (c[hi] - c[lo]) / (hi - lo)


def detect_motion(
    series,
    sample_rate_hz: float,
    params: DetectorParams = DetectorParams(),
    lag_s: float = 0.0,
    settle_s: float = 0.0,
) -> List[EventInterval]:
    """Episodes where the 1 s energy of the series' slope is high.

    An episode opens above ``motion_energy_threshold`` and closes below
    ``hysteresis_ratio`` times that; episodes shorter than 0.5 s are
    dropped. Samples before ``settle_s`` (the smoothing filter's warm-up)
    cannot open an episode. ``score`` is peak energy over the threshold.
    """
    _check_rate(sample_rate_hz)
    x = _as_series(series)
    if x.size == 0:
        return []
    energy = motion_energy(x, sample_rate_hz)
    thr = params.motion_energy_threshold
    can_open = energy > thr
    can_open[: int(round(settle_s * sample_rate_hz))] = False

    events = []
    for i, j in _runs(can_open, energy >= params.hysteresis_ratio * thr):
        start, end = _to_times(i, j, sample_rate_hz, lag_s, x.size)
        if end - start >= MIN_MOTION_S:
            events.append(EventInterval(start, end, MOTION, float(energy[i:j].max() / thr)))
    return events


def band_sensitivity_ratio(series_low, series_high) -> float:
    """Peak-to-peak of ``series_high`` over peak-to-peak of ``series_low``."""
    low = _as_series(series_low)
    high = _as_series(series_high)
    if low.size == 0 or high.size == 0:
        raise InputError("empty series")
    p2p_low = float(np.ptp(low))
    if p2p_low == 0.0:
        raise InputError("reference series is constant")
    return float(np.ptp(high)) / p2p_low
