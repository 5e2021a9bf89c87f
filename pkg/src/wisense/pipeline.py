"""Trace to detections: aggregate, smooth, detect."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np

from .core import Trace
from .detect import (
    DetectorParams,
    EventInterval,
    detect_breath_holds,
    detect_motion,
    estimate_respiration_rate,
)
from .dsp import aggregate_amplitude, smooth_series
from .errors import ValidationError

DEFAULT_WINDOW = 100
RESPIRATION_AGGREGATE = "max_variance"
MOTION_AGGREGATE = "mean"


def filter_lag_s(window_len: int, sample_rate_hz: float) -> float:
    """Group delay of a length-``window_len`` trailing moving average."""
    return (window_len - 1) / (2 * sample_rate_hz)


def scalar_series(trace: Trace, aggregate="max_variance") -> np.ndarray:
    """CFR amplitude collapsed per frame, or the raw RSSI stream if there is no CFR."""
    if trace.has_cfr:
        return aggregate_amplitude(trace, aggregate)
    if trace.has_rssi:
        return trace.rssi_db.astype(np.float64)
    raise ValidationError("trace carries neither CFR nor RSSI data")


@dataclass
class RespirationResult:
    rate_hz: float
    holds: List[EventInterval]
    smoothed: np.ndarray = field(repr=False)


def analyze_respiration(
    trace: Trace,
    window_len: int = DEFAULT_WINDOW,
    params: DetectorParams = DetectorParams(),
    aggregate=RESPIRATION_AGGREGATE,
) -> RespirationResult:
    """Breathing rate and breath-holds of one trace.

    Holds are found first and their spans are excluded from rate estimation.
    Raises :class:`~wisense.errors.NoPeriodicityError` when no breathing
    rhythm is present.
    """
    fs = trace.sample_rate_hz
    smoothed = smooth_series(scalar_series(trace, aggregate), window_len)
    holds = detect_breath_holds(smoothed, fs, params, lag_s=filter_lag_s(window_len, fs))
    rate = estimate_respiration_rate(
        smoothed, fs, params, exclude=[(h.start_s, h.end_s) for h in holds]
    )
    return RespirationResult(rate, holds, smoothed)


def analyze_motion(
    trace: Trace,
    window_len: int = DEFAULT_WINDOW,
    params: DetectorParams = DetectorParams(),
    aggregate=MOTION_AGGREGATE,
) -> List[EventInterval]:
    fs = trace.sample_rate_hz
    smoothed = smooth_series(scalar_series(trace, aggregate), window_len)
    return detect_motion(
        smoothed, fs, params,
        lag_s=filter_lag_s(window_len, fs),
        settle_s=window_len / fs,
    )


def peak_to_peak(trace: Trace, window_len: int = DEFAULT_WINDOW,
                 aggregate=RESPIRATION_AGGREGATE, skip_warmup: bool = True) -> float:
    """Peak-to-peak of the smoothed scalar series, ignoring the filter warm-up."""
    smoothed = smooth_series(scalar_series(trace, aggregate), window_len)
    if skip_warmup:
        smoothed = smoothed[window_len - 1:]
    return float(np.ptp(smoothed)) if smoothed.size else 0.0
