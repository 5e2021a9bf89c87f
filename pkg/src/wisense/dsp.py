"""Streaming moving average and the series utilities feeding the detectors."""

from __future__ import annotations

import math
from collections import deque
from typing import Union

import numpy as np

from .core import Trace
from .errors import InputError, InsufficientDataError, SubcarrierIndexError, ValidationError

RESUM_INTERVAL = 1_000_000


class MovingAverageState:
    """Running state of a length-``W`` moving average.

    While fewer than ``W`` samples have been seen the output is the mean of
    everything so far; afterwards it is the mean of the last ``W`` samples.
    Each update is O(1); the running sum is rebuilt exactly every
    ``RESUM_INTERVAL`` updates so rounding error cannot accumulate.
    """

    __slots__ = ("window_len", "buffer", "running_sum", "count", "_since_resum")

    def __init__(self, window_len: int):
        if isinstance(window_len, bool) or int(window_len) != window_len or window_len < 1:
            raise ValueError(f"window length must be a positive integer, got {window_len!r}")
        self.window_len = int(window_len)
        self.buffer = deque(maxlen=self.window_len)
        self.running_sum = 0.0
        self.count = 0
        self._since_resum = 0

    def update(self, gamma: float) -> float:
        gamma = float(gamma)
        if not math.isfinite(gamma):
            raise InputError(f"non-finite sample {gamma!r}")
        buf = self.buffer
        if len(buf) == self.window_len:
            self.running_sum = (self.running_sum - buf[0]) + gamma
        else:
            self.running_sum += gamma
        buf.append(gamma)
        self.count += 1
        self._since_resum += 1
        if self._since_resum >= RESUM_INTERVAL:
            self.running_sum = math.fsum(buf)
            self._since_resum = 0
        return self.running_sum / len(buf)

    @property
    def value(self) -> float:
        if not self.buffer:
            raise InsufficientDataError("no samples seen yet")
        return self.running_sum / len(self.buffer)


def ma_update(state: MovingAverageState, gamma: float) -> float:
    """Push one sample into ``state`` and return the smoothed value."""
    return state.update(gamma)


def smooth_series(series, window_len: int) -> np.ndarray:
    """Batch moving average; bit-identical to folding :func:`ma_update`."""
    state = MovingAverageState(window_len)
    update = state.update
    return np.array([update(x) for x in np.asarray(series, dtype=np.float64)], dtype=np.float64)


def select_subcarrier(trace: Trace, window_s: float = 10.0) -> int:
    """Index of the subcarrier whose amplitude varies most over the first ``window_s``.

    Ties go to the smallest index.
    """
    if trace.gains is None:
        raise InsufficientDataError("trace has no CFR frames")
    n = int(round(window_s * trace.sample_rate_hz))
    if window_s <= 0 or n < 2 or len(trace) < n:
        raise InsufficientDataError(
            f"need {window_s} s of CFR data, trace has {trace.duration_s:.3f} s"
        )
    variances = np.var(np.abs(trace.gains[:n]), axis=0)
    return int(np.argmax(variances))


Method = Union[str, tuple]


def _parse_method(method):
    if isinstance(method, tuple):
        name, k = method
        return name, k
    if isinstance(method, str) and method.startswith("single"):
        _, _, arg = method.partition(":")
        if not arg:
            _, _, arg = method.partition("(")
            arg = arg.rstrip(")")
        try:
            return "single", int(arg)
        except ValueError:
            raise ValueError(f"bad aggregation method {method!r}") from None
    return method, None


def aggregate_amplitude(trace: Trace, method: Method = "max_variance", window_s: float = 10.0) -> np.ndarray:
    """Collapse the CFR amplitudes of each frame to one scalar.

    ``method`` is ``"mean"``, ``"max_variance"``, or ``("single", k)``
    (also accepted as ``"single:k"``).
    """
    if trace.gains is None:
        raise ValidationError("trace has no CFR frames")
    name, k = _parse_method(method)
    if name == "mean":
        return np.abs(trace.gains).mean(axis=1)
    if name == "single":
        if isinstance(k, bool) or not 0 <= k < trace.num_subcarriers:
            raise SubcarrierIndexError(f"subcarrier {k} outside [0, {trace.num_subcarriers})")
        return np.abs(trace.gains[:, k])
    if name == "max_variance":
        window_s = min(window_s, trace.duration_s)
        return np.abs(trace.gains[:, select_subcarrier(trace, window_s)])
    raise ValueError(f"unknown aggregation method {method!r}")


def detrend(series, long_window: int) -> np.ndarray:
    """Remove slow drift: ``series - smooth_series(series, long_window)``."""
    if long_window < 2:
        raise ValueError("long_window must be at least 2")
    x = np.asarray(series, dtype=np.float64)
    return x - smooth_series(x, long_window)


def smooth_matrix(values, window_len: int) -> np.ndarray:
    """Moving average applied independently to every column of ``values``.

    Column ``j`` equals ``smooth_series(values[:, j], window_len)`` exactly.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("expected a 2-D array")
    if not np.all(np.isfinite(x)):
        raise InputError("non-finite sample")
    out = np.empty_like(x)
    running = np.zeros(x.shape[1])
    since = 0
    for t in range(x.shape[0]):
        if t >= window_len:
            running = (running - x[t - window_len]) + x[t]
        else:
            running = running + x[t]
        since += 1
        if since >= RESUM_INTERVAL:
            lo = max(0, t + 1 - window_len)
            running = np.array([math.fsum(col) for col in x[lo:t + 1].T])
            since = 0
        out[t] = running / min(t + 1, window_len)
    return out
