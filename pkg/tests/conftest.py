import numpy as np
import pytest
from numpy.lib.stride_tricks import sliding_window_view

from wisense.core import SubcarrierGrid, Trace


def brute_moving_average(x, window):
    """Re-sum every window from scratch: prefix means for the first
    ``window`` outputs, then full-window means."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    head = min(window, x.size)
    for t in range(head):
        out[t] = x[: t + 1].sum() / (t + 1)
    if x.size > window:
        out[window:] = sliding_window_view(x, window)[1:].sum(axis=1) / window
    return out


def make_trace(amps, fs=100.0, rssi=None, center=2.4e9):
    """Trace whose gains are the given real amplitudes, shape (slots, K)."""
    amps = np.atleast_2d(np.asarray(amps, dtype=np.float64))
    if amps.shape[0] == 1 and amps.shape[1] > 1 and amps.ndim == 2:
        amps = amps.T
    k = amps.shape[1]
    grid = SubcarrierGrid(center, num_subcarriers=k)
    ts = np.arange(amps.shape[0]) / fs
    return Trace(grid, fs, ts, amps.astype(np.complex128), rssi)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_trace(rng, num_slots=None, num_subcarriers=None, with_cfr=True, with_rssi=True):
    """Seeded random trace whose gains are exactly representable as float32,
    the on-disk precision."""
    n = int(rng.integers(0, 60)) if num_slots is None else num_slots
    k = int(rng.integers(1, 246)) if num_subcarriers is None else num_subcarriers
    fs = float(rng.choice([10.0, 100.0, 1000.0]))
    grid = SubcarrierGrid(float(rng.choice([2.4e9, 6e9])), num_subcarriers=k)
    gains = None
    if with_cfr:
        parts = rng.normal(scale=2.0, size=(n, k, 2)).astype(np.float32).astype(np.float64)
        gains = parts[..., 0] + 1j * parts[..., 1]
    rssi = rng.integers(-100, 20, size=n) if with_rssi else None
    return Trace(grid, fs, np.arange(n) / fs, gains, rssi, label=f"rand-{n}x{k}")
