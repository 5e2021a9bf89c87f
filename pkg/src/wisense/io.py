"""Trace files (binary and CSV) and real-time paced replay.

Binary layout, all little-endian::

    header   magic "WVSENSE1" (8s), schema_version (u16), num_subcarriers (u32),
             sample_rate_hz, center_frequency_hz, bandwidth_hz,
             subcarrier_spacing_hz (f64 each), frame_count (u64),
             stream_flags (u8: bit 0 CFR present, bit 1 RSSI present),
             label length (u32) followed by the UTF-8 label
    record   timestamp_s (f64), rssi_db (i16), num_subcarriers x (re, im) (f32)

An absent stream is written as zeros and flagged off in the header. Gains
are stored as 32-bit floats; a trace read from a file therefore round-trips
bit for bit.

The CSV dialect has a header row ``t_s,rssi_db,a_0,...,a_{K-1}`` and keeps
amplitudes only (9 significant digits). Timestamps are written exactly.
An empty ``rssi_db`` cell means the RSSI stream is absent.
"""

from __future__ import annotations

import csv
import io as _stdio
import math
import struct
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (
    DEFAULT_BANDWIDTH_HZ,
    DEFAULT_SPACING_HZ,
    CfrFrame,
    RssiSample,
    SubcarrierGrid,
    Trace,
)
from .errors import CorruptTraceError, ReplayAborted, TraceFormatError, ValidationError

MAGIC = b"WVSENSE1"
SCHEMA_VERSION = 1

_HEADER = struct.Struct("<8sHIddddQB")
_LABEL_LEN = struct.Struct("<I")
_SLOT = struct.Struct("<dh")

FLAG_CFR = 0x1
FLAG_RSSI = 0x2

_INT16 = np.iinfo(np.int16)


def header_size(label: str = "") -> int:
    return _HEADER.size + _LABEL_LEN.size + len(label.encode("utf-8"))


def record_size(num_subcarriers: int) -> int:
    return _SLOT.size + 8 * num_subcarriers


def _record_dtype(k: int) -> np.dtype:
    return np.dtype([("t", "<f8"), ("rssi", "<i2"), ("gains", "<f4", (k, 2))])


def encode_binary(trace: Trace) -> bytes:
    grid = trace.grid
    k = grid.num_subcarriers
    flags = (FLAG_CFR if trace.has_cfr else 0) | (FLAG_RSSI if trace.has_rssi else 0)
    label = trace.label.encode("utf-8")
    head = _HEADER.pack(
        MAGIC, SCHEMA_VERSION, k, trace.sample_rate_hz, grid.center_frequency_hz,
        grid.bandwidth_hz, grid.subcarrier_spacing_hz, len(trace), flags,
    ) + _LABEL_LEN.pack(len(label)) + label

    records = np.zeros(len(trace), dtype=_record_dtype(k))
    records["t"] = trace.timestamps
    if trace.has_rssi:
        if trace.rssi_db.size and (trace.rssi_db.min() < _INT16.min or trace.rssi_db.max() > _INT16.max):
            raise ValidationError("rssi_db does not fit in 16 bits")
        records["rssi"] = trace.rssi_db
    if trace.has_cfr:
        records["gains"][..., 0] = trace.gains.real
        records["gains"][..., 1] = trace.gains.imag
    return head + records.tobytes()


def decode_binary(data: bytes) -> Trace:
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise TraceFormatError("not a wisense trace: bad magic")
    if len(data) < _HEADER.size + _LABEL_LEN.size:
        raise CorruptTraceError("truncated header", len(data))
    (_, version, k, fs, center, bandwidth, spacing, count, flags) = _HEADER.unpack_from(data)
    if version != SCHEMA_VERSION:
        raise TraceFormatError(f"unsupported schema_version {version}")
    if flags & ~(FLAG_CFR | FLAG_RSSI):
        raise TraceFormatError(f"unknown stream flags {flags:#x}")
    (label_len,) = _LABEL_LEN.unpack_from(data, _HEADER.size)
    pos = _HEADER.size + _LABEL_LEN.size
    if len(data) < pos + label_len:
        raise CorruptTraceError("truncated label", len(data))
    try:
        label = data[pos: pos + label_len].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise TraceFormatError(f"label is not UTF-8: {exc}") from None
    pos += label_len

    try:
        grid = SubcarrierGrid(center, bandwidth, k, spacing)
    except ValidationError as exc:
        raise TraceFormatError(f"invalid grid in header: {exc}") from None
    rec = record_size(k)
    body = len(data) - pos
    complete = body // rec
    if complete < count:
        raise CorruptTraceError(
            f"expected {count} records, found {complete} complete", pos + complete * rec
        )
    if body > count * rec:
        raise CorruptTraceError("trailing bytes after last record", pos + count * rec)

    records = np.frombuffer(data, dtype=_record_dtype(k), count=count, offset=pos)
    gains = None
    if flags & FLAG_CFR:
        g = records["gains"].astype(np.float64)
        gains = g[..., 0] + 1j * g[..., 1]
    rssi = records["rssi"].astype(np.int64) if flags & FLAG_RSSI else None
    return Trace(grid, fs, records["t"].copy(), gains, rssi, label)


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def encode_csv(trace: Trace) -> str:
    buf = _stdio.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    k = trace.num_subcarriers if trace.has_cfr else 0
    writer.writerow(["t_s", "rssi_db"] + [f"a_{i}" for i in range(k)])
    amps = trace.amplitude_matrix() if trace.has_cfr else None
    for i, t in enumerate(trace.timestamps):
        row = [repr(float(t)), str(int(trace.rssi_db[i])) if trace.has_rssi else ""]
        if amps is not None:
            row.extend(_fmt(a) for a in amps[i])
        writer.writerow(row)
    return buf.getvalue()


def decode_csv(text: str, grid: Optional[SubcarrierGrid] = None,
               sample_rate_hz: Optional[float] = None, label: str = "") -> Trace:
    """Parse the CSV dialect.

    The CSV carries no grid or rate metadata: ``grid`` defaults to a 2.4 GHz
    grid with the file's subcarrier count and the rate is inferred from the
    timestamps unless given.
    """
    rows = list(csv.reader(_stdio.StringIO(text)))
    if not rows or rows[0][:2] != ["t_s", "rssi_db"]:
        raise TraceFormatError("missing t_s,rssi_db header row")
    header = rows[0]
    k = len(header) - 2
    for i, name in enumerate(header[2:]):
        if name != f"a_{i}":
            raise TraceFormatError(f"unexpected column {name!r}")
    body = [r for r in rows[1:] if r]
    ts = np.empty(len(body))
    amps = np.empty((len(body), k))
    rssi_cells = []
    for n, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise TraceFormatError(f"line {n}: expected {len(header)} fields, got {len(row)}")
        try:
            ts[n - 2] = float(row[0])
            amps[n - 2] = [float(v) for v in row[2:]]
        except ValueError as exc:
            raise TraceFormatError(f"line {n}: {exc}") from None
        rssi_cells.append(row[1])

    empty = [c == "" for c in rssi_cells]
    rssi = None
    if any(empty) and not all(empty):
        raise TraceFormatError("rssi_db column is partially empty")
    if body and not any(empty):
        try:
            rssi = np.array([int(c) for c in rssi_cells], dtype=np.int64)
        except ValueError as exc:
            raise TraceFormatError(f"bad rssi_db value: {exc}") from None

    if sample_rate_hz is None:
        if ts.size >= 2:
            sample_rate_hz = (ts.size - 1) / (ts[-1] - ts[0]) if ts[-1] > ts[0] else 0.0
        else:
            sample_rate_hz = 1.0
    if grid is None:
        if k == 0:
            grid = SubcarrierGrid.for_band("2.4GHz")
        else:
            spacing = min(DEFAULT_SPACING_HZ, DEFAULT_BANDWIDTH_HZ / max(k - 1, 1))
            grid = SubcarrierGrid(2.4e9, num_subcarriers=k, subcarrier_spacing_hz=spacing)
    elif k and grid.num_subcarriers != k:
        raise ValidationError(f"grid has {grid.num_subcarriers} subcarriers, file has {k}")
    gains = amps.astype(np.complex128) if k else None
    return Trace(grid, sample_rate_hz, ts, gains, rssi, label)


def write_trace(trace: Trace, destination, format: str = "binary") -> int:
    """Write ``trace`` to a path or file object; returns the number of bytes written."""
    if format == "binary":
        payload = encode_binary(trace)
    elif format == "csv":
        payload = encode_csv(trace).encode("utf-8")
    else:
        raise ValueError(f"unknown trace format {format!r}")
    if isinstance(destination, (str, bytes)) or hasattr(destination, "__fspath__"):
        with open(destination, "wb") as fh:
            fh.write(payload)
        return len(payload)
    if isinstance(destination, _stdio.TextIOBase):
        destination.write(payload.decode("utf-8"))
    else:
        destination.write(payload)
    return len(payload)


def read_trace(source, format: str = "binary", **csv_options) -> Trace:
    """Read a trace from a path, bytes, or file object."""
    if isinstance(source, (bytes, bytearray, memoryview)):
        data = bytes(source)
    elif isinstance(source, str) or hasattr(source, "__fspath__"):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    if format == "binary":
        if isinstance(data, str):
            raise TraceFormatError("binary trace read from a text stream")
        return decode_binary(data)
    if format == "csv":
        text = data if isinstance(data, str) else data.decode("utf-8")
        return decode_csv(text, **csv_options)
    raise ValueError(f"unknown trace format {format!r}")


@dataclass(frozen=True)
class Slot:
    """One time slot handed to a replay consumer."""

    index: int
    timestamp_s: float
    frame: Optional[CfrFrame]
    rssi: Optional[RssiSample]


def replay(trace: Trace, speed_factor: float = 1.0,
           consumer: Callable[[Slot], object] = lambda slot: None) -> float:
    """Deliver slots to ``consumer`` in order, paced at ``speed_factor`` x real time.

    ``speed_factor=math.inf`` delivers as fast as possible. Returns the
    wall-clock seconds spent. If the consumer raises, replay stops with
    :class:`ReplayAborted` carrying the number of slots delivered.
    """
    if len(trace) == 0:
        raise ValidationError("cannot replay an empty trace")
    if not speed_factor > 0:
        raise ValueError("speed_factor must be positive")
    paced = math.isfinite(speed_factor)
    t0 = trace.timestamps[0]
    start = time.perf_counter()
    for i, t in enumerate(trace.timestamps):
        if paced:
            due = start + (t - t0) / speed_factor
            wait = due - time.perf_counter()
            if wait > 0:
                time.sleep(wait)
        slot = Slot(
            i,
            float(t),
            CfrFrame(float(t), trace.gains[i]) if trace.has_cfr else None,
            RssiSample(float(t), int(trace.rssi_db[i])) if trace.has_rssi else None,
        )
        try:
            consumer(slot)
        except Exception as exc:
            raise ReplayAborted(i, exc) from exc
    return time.perf_counter() - start
