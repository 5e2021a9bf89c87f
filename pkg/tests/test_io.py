import io
import math
import struct
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wisense.core import SubcarrierGrid, Trace
from wisense.errors import CorruptTraceError, ReplayAborted, TraceFormatError, ValidationError
from wisense.io import (
    MAGIC,
    decode_binary,
    encode_binary,
    header_size,
    read_trace,
    record_size,
    replay,
    write_trace,
)

from conftest import random_trace

GRID_1 = SubcarrierGrid(2.4e9, num_subcarriers=1)


def _trace(n, k=1, fs=100.0, label=""):
    grid = SubcarrierGrid(2.4e9, num_subcarriers=k)
    return Trace(grid, fs, np.arange(n) / fs, np.ones((n, k), complex), np.zeros(n, int), label)


def test_empty_trace_binary_is_header_only():
    buf = io.BytesIO()
    assert write_trace(_trace(0, label="abc"), buf) == header_size("abc")
    assert buf.getvalue().startswith(MAGIC)


def test_empty_trace_csv_is_header_row_only():
    text = io.StringIO()
    write_trace(_trace(0, k=3), text, "csv")
    assert text.getvalue() == "t_s,rssi_db,a_0,a_1,a_2\r\n"


def test_single_slot_record_size():
    data = encode_binary(_trace(1))
    assert record_size(1) == 8 + 2 + 8
    assert len(data) == header_size("") + 18


def test_header_fields():
    trace = _trace(3, k=2, fs=50.0, label="hdr")
    magic, version, k, fs, center, bw, spacing, count, flags = struct.unpack_from(
        "<8sHIddddQB", encode_binary(trace))
    assert (magic, version, k, fs, center, count, flags) == (MAGIC, 1, 2, 50.0, 2.4e9, 3, 3)


def test_record_layout_is_little_endian():
    trace = Trace(GRID_1, 10.0, [0.0, 0.1], [[1.5 - 2j], [0.25 + 0j]], [-40, 7])
    data = encode_binary(trace)
    body = data[header_size(""):]
    assert struct.unpack("<dhff", body[:18]) == (0.0, -40, 1.5, -2.0)
    assert struct.unpack("<dhff", body[18:]) == (0.1, 7, 0.25, 0.0)


def test_random_245_subcarrier_round_trip(rng):
    trace = random_trace(rng, num_slots=50, num_subcarriers=245)
    back = decode_binary(encode_binary(trace))
    assert back == trace
    assert back.gains.tobytes() == trace.gains.tobytes()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.booleans(), st.booleans())
def test_binary_round_trip_property(seed, with_cfr, with_rssi):
    if not (with_cfr or with_rssi):
        with_rssi = True
    trace = random_trace(np.random.default_rng(seed), with_cfr=with_cfr, with_rssi=with_rssi)
    assert decode_binary(encode_binary(trace)) == trace


def test_simulator_gains_are_rounded_to_float32_once():
    rng = np.random.default_rng(9)
    g = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    trace = Trace(SubcarrierGrid(6e9, num_subcarriers=2), 100.0, np.arange(4) / 100, g)
    once = decode_binary(encode_binary(trace))
    np.testing.assert_allclose(once.gains, g, rtol=1e-7)
    assert decode_binary(encode_binary(once)) == once


def test_file_round_trip(tmp_path, rng):
    trace = random_trace(rng, num_slots=20, num_subcarriers=8)
    path = tmp_path / "t.wvs"
    n = write_trace(trace, path)
    assert path.stat().st_size == n
    assert read_trace(path) == trace
    assert read_trace(str(path)) == trace
    assert read_trace(path.read_bytes()) == trace


def test_corrupted_magic():
    data = bytearray(encode_binary(_trace(2)))
    data[0:8] = b"XXXXXXXX"
    with pytest.raises(TraceFormatError):
        decode_binary(bytes(data))
    with pytest.raises(TraceFormatError):
        decode_binary(b"")


def test_wrong_version():
    data = bytearray(encode_binary(_trace(2)))
    struct.pack_into("<H", data, 8, 2)
    with pytest.raises(TraceFormatError, match="schema_version"):
        decode_binary(bytes(data))


@pytest.mark.parametrize("cut", [1, 10, 17])
def test_truncated_record_reports_offset(cut):
    trace = _trace(3, k=1)
    data = encode_binary(trace)
    with pytest.raises(CorruptTraceError) as info:
        decode_binary(data[:-cut])
    # the third record is the incomplete one
    assert info.value.offset == header_size("") + 2 * record_size(1)
    assert str(info.value.offset) in str(info.value)


def test_trailing_bytes_are_corruption():
    with pytest.raises(CorruptTraceError):
        decode_binary(encode_binary(_trace(2)) + b"\0")


def test_non_monotone_timestamps_rejected():
    data = bytearray(encode_binary(_trace(3)))
    base = header_size("")
    struct.pack_into("<d", data, base + record_size(1), 0.5)
    with pytest.raises(ValidationError):
        decode_binary(bytes(data))


def test_rssi_must_fit_int16():
    trace = Trace(GRID_1, 10.0, [0.0], None, [40000])
    with pytest.raises(ValidationError):
        encode_binary(trace)


def test_csv_round_trip_amplitudes(rng):
    trace = random_trace(rng, num_slots=40, num_subcarriers=12)
    text = io.StringIO()
    write_trace(trace, text, "csv")
    back = read_trace(io.StringIO(text.getvalue()), "csv", grid=trace.grid)
    np.testing.assert_allclose(back.amplitude_matrix(), trace.amplitude_matrix(), rtol=1e-8, atol=0)
    assert back.timestamps.tolist() == trace.timestamps.tolist()
    assert back.rssi_db.tolist() == trace.rssi_db.tolist()
    assert back.sample_rate_hz == pytest.approx(trace.sample_rate_hz, rel=1e-12)
    assert np.all(back.gains.imag == 0)


def test_csv_without_rssi(rng):
    trace = random_trace(rng, num_slots=5, num_subcarriers=2, with_rssi=False)
    back = read_trace(write_csv_bytes(trace), "csv")
    assert back.rssi_db is None and back.has_cfr


def write_csv_bytes(trace):
    buf = io.BytesIO()
    write_trace(trace, buf, "csv")
    return buf.getvalue()


@pytest.mark.parametrize("text", [
    "time,rssi\r\n0,1\r\n",
    "t_s,rssi_db,a_0\r\n0.0,-3\r\n",
    "t_s,rssi_db,a_0\r\n0.0,-3,abc\r\n",
    "t_s,rssi_db,a_0\r\n0.0,-3,1.0\r\n0.1,,1.0\r\n",
])
def test_malformed_csv(text):
    with pytest.raises(TraceFormatError):
        read_trace(text.encode(), "csv")


def test_replay_unpaced_delivers_in_order():
    trace = _trace(10_000)
    seen = []
    elapsed = replay(trace, math.inf, lambda slot: seen.append(slot.index))
    assert seen == list(range(10_000))
    assert elapsed >= 0


def test_replay_real_time_pacing():
    elapsed = replay(_trace(100), 1.0)
    # last slot is due at 0.99 s
    assert 0.99 <= elapsed <= 1.30


def test_replay_speed_factor_halves_time():
    trace = _trace(100)
    slow = replay(trace, 1.0)
    fast = replay(trace, 2.0)
    assert fast == pytest.approx(slow / 2, rel=0.30)


def test_replay_slot_contents():
    trace = _trace(3, k=2)
    slots = []
    replay(trace, math.inf, slots.append)
    assert [s.timestamp_s for s in slots] == trace.timestamps.tolist()
    assert slots[1].frame == trace.cfr_frames[1]
    assert slots[2].rssi == trace.rssi_samples[2]


def test_replay_consumer_failure():
    def consumer(slot):
        if slot.index == 5:
            raise RuntimeError("boom")

    with pytest.raises(ReplayAborted) as info:
        replay(_trace(20), math.inf, consumer)
    assert info.value.delivered == 5
    assert isinstance(info.value.cause, RuntimeError)


def test_replay_rejects_empty_and_bad_speed():
    with pytest.raises(ValidationError):
        replay(_trace(0))
    with pytest.raises(ValueError):
        replay(_trace(2), 0.0)
