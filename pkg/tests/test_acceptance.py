"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``[ACCEPT n] PASS|FAIL ...`` line; run with
``pytest tests/test_acceptance.py -v`` to see them.
"""

import io
import math
import time
from pathlib import Path

import numpy as np
import pytest

from wisense.core import SubcarrierGrid
from wisense.dsp import MovingAverageState, ma_update
from wisense.errors import NoPeriodicityError
from wisense.io import read_trace, write_trace
from wisense.pipeline import analyze_motion, analyze_respiration, peak_to_peak
from wisense.scenario import load_scenario
from wisense.sim import (
    ChannelModel,
    RespirationScenario,
    quantize_rssi,
    reflected_phase_excursion,
    synthesize_respiration,
)

from conftest import brute_moving_average, random_trace

pytestmark = pytest.mark.acceptance

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
BAND_24 = SubcarrierGrid.for_band("2.4GHz")
BAND_6 = SubcarrierGrid.for_band("6GHz")


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[ACCEPT {n}] {'PASS' if ok else 'FAIL'} {detail}")
    return emit


def test_1_moving_average_oracle(report):
    x = np.random.default_rng(1).uniform(-1.0, 1.0, size=100_000)
    worst, elapsed = 0.0, 0.0
    for w in (1, 3, 100, 1000):
        t0 = time.perf_counter()
        state = MovingAverageState(w)
        out = np.fromiter((ma_update(state, g) for g in x), float, x.size)
        elapsed += time.perf_counter() - t0
        worst = max(worst, float(np.max(np.abs(out - brute_moving_average(x, w)))))
    ok = worst <= 1e-9 and elapsed < 5.0
    report(1, ok, f"max |err| {worst:.2e} (<= 1e-9), streaming {elapsed:.2f} s (< 5 s)")
    assert worst <= 1e-9
    assert elapsed < 5.0


def test_2_regime_boundary(report):
    ramp = np.arange(1, 201, dtype=float)  # x[t] = t + 1
    state = MovingAverageState(100)
    out = [ma_update(state, g) for g in ramp]
    # t=99: prefix mean of 1..100; t=100: mean of 2..101; t=101: mean of 3..102
    expected = {99: 5050 / 100, 100: 5150 / 100, 101: 5250 / 100}
    errs = {t: abs(out[t] - v) for t, v in expected.items()}
    # the slot before the boundary is still a prefix mean
    errs[98] = abs(out[98] - 4950 / 99)
    ok = max(errs.values()) <= 1e-12
    report(2, ok, "outputs at t=98..101: " + ", ".join(f"{out[t]:.12g}" for t in sorted(errs)))
    assert ok


def test_3_protocol_reproduction(report):
    config = load_scenario(SCENARIOS / "respiration_protocol.yaml")
    truth = config.scenario.hold_intervals
    assert config.channel.noise_snr_db == 20 and config.sample_rate_hz == 100
    t0 = time.perf_counter()
    good, worst = 0, 0.0
    for seed in range(20):
        holds = analyze_respiration(config.synthesize(BAND_24, seed), 100).holds
        if len(holds) == 2:
            err = max(max(abs(h.start_s - a), abs(h.end_s - b)) for h, (a, b) in zip(holds, truth))
            worst = max(worst, err)
            good += err <= 1.0
    elapsed = time.perf_counter() - t0
    ok = good == 20 and elapsed < 30.0
    report(3, ok, f"{good}/20 seeds with 2 holds within 1 s (worst {worst:.3f} s), {elapsed:.1f} s")
    assert good == 20
    assert elapsed < 30.0


def test_4_rate_accuracy(report):
    hits, errors = 0, []
    for rate in (0.15, 0.25, 0.35):
        scen = RespirationScenario(breath_rate_hz=rate, duration_s=120)
        for seed in range(10):
            trace = synthesize_respiration(scen, ChannelModel(noise_snr_db=20, rng_seed=seed), BAND_24)
            try:
                est = analyze_respiration(trace, 100).rate_hz
                err = abs(est - rate) / rate
            except NoPeriodicityError:
                err = math.inf
            errors.append(err)
            hits += err <= 0.05
    ok = hits >= 28
    report(4, ok, f"{hits}/30 within 5% (worst {max(errors):.2%})")
    assert ok


def test_5_band_sensitivity(report):
    ratio = reflected_phase_excursion(6e9, 0.005) / reflected_phase_excursion(2.4e9, 0.005)
    lengths = np.random.default_rng(5).uniform(2.0, 4.0, size=50)
    scen = RespirationScenario(duration_s=30)
    ratios = []
    for length in lengths:
        ch = ChannelModel(static_path_length_m=float(length))
        lo = peak_to_peak(synthesize_respiration(scen, ch, BAND_24))
        hi = peak_to_peak(synthesize_respiration(scen, ch, BAND_6))
        ratios.append(hi / lo)
    mean_ratio = float(np.mean(ratios))
    ok = f"{ratio:.3f}" == "2.500" and abs(ratio - 2.5) < 1e-12 and mean_ratio > 1.0
    report(5, ok, f"phase excursion ratio {ratio:.3f}, mean p2p ratio over 50 paths {mean_ratio:.3f}")
    assert abs(ratio - 2.5) < 1e-12
    assert mean_ratio > 1.0


def _walk_truth(scenario):
    return [(start, end) for start, end, a, b in scenario.schedule() if end > start]


def test_6_motion_detection(report):
    good, worst = 0, 0.0
    for name in ("motion_one_walk.yaml", "motion_two_walks.yaml"):
        config = load_scenario(SCENARIOS / name)
        assert config.channel.noise_snr_db == 20
        truth = _walk_truth(config.scenario)
        for seed in range(10):
            events = analyze_motion(config.synthesize(BAND_24, seed), 100)
            if len(events) != len(truth):
                continue
            err = max(max(abs(e.start_s - a), abs(e.end_s - b)) for e, (a, b) in zip(events, truth))
            worst = max(worst, err)
            good += err <= 1.5
    ok = good >= 18
    report(6, ok, f"{good}/20 runs with correct count and boundaries within 1.5 s (worst {worst:.2f} s)")
    assert ok


def test_7_rssi_quantization(report):
    rng = np.random.default_rng(7)
    powers = 10 ** rng.uniform(-12, 6, size=10_000)
    outs = [quantize_rssi(p) for p in powers]
    all_int = all(type(v) is int for v in outs)
    sweep = np.sort(powers)
    monotone = all(a <= b for a, b in zip(map(quantize_rssi, sweep), map(quantize_rssi, sweep[1:])))
    exact = quantize_rssi(1.0) == 0 and quantize_rssi(0.001) == -30
    ok = all_int and monotone and exact
    report(7, ok, f"integers={all_int} monotone={monotone} 1mW->0,1uW->-30={exact}")
    assert ok


def test_8_streaming_latency(report):
    x = np.random.default_rng(8).normal(size=200_000).tolist()
    state = MovingAverageState(100)
    for g in x[:1000]:
        state.update(g)
    t0 = time.perf_counter()
    for g in x:
        ma_update(state, g)
    rate = len(x) / (time.perf_counter() - t0)

    lat = np.empty(len(x), dtype=np.int64)
    clock = time.perf_counter_ns
    for i, g in enumerate(x):
        s = clock()
        ma_update(state, g)
        lat[i] = clock() - s
    p999_ms = float(np.percentile(lat, 99.9)) / 1e6
    ok = rate >= 1e5 and p999_ms < 1.0
    report(8, ok, f"{rate:,.0f} updates/s (>= 1e5), p99.9 latency {p999_ms * 1e3:.1f} us (< 1 ms)")
    assert rate >= 1e5
    assert p999_ms < 1.0


def test_9_round_trip(report):
    rng = np.random.default_rng(9)
    exact = 0
    worst_rel = 0.0
    for _ in range(100):
        trace = random_trace(rng)
        buf = io.BytesIO()
        write_trace(trace, buf, "binary")
        back = read_trace(io.BytesIO(buf.getvalue()), "binary")
        exact += back == trace and back.gains.tobytes() == trace.gains.tobytes()

        text = io.StringIO()
        write_trace(trace, text, "csv")
        back = read_trace(io.StringIO(text.getvalue()), "csv", grid=trace.grid,
                          sample_rate_hz=trace.sample_rate_hz)
        a, b = trace.amplitude_matrix(), back.amplitude_matrix()
        if a.size:
            worst_rel = max(worst_rel, float(np.max(np.abs(b - a) / np.where(a == 0, 1, a))))
    ok = exact == 100 and worst_rel <= 1e-8
    report(9, ok, f"{exact}/100 bit-exact binary round trips, csv worst relative error {worst_rel:.1e}")
    assert exact == 100
    assert worst_rel <= 1e-8
