"""Wi-Fi channel sensing on synthetic CFR/RSSI traces.

Simulate respiration and walking scenarios with a two-path channel, smooth
the amplitude streams with a streaming moving average, and detect breathing
rate, breath-holds and motion.
"""

from .core import CfrFrame, RssiSample, SubcarrierGrid, Trace, amplitudes, subcarrier_frequency
from .detect import (
    DetectorParams,
    EventInterval,
    band_sensitivity_ratio,
    detect_breath_holds,
    detect_motion,
    estimate_respiration_rate,
)
from .dsp import (
    MovingAverageState,
    aggregate_amplitude,
    detrend,
    ma_update,
    select_subcarrier,
    smooth_series,
)
from .io import read_trace, replay, write_trace
from .sim import (
    ChannelModel,
    MotionScenario,
    RespirationScenario,
    quantize_rssi,
    received_power,
    synthesize_motion,
    synthesize_respiration,
)

__version__ = "0.1.0"
