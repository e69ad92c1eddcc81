import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import frame_distances
from pndetect.errors import ConfigError, DataError
from pndetect.market_data import Candle
from pndetect.predictor import PredictorConfig, StreamingPredictor, predict_stream, scan
from pndetect.synthetic import flat_series, inject_spike


@pytest.fixture(scope="module")
def spike_series():
    return inject_spike(flat_series(500, noise=0.002, seed=1), 300)


def spike_threshold(series):
    # halfway between the quiet baseline and the spike response
    d = np.array([f.distance for f in scan(series, PredictorConfig(threshold=1.0)).diagram])
    return float(np.median(d) + d.max()) / 2


def test_constant_series_never_alerts():
    series = flat_series(300)
    for t in (1e-12, 1e-3, 1.0, 1e9):
        assert predict_stream(series, PredictorConfig(threshold=t)) == []


def test_first_alert_contains_spike(spike_series):
    config = PredictorConfig(threshold=spike_threshold(spike_series))
    alerts = predict_stream(spike_series, config)
    assert alerts
    first = alerts[0].frame_start_index
    assert first <= 300 < first + config.window
    assert all(a.distance > a.threshold for a in alerts)


def test_diagram_matches_long_hand_oracle(spike_series):
    config = PredictorConfig(threshold=1.0, shift=5)
    run = scan(spike_series, config)
    rows = [c.features() for c in spike_series.candles]
    expected = frame_distances(rows, 24, 5, run.basis.mean.tolist(), run.basis.components.tolist())
    assert [d.frame_start_index for d in run.diagram] == [s for s, _ in expected]
    got = np.array([d.distance for d in run.diagram])
    want = np.array([d for _, d in expected])
    assert np.allclose(got, want, rtol=1e-9, atol=1e-9 * want.max())
    assert run.diagram[0].distance == 0.0


def test_stream_matches_batch_bytes(spike_series):
    config = PredictorConfig(threshold=spike_threshold(spike_series), shift=3)
    batch = predict_stream(spike_series, config)
    stream = StreamingPredictor(config)
    fed = []
    for candle in spike_series.candles:
        fed.extend(stream.feed(candle))
    stream.finish()
    encode = lambda alerts: "\n".join(json.dumps(a.to_record()) for a in alerts)
    assert encode(fed) == encode(batch)
    assert fed == stream.alerts
    assert [d.distance for d in stream.diagram] == [d.distance for d in scan(spike_series, config).diagram]


def test_first_only(spike_series):
    config = PredictorConfig(threshold=spike_threshold(spike_series), first_only=True)
    batch = predict_stream(spike_series, config)
    assert len(batch) == 1
    stream = StreamingPredictor(config)
    assert stream.feed_many(spike_series.candles) == batch
    assert stream.done


def test_shift_equal_window_is_disjoint(spike_series):
    run = scan(spike_series, PredictorConfig(threshold=1.0, shift=24))
    assert [d.frame_start_index for d in run.diagram] == list(range(0, 500 - 23, 24))


@pytest.mark.parametrize(
    "kwargs",
    [dict(threshold=1.0, shift=25), dict(threshold=1.0, shift=0), dict(threshold=0.0),
     dict(threshold=float("nan")), dict(threshold=1.0, warmup_frames=2), dict(threshold=1.0, window=0)],
)
def test_config_errors(kwargs):
    with pytest.raises(ConfigError):
        PredictorConfig(**kwargs)


def test_too_short():
    config = PredictorConfig(threshold=1.0)
    with pytest.raises(DataError, match="series too short"):
        scan(flat_series(239), config)
    stream = StreamingPredictor(config)
    stream.feed_many(flat_series(100).candles)
    with pytest.raises(DataError, match="series too short"):
        stream.finish()


def test_stream_rejects_bad_candles():
    stream = StreamingPredictor(PredictorConfig(threshold=1.0))
    stream.feed(Candle(10, 1, 1, 1, 1, 1))
    with pytest.raises(DataError, match="non-increasing timestamp at index 1"):
        stream.feed(Candle(10, 1, 1, 1, 1, 1))
    with pytest.raises(DataError, match="negative volume"):
        stream.feed(Candle(11, 1, 1, 1, 1, -1))


def test_normalized_mode_stream_equivalence(spike_series):
    config = PredictorConfig(threshold=1.0, normalize=True, features=("close", "volume"))
    run = scan(spike_series, config)
    stream = StreamingPredictor(config)
    stream.feed_many(spike_series.candles)
    assert [d.distance for d in stream.diagram] == [d.distance for d in run.diagram]


@settings(max_examples=25)
@given(st.integers(1, 24), st.floats(1e2, 1e5), st.floats(1e2, 1e5), st.integers(0, 1000))
def test_threshold_only_gates(shift, t1, t2, seed):
    series = inject_spike(flat_series(300, noise=0.01, seed=seed), 250)
    lo, hi = sorted((t1, t2))
    run_lo = scan(series, PredictorConfig(threshold=lo, shift=shift))
    run_hi = scan(series, PredictorConfig(threshold=hi, shift=shift))
    assert run_lo.diagram == run_hi.diagram
    hi_starts = {a.frame_start_index for a in run_hi.alerts}
    assert hi_starts <= {a.frame_start_index for a in run_lo.alerts}
    starts = [d.frame_start_index for d in run_lo.diagram]
    assert all(b - a == shift for a, b in zip(starts, starts[1:]))  # overlap W - Sh
