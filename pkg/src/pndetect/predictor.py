"""Sliding-window prediction against the initial frame.

A projection basis is fitted once on the first ``warmup_frames`` disjoint
frames and then frozen. The first frame's projection is the reference; each
window shifted by ``shift`` candles is projected and its Euclidean distance to
the reference is recorded. Every window whose distance exceeds the manual
threshold raises an alert.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .framing import DEFAULT_WINDOW, FeatureScaler, normalize_features
from .market_data import FEATURES, Candle, CandleSeries, find_violations, format_timestamp
from .projection import PcaBasis, fit_pca

DEFAULT_WARMUP = 10


@dataclass(frozen=True)
class PredictorConfig:
    threshold: float
    window: int = DEFAULT_WINDOW
    shift: int = 1
    warmup_frames: int = DEFAULT_WARMUP
    features: tuple[str, ...] = FEATURES
    normalize: bool = False
    first_only: bool = False

    def __post_init__(self):
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if not 1 <= self.shift <= self.window:
            raise ConfigError(f"shift must be between 1 and window ({self.window}), got {self.shift}")
        if not (math.isfinite(self.threshold) and self.threshold > 0):
            raise ConfigError(f"threshold must be a positive number, got {self.threshold}")
        if self.warmup_frames < 3:
            raise ConfigError(f"warmup must be >= 3 frames, got {self.warmup_frames}")
        object.__setattr__(self, "features", normalize_features(self.features))

    @property
    def min_candles(self) -> int:
        return max(self.window + self.shift, self.warmup_frames * self.window)


@dataclass(frozen=True)
class FrameDistance:
    frame_start_index: int
    timestamp: int
    distance: float


@dataclass(frozen=True)
class PredictionAlert:
    frame_start_index: int
    timestamp: int
    distance: float
    threshold: float

    def to_record(self) -> dict:
        return {
            "frame_start_index": self.frame_start_index,
            "timestamp": format_timestamp(self.timestamp),
            "distance": self.distance,
            "threshold": self.threshold,
        }


@dataclass
class PredictionRun:
    basis: PcaBasis
    diagram: list[FrameDistance] = field(default_factory=list)
    alerts: list[PredictionAlert] = field(default_factory=list)


class _Projector:
    """Frozen basis + optional scaler, fitted on the warm-up candles."""

    def __init__(self, config: PredictorConfig, warmup: Sequence[Candle]):
        self.config = config
        self.scaler = FeatureScaler.fit(warmup, config.features) if config.normalize else None
        w = config.window
        vectors = np.vstack([self.flatten(warmup[i * w:(i + 1) * w]) for i in range(config.warmup_frames)])
        self.basis = fit_pca(vectors)
        self.reference = self.point(warmup[:w])

    def flatten(self, candles: Sequence[Candle]) -> np.ndarray:
        rows = np.array([c.features(self.config.features) for c in candles], dtype=float)
        if self.scaler is not None:
            rows = self.scaler.transform(rows)
        return rows.reshape(-1)

    def point(self, candles: Sequence[Candle]) -> np.ndarray:
        centred = self.flatten(candles) - self.basis.mean
        return self.basis.components @ centred

    def distance(self, candles: Sequence[Candle]) -> float:
        delta = self.point(candles) - self.reference
        return float(math.hypot(delta[0], delta[1]))


def scan(series: CandleSeries, config: PredictorConfig) -> PredictionRun:
    """Batch pass over a complete series."""
    candles = series.candles
    if len(candles) < config.min_candles:
        raise DataError(
            f"series too short: {len(candles)} candles, need {config.min_candles} "
            f"(window {config.window}, shift {config.shift}, warmup {config.warmup_frames} frames)"
        )
    projector = _Projector(config, candles[:config.warmup_frames * config.window])
    run = PredictionRun(projector.basis)
    w = config.window
    for start in range(0, len(candles) - w + 1, config.shift):
        frame = candles[start:start + w]
        dis = projector.distance(frame)
        run.diagram.append(FrameDistance(start, frame[0].timestamp, dis))
        if dis > config.threshold:
            run.alerts.append(PredictionAlert(start, frame[0].timestamp, dis, config.threshold))
            if config.first_only:
                break
    return run


def predict_stream(series: CandleSeries, config: PredictorConfig) -> list[PredictionAlert]:
    return scan(series, config).alerts


class StreamingPredictor:
    """Incremental counterpart of :func:`scan`.

    Feed candles as they arrive; each call returns the alerts completed by
    that candle. Feeding a whole series yields exactly the batch alerts.
    """

    def __init__(self, config: PredictorConfig):
        self.config = config
        self.projector: _Projector | None = None
        self.diagram: list[FrameDistance] = []
        self.alerts: list[PredictionAlert] = []
        self.count = 0
        self.done = False
        self._buffer: list[Candle] = []
        self._buffer_start = 0  # candle ordinal of _buffer[0]
        self._next_start = 0
        self._last_ts: int | None = None

    @property
    def basis(self) -> PcaBasis | None:
        return self.projector.basis if self.projector else None

    def feed(self, candle: Candle) -> list[PredictionAlert]:
        if self.done:
            return []
        problems = find_violations(CandleSeries("", "", (candle,)))
        if problems:
            raise DataError(problems[0].message.replace("index 0", f"index {self.count}"), row=self.count)
        if self._last_ts is not None and candle.timestamp <= self._last_ts:
            raise DataError(f"non-increasing timestamp at index {self.count}", row=self.count)
        self._last_ts = candle.timestamp
        self._buffer.append(candle)
        self.count += 1

        warmup = self.config.warmup_frames * self.config.window
        if self.projector is None:
            if self.count < warmup:
                return []
            self.projector = _Projector(self.config, self._buffer[:warmup])
        return self._drain()

    def feed_many(self, candles: Iterable[Candle]) -> list[PredictionAlert]:
        out = []
        for c in candles:
            out.extend(self.feed(c))
        return out

    def finish(self) -> None:
        """Signal end of input; raises if the stream never filled the warm-up."""
        if self.count < self.config.min_candles:
            raise DataError(
                f"series too short: {self.count} candles, need {self.config.min_candles} "
                f"(window {self.config.window}, shift {self.config.shift}, "
                f"warmup {self.config.warmup_frames} frames)"
            )

    def _drain(self) -> list[PredictionAlert]:
        w = self.config.window
        emitted = []
        while not self.done and self._next_start + w <= self.count:
            offset = self._next_start - self._buffer_start
            frame = self._buffer[offset:offset + w]
            dis = self.projector.distance(frame)
            self.diagram.append(FrameDistance(self._next_start, frame[0].timestamp, dis))
            if dis > self.config.threshold:
                alert = PredictionAlert(self._next_start, frame[0].timestamp, dis, self.config.threshold)
                self.alerts.append(alert)
                emitted.append(alert)
                if self.config.first_only:
                    self.done = True
            self._next_start += self.config.shift
        # candles before the next window start are no longer needed
        drop = self._next_start - self._buffer_start
        if drop > 0:
            del self._buffer[:drop]
            self._buffer_start += drop
        return emitted
