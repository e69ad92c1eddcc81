"""Split a candle series into fixed windows and flatten each window.

Each frame of ``W`` consecutive candles becomes one vector of length
``k * W`` laid out candle-major: ``(candle0 features..., candle1 features...)``.
Frames never overlap here; overlapping windows exist only in the predictor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError
from .market_data import FEATURES, Candle, CandleSeries

DEFAULT_WINDOW = 24


@dataclass(frozen=True)
class Frame:
    index: int
    start: int  # ordinal of the first candle in the source series
    candles: tuple[Candle, ...]

    @property
    def stop(self) -> int:
        return self.start + len(self.candles)

    @property
    def first_timestamp(self) -> int:
        return self.candles[0].timestamp

    @property
    def last_timestamp(self) -> int:
        return self.candles[-1].timestamp


@dataclass(frozen=True)
class FrameVector:
    frame_index: int
    values: np.ndarray

    @property
    def dimension(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class FeatureScaler:
    """Per-feature z-score applied before concatenation."""

    features: tuple[str, ...]
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, candles: Sequence[Candle], features: Sequence[str] = FEATURES) -> "FeatureScaler":
        features = normalize_features(features)
        data = np.array([c.features(features) for c in candles], dtype=float)
        mean = data.mean(axis=0)
        std = data.std(axis=0, ddof=1) if len(data) > 1 else np.zeros(len(features))
        # constant columns are centred but left unscaled
        scale = np.where(std > 0, std, 1.0)
        return cls(features, mean, scale)

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean) / self.scale


def normalize_features(features: Sequence[str] | str | None) -> tuple[str, ...]:
    """Validate a feature selection and return it in canonical column order."""
    if features is None:
        return FEATURES
    if isinstance(features, str):
        features = [f for f in features.replace(" ", "").split(",") if f]
    chosen = {f.lower() for f in features}
    unknown = chosen - set(FEATURES)
    if unknown:
        raise ConfigError(f"unknown feature(s): {', '.join(sorted(unknown))}; choose from {', '.join(FEATURES)}")
    if not chosen:
        raise ConfigError("at least one feature must be selected")
    return tuple(f for f in FEATURES if f in chosen)


def extract_frames(series: CandleSeries, window: int) -> list[Frame]:
    """Cut ``floor(N / window)`` disjoint frames; trailing candles are dropped."""
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    n = len(series.candles)
    if n < window:
        raise DataError(f"series shorter than one window ({n} candles < window {window})")
    return [
        Frame(i, i * window, series.candles[i * window:(i + 1) * window])
        for i in range(n // window)
    ]


def flatten_frame(
    frame: Frame,
    features: Sequence[str] = FEATURES,
    scaler: FeatureScaler | None = None,
) -> FrameVector:
    features = normalize_features(features)
    rows = np.array([c.features(features) for c in frame.candles], dtype=float)
    if scaler is not None:
        if scaler.features != features:
            raise ConfigError("scaler was fitted on a different feature set")
        rows = scaler.transform(rows)
    return FrameVector(frame.index, rows.reshape(-1))


def frame_vectors(
    frames: Sequence[Frame],
    features: Sequence[str] = FEATURES,
    scaler: FeatureScaler | None = None,
) -> list[FrameVector]:
    return [flatten_frame(f, features, scaler) for f in frames]
