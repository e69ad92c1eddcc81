"""Seeded synthetic candle series with injected pump events.

Used by the test-suite and handy for trying the CLI without exchange data.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Sequence

import numpy as np

from .market_data import Candle, CandleSeries, parse_timestamp

DEFAULT_START = "2018-04-20T00:00"


def _candles(opens, lows, highs, closes, volumes, start: int, interval: int) -> tuple[Candle, ...]:
    return tuple(
        Candle(start + i * interval, float(o), float(lo), float(hi), float(c), float(v))
        for i, (o, lo, hi, c, v) in enumerate(zip(opens, lows, highs, closes, volumes))
    )


def flat_series(
    n: int = 500,
    price: float = 1e-4,
    volume: float = 1e4,
    noise: float = 0.0,
    seed: int = 0,
    start: str = DEFAULT_START,
    interval_minutes: int = 60,
    exchange: str = "synthetic",
    symbol_pair: str = "FLAT/BTC",
) -> CandleSeries:
    """Constant candles, optionally with small multiplicative jitter."""
    rng = np.random.default_rng(seed)
    jitter = (lambda: np.exp(rng.normal(0.0, noise, n))) if noise > 0 else (lambda: np.ones(n))
    closes = price * jitter()
    opens = price * jitter()
    volumes = volume * jitter()
    highs = np.maximum(opens, closes) * (1 + noise)
    lows = np.minimum(opens, closes) * (1 - noise)
    return CandleSeries(
        exchange, symbol_pair,
        _candles(opens, lows, highs, closes, volumes, parse_timestamp(start), interval_minutes),
    )


def inject_spike(
    series: CandleSeries,
    position: int,
    length: int = 3,
    price_factor: float = 1.5,
    volume_factor: float = 20.0,
) -> CandleSeries:
    """Scale prices and volume of ``length`` candles starting at ``position``."""
    candles = list(series.candles)
    for i in range(position, min(position + length, len(candles))):
        c = candles[i]
        candles[i] = replace(
            c,
            open=c.open * price_factor,
            low=c.low * price_factor,
            high=c.high * price_factor,
            close=c.close * price_factor,
            volume=c.volume * volume_factor,
        )
    return series.with_candles(candles)


def event_positions(
    rng: np.random.Generator,
    n_candles: int,
    n_events: int,
    min_gap: int,
    spike_length: int,
) -> list[int]:
    """Sorted uniform event starts, consecutive starts more than ``min_gap`` apart."""
    room = n_candles - spike_length - (n_events - 1) * min_gap
    if room < n_events:
        raise ValueError(f"cannot place {n_events} events {min_gap} apart in {n_candles} candles")
    base = np.sort(rng.choice(room, size=n_events, replace=False))
    return [int(b + i * min_gap) for i, b in enumerate(base)]


def pump_series(
    n: int = 5000,
    n_events: int = 8,
    window: int = 24,
    seed: int = 0,
    spike_length: int = 3,
    price_factor: float = 1.5,
    volume_factor: float = 20.0,
    price: float = 1e-4,
    volume: float = 1e4,
    price_noise: float = 0.002,
    volume_noise: float = 0.3,
    start: str = DEFAULT_START,
    interval_minutes: int = 60,
    exchange: str = "synthetic",
    symbol_pair: str = "PUMP/BTC",
) -> tuple[CandleSeries, list[int]]:
    """Random-walk closes and log-normal volume with injected pump spikes.

    Events land anywhere in the series (any offset inside a frame) with
    consecutive starts more than ``2 * window`` candles apart.

    Returns the series and the candle ordinals where each spike starts.
    """
    rng = np.random.default_rng(seed)
    closes = price * np.exp(np.cumsum(rng.normal(0.0, price_noise, n)))
    opens = np.concatenate(([price], closes[:-1]))
    highs = np.maximum(opens, closes) * (1 + np.abs(rng.normal(0.0, price_noise, n)))
    lows = np.minimum(opens, closes) * (1 - np.abs(rng.normal(0.0, price_noise, n)))
    volumes = volume * np.exp(rng.normal(0.0, volume_noise, n))
    series = CandleSeries(
        exchange, symbol_pair,
        _candles(opens, lows, highs, closes, volumes, parse_timestamp(start), interval_minutes),
    )
    starts = event_positions(rng, n, n_events, 2 * window, spike_length)
    for s in starts:
        series = inject_spike(series, s, spike_length, price_factor, volume_factor)
    return series, starts


def frames_touched(starts: Sequence[int], length: int, window: int) -> list[set[int]]:
    """For each event, the indices of the disjoint frames its candles fall in."""
    return [{(s + k) // window for k in range(length)} for s in starts]
