"""OHLCV candle parsing, validation and canonical serialization.

Input files are headered CSV with the columns ``Timestamp, Open, Low, High,
Close, Trading Volume`` in any order (header names are matched
case-insensitively). Timestamps may be ``M/D/YYYY H:MM`` or ISO-8601 and are
stored as integer epoch minutes. Gaps between candles are allowed and left
alone; framing works on record count, not wall-clock time.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

from .errors import DataError

FEATURES = ("open", "low", "high", "close", "volume")

# canonical header name -> Candle attribute
COLUMNS = {
    "timestamp": "timestamp",
    "open": "open",
    "low": "low",
    "high": "high",
    "close": "close",
    "trading volume": "volume",
}
CANONICAL_HEADER = ("Timestamp", "Open", "Low", "High", "Close", "Trading Volume")

_EPOCH = datetime(1970, 1, 1)
_FILENAME_RE = re.compile(r"^(?P<exchange>[^_]+)_(?P<base>[^-]+)-(?P<quote>.+)$")


@dataclass(frozen=True, slots=True)
class Candle:
    timestamp: int  # epoch minutes
    open: float
    low: float
    high: float
    close: float
    volume: float

    @property
    def datetime(self) -> datetime:
        return minutes_to_datetime(self.timestamp)

    def features(self, names: Sequence[str] = FEATURES) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in names)


@dataclass(frozen=True)
class CandleSeries:
    exchange: str
    symbol_pair: str
    candles: tuple[Candle, ...]

    def __len__(self) -> int:
        return len(self.candles)

    def __iter__(self):
        return iter(self.candles)

    def __getitem__(self, item):
        return self.candles[item]

    @property
    def pair_id(self) -> str:
        """Filesystem-safe identifier, the inverse of :func:`pair_from_filename`."""
        return f"{self.exchange}_{self.symbol_pair.replace('/', '-')}"

    @property
    def timestamps(self) -> np.ndarray:
        return np.fromiter((c.timestamp for c in self.candles), dtype=np.int64, count=len(self))

    def array(self, features: Sequence[str] = FEATURES) -> np.ndarray:
        """Return an ``(N, len(features))`` float array of the selected columns."""
        out = np.empty((len(self.candles), len(features)), dtype=float)
        for i, candle in enumerate(self.candles):
            out[i] = candle.features(features)
        return out

    def with_candles(self, candles: Iterable[Candle]) -> "CandleSeries":
        return CandleSeries(self.exchange, self.symbol_pair, tuple(candles))


@dataclass(frozen=True)
class Violation:
    index: int
    message: str

    def __str__(self) -> str:
        return self.message


class ValidationError(DataError):
    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        shown = "; ".join(str(v) for v in self.violations[:5])
        more = len(self.violations) - 5
        if more > 0:
            shown += f"; ... {more} more"
        super().__init__(f"{len(self.violations)} invalid candle(s): {shown}")


def minutes_to_datetime(minutes: int) -> datetime:
    return datetime.fromtimestamp(minutes * 60, tz=timezone.utc).replace(tzinfo=None)


def parse_timestamp(text: str) -> int:
    """Parse ``M/D/YYYY H:MM`` or ISO-8601 text into epoch minutes.

    Aware ISO timestamps are converted to UTC; naive ones are taken as given.
    Seconds are truncated.
    """
    text = text.strip()
    dt = None
    for fmt in ("%m/%d/%Y %H:%M", "%m/%d/%Y %H:%M:%S"):
        try:
            dt = datetime.strptime(text, fmt)
            break
        except ValueError:
            pass
    if dt is None:
        iso = text[:-1] + "+00:00" if text.endswith(("Z", "z")) else text
        dt = datetime.fromisoformat(iso)
    if dt.tzinfo is not None:
        dt = dt.astimezone(timezone.utc).replace(tzinfo=None)
    return int((dt - _EPOCH).total_seconds() // 60)


def format_timestamp(minutes: int) -> str:
    return minutes_to_datetime(minutes).strftime("%Y-%m-%dT%H:%M")


def pair_from_filename(path: str | Path) -> tuple[str, str]:
    """Split ``{exchange}_{base}-{quote}.csv`` into ``(exchange, "base/quote")``."""
    stem = Path(path).stem
    m = _FILENAME_RE.match(stem)
    if not m:
        return stem, stem
    return m["exchange"], f"{m['base']}/{m['quote']}"


def _header_map(header: Sequence[str]) -> dict[str, int]:
    positions = {}
    for i, name in enumerate(header):
        key = " ".join(name.strip().lower().split())
        if key in COLUMNS:
            if COLUMNS[key] in positions:
                raise DataError(f"duplicate column {name.strip()!r}", row="header")
            positions[COLUMNS[key]] = i
    missing = [c for c, attr in zip(CANONICAL_HEADER, COLUMNS.values()) if attr not in positions]
    if missing:
        raise DataError(f"missing column(s) {', '.join(missing)}", row="header")
    return positions


def parse_candles(
    stream: IO[str] | IO[bytes] | str | bytes,
    exchange: str = "unknown",
    symbol_pair: str = "unknown",
) -> CandleSeries:
    """Parse a headered CSV stream into a :class:`CandleSeries`.

    Rows are indexed from 0 (the first data row after the header) in error
    messages. The result is not validated; call :func:`validate_series`.
    """
    if isinstance(stream, bytes):
        stream = stream.decode("utf-8-sig")
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    else:
        stream = _text(stream)

    reader = csv.reader(stream, skipinitialspace=True)
    header = next(reader, None)
    if header is None or not any(h.strip() for h in header):
        raise DataError("empty series")
    header[0] = header[0].lstrip("\ufeff")
    positions = _header_map(header)
    width = len(header)

    candles = []
    for row_index, row in enumerate(reader):
        if not row or all(not cell.strip() for cell in row):
            continue
        candles.append(parse_row(row, positions, width, row_index))
    if not candles:
        raise DataError("empty series")
    return CandleSeries(exchange, symbol_pair, tuple(candles))


def iter_candles(stream: IO[str] | IO[bytes]) -> Iterator[Candle]:
    """Yield candles one row at a time, for feeds that arrive incrementally."""
    reader = csv.reader(_text(stream), skipinitialspace=True)
    header = next(reader, None)
    if header is None or not any(h.strip() for h in header):
        raise DataError("empty series")
    header[0] = header[0].lstrip("\ufeff")
    positions = _header_map(header)
    for row_index, row in enumerate(reader):
        if not row or all(not cell.strip() for cell in row):
            continue
        yield parse_row(row, positions, len(header), row_index)


def parse_row(row: Sequence[str], positions: dict[str, int], width: int, row_index: int) -> Candle:
    if len(row) != width:
        raise DataError(f"expected {width} columns, got {len(row)}", row=row_index)
    try:
        ts = parse_timestamp(row[positions["timestamp"]])
    except ValueError:
        raise DataError(f"unparseable timestamp {row[positions['timestamp']]!r}", row=row_index) from None
    values = {}
    for attr in FEATURES:
        cell = row[positions[attr]].strip()
        try:
            value = float(cell)
        except ValueError:
            raise DataError(f"unparseable {attr} value {cell!r}", row=row_index) from None
        if not math.isfinite(value):
            raise DataError(f"non-finite {attr} value {cell!r}", row=row_index)
        values[attr] = value
    return Candle(timestamp=ts, **values)


def _text(stream):
    # binary file objects (sys.stdin.buffer, open(..., "rb")) need decoding
    if isinstance(stream, io.TextIOBase) or hasattr(stream, "encoding"):
        return stream
    return io.TextIOWrapper(stream, encoding="utf-8-sig", newline="")


def read_series(path: str | Path) -> CandleSeries:
    exchange, pair = pair_from_filename(path)
    with open(path, newline="", encoding="utf-8-sig") as fh:
        return parse_candles(fh, exchange=exchange, symbol_pair=pair)


def find_violations(series: CandleSeries) -> list[Violation]:
    violations = []
    if not series.candles:
        violations.append(Violation(0, "empty series"))
    prev = None
    for i, c in enumerate(series.candles):
        if c.low > c.high:
            violations.append(Violation(i, f"low above high at index {i}"))
        if c.low > min(c.open, c.close):
            violations.append(Violation(i, f"low above open/close at index {i}"))
        if c.high < max(c.open, c.close):
            violations.append(Violation(i, f"high below open/close at index {i}"))
        if min(c.open, c.low, c.high, c.close) < 0:
            violations.append(Violation(i, f"negative price at index {i}"))
        if c.volume < 0:
            violations.append(Violation(i, f"negative volume at index {i}"))
        if prev is not None and c.timestamp <= prev:
            violations.append(Violation(i, f"non-increasing timestamp at index {i}"))
        prev = c.timestamp
    return violations


def validate_series(series: CandleSeries) -> CandleSeries:
    """Return ``series`` unchanged if every candle invariant holds.

    Raises :class:`ValidationError` listing every violation otherwise.
    """
    violations = find_violations(series)
    if violations:
        raise ValidationError(violations)
    return series


def write_candles(series: CandleSeries, stream: IO[str]) -> None:
    """Write the canonical CSV form (ISO minute timestamps, round-trip floats)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CANONICAL_HEADER)
    for c in series.candles:
        writer.writerow([format_timestamp(c.timestamp), *(repr(v) for v in c.features())])


def serialize_candles(series: CandleSeries) -> str:
    buf = io.StringIO()
    write_candles(series, buf)
    return buf.getvalue()
